//! Truncated driven Rabi Hamiltonian and observables in the product basis.
//!
//! Basis ordering: |n, s⟩ sits at flat index 2n + (s-1), n = 0..=n_tr,
//! s ∈ {1, 2}. Convention fixed here once and used everywhere: s=1 is the
//! lower spin state (σ_z eigenvalue -1), s=2 the upper (+1).
//!
//! Truncation is hard: matrix elements reaching n > n_tr are dropped, and
//! convergence is the caller's business (see `diagnostics::convergence_sweep`).

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Bumped whenever matrix construction changes in a way that invalidates
/// cached decompositions.
pub const MATRIX_CONSTRUCTION_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum HamiltonianError {
    #[error("model parameter {name} = {value} is not finite")]
    NonFiniteParameter { name: &'static str, value: f64 },
    #[error("coupling g must be nonnegative, got {0}")]
    NegativeCoupling(f64),
    #[error("observable kind {0:?} has no generic builder; use its dedicated constructor")]
    UnsupportedKind(ObsKind),
    #[error("displacement transform is undefined at g = 0")]
    ZeroCouplingDisplacement,
}

/// Physical parameters of the driven Rabi model plus the boson truncation.
///
/// Units: boson energy = 1. `omega` is the spin splitting, `g` the spin-boson
/// coupling, `lambda` the drive amplitude. Matrix dimension is 2(n_tr + 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    pub g: f64,
    pub lambda: f64,
    pub n_tr: usize,
}

impl ModelParams {
    pub fn new(omega: f64, g: f64, lambda: f64, n_tr: usize) -> Result<Self, HamiltonianError> {
        for (name, value) in [("omega", omega), ("g", g), ("lambda", lambda)] {
            if !value.is_finite() {
                return Err(HamiltonianError::NonFiniteParameter { name, value });
            }
        }
        if g < 0.0 {
            return Err(HamiltonianError::NegativeCoupling(g));
        }
        Ok(ModelParams { omega, g, lambda, n_tr })
    }

    /// Hilbert-space dimension of the truncated model.
    pub fn dim(&self) -> usize {
        2 * (self.n_tr + 1)
    }

    pub fn with_n_tr(self, n_tr: usize) -> Self {
        ModelParams { n_tr, ..self }
    }

    /// Content hash identifying (parameters, construction version).
    ///
    /// Bit-level canonical: built from the IEEE representations, so equal
    /// parameters always map to equal keys.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(b"rabi-model-params");
        hasher.update(MATRIX_CONSTRUCTION_VERSION.to_le_bytes());
        hasher.update(self.omega.to_bits().to_le_bytes());
        hasher.update(self.g.to_bits().to_le_bytes());
        hasher.update(self.lambda.to_bits().to_le_bytes());
        hasher.update((self.n_tr as u64).to_le_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Spin label. `Down` is s=1 (σ_z = -1), `Up` is s=2 (σ_z = +1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Down,
    Up,
}

impl Spin {
    pub fn sigma_z(self) -> f64 {
        match self {
            Spin::Down => -1.0,
            Spin::Up => 1.0,
        }
    }

    fn offset(self) -> usize {
        match self {
            Spin::Down => 0,
            Spin::Up => 1,
        }
    }
}

/// Product-basis label (n, s) with its flat index 2n + (s-1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisIndex {
    pub n: usize,
    pub s: Spin,
}

impl BasisIndex {
    pub fn flat(&self) -> usize {
        2 * self.n + self.s.offset()
    }

    pub fn from_flat(i: usize) -> Self {
        BasisIndex {
            n: i / 2,
            s: if i.is_multiple_of(2) { Spin::Down } else { Spin::Up },
        }
    }
}

/// Tags for the observables the lab measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObsKind {
    /// Boson number a†a.
    Number,
    /// Quadrature x = (a† + a)/√2.
    X,
    /// Quadrature p = i(a† - a)/√2.
    P,
    SigmaX,
    SigmaY,
    SigmaZ,
    /// Interaction-energy observable x·σ_x.
    XSigmaX,
    Hamiltonian,
    Parity,
    Custom,
}

/// Hermitian matrix stored as real symmetric + real antisymmetric parts,
/// A = sym + i·antisym. Both parts are exact in storage: (i,j) and (j,i)
/// entries are written from the same computed value.
///
/// All observables here are real symmetric except σ_y and p, which are purely
/// imaginary (sym = 0).
#[derive(Debug, Clone)]
pub struct HermitianObservable {
    sym: Array2<f64>,
    antisym: Option<Array2<f64>>,
    kind: ObsKind,
}

impl HermitianObservable {
    pub fn from_symmetric(sym: Array2<f64>, kind: ObsKind) -> Self {
        debug_assert_eq!(sym.nrows(), sym.ncols());
        HermitianObservable { sym, antisym: None, kind }
    }

    pub fn from_antisymmetric(antisym: Array2<f64>, kind: ObsKind) -> Self {
        let dim = antisym.nrows();
        HermitianObservable {
            sym: Array2::zeros((dim, dim)),
            antisym: Some(antisym),
            kind,
        }
    }

    pub fn dim(&self) -> usize {
        self.sym.nrows()
    }

    pub fn kind(&self) -> ObsKind {
        self.kind
    }

    /// Real symmetric part.
    pub fn sym(&self) -> &Array2<f64> {
        &self.sym
    }

    /// Coefficient of the imaginary unit; `None` means identically zero.
    pub fn antisym(&self) -> Option<&Array2<f64>> {
        self.antisym.as_ref()
    }

    pub fn is_real(&self) -> bool {
        self.antisym.is_none()
    }

    /// Dense complex matrix A = sym + i·antisym.
    pub fn to_complex(&self) -> Array2<Complex64> {
        let d = self.dim();
        let mut out = Array2::<Complex64>::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                let im = self.antisym.as_ref().map_or(0.0, |a| a[(i, j)]);
                out[(i, j)] = Complex64::new(self.sym[(i, j)], im);
            }
        }
        out
    }

    /// ⟨ψ|A|ψ⟩ for a complex state; the exact value is real for Hermitian A,
    /// the imaginary residue is returned for diagnostics.
    pub fn expectation(&self, psi: &Array1<Complex64>) -> Complex64 {
        let d = self.dim();
        assert_eq!(psi.len(), d, "state dimension mismatch");
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..d {
                let im = self.antisym.as_ref().map_or(0.0, |a| a[(i, j)]);
                row += Complex64::new(self.sym[(i, j)], im) * psi[j];
            }
            acc += psi[i].conj() * row;
        }
        acc
    }

    /// Max-norm of the commutator with a diagonal matrix given by `diag`.
    ///
    /// For diagonal Π, ([A, Π])_ij = A_ij (π_j - π_i); this covers every
    /// parity check without forming products.
    pub fn commutator_max_norm_diag(&self, diag: &[f64]) -> f64 {
        let d = self.dim();
        assert_eq!(diag.len(), d);
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                let factor = diag[j] - diag[i];
                let re = self.sym[(i, j)] * factor;
                let im = self.antisym.as_ref().map_or(0.0, |a| a[(i, j)]) * factor;
                worst = worst.max((re * re + im * im).sqrt());
            }
        }
        worst
    }

    /// Diagonal as a vector (valid for diagonal observables such as parity).
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.sym[(i, i)]).collect()
    }
}

/// Symmetric write helper: store the same value at (i,j) and (j,i).
fn set_sym(m: &mut Array2<f64>, i: usize, j: usize, v: f64) {
    m[(i, j)] = v;
    m[(j, i)] = v;
}

/// Build H = a†a + (ω/2)σ_z + g(a† + a)σ_x + λσ_x, hard-truncated at n_tr.
pub fn build_hamiltonian(params: &ModelParams) -> Result<HermitianObservable, HamiltonianError> {
    let params = ModelParams::new(params.omega, params.g, params.lambda, params.n_tr)?;
    let d = params.dim();
    let mut h = Array2::<f64>::zeros((d, d));
    for n in 0..=params.n_tr {
        for s in [Spin::Down, Spin::Up] {
            let i = BasisIndex { n, s }.flat();
            h[(i, i)] = n as f64 + 0.5 * params.omega * s.sigma_z();
        }
        // drive λσ_x flips the spin within the boson level
        let down = BasisIndex { n, s: Spin::Down }.flat();
        let up = BasisIndex { n, s: Spin::Up }.flat();
        if params.lambda != 0.0 {
            set_sym(&mut h, down, up, params.lambda);
        }
        // coupling g(a†+a)σ_x connects (n, s) to (n+1, s̄) with √(n+1)
        if n < params.n_tr && params.g != 0.0 {
            let amp = params.g * ((n + 1) as f64).sqrt();
            let down_next = BasisIndex { n: n + 1, s: Spin::Down }.flat();
            let up_next = BasisIndex { n: n + 1, s: Spin::Up }.flat();
            set_sym(&mut h, down, up_next, amp);
            set_sym(&mut h, up, down_next, amp);
        }
    }
    Ok(HermitianObservable { sym: h, antisym: None, kind: ObsKind::Hamiltonian })
}

/// Build one of the local observables n, x, p, σ_α or xσ_x.
///
/// Kinds with dedicated constructors (`Hamiltonian`, `Parity`, `Custom`) are
/// rejected.
pub fn build_observable(kind: ObsKind, n_tr: usize) -> Result<HermitianObservable, HamiltonianError> {
    let d = 2 * (n_tr + 1);
    match kind {
        ObsKind::Number => {
            let mut m = Array2::<f64>::zeros((d, d));
            for i in 0..d {
                m[(i, i)] = BasisIndex::from_flat(i).n as f64;
            }
            Ok(HermitianObservable::from_symmetric(m, kind))
        }
        ObsKind::X => {
            // ⟨n+1|x|n⟩ = √((n+1)/2), spin untouched
            let mut m = Array2::<f64>::zeros((d, d));
            for n in 0..n_tr {
                let amp = ((n + 1) as f64 / 2.0).sqrt();
                for s in [Spin::Down, Spin::Up] {
                    let i = BasisIndex { n, s }.flat();
                    let j = BasisIndex { n: n + 1, s }.flat();
                    set_sym(&mut m, i, j, amp);
                }
            }
            Ok(HermitianObservable::from_symmetric(m, kind))
        }
        ObsKind::P => {
            // p = i(a† - a)/√2: antisym[n+1, n] = √((n+1)/2)
            let mut a = Array2::<f64>::zeros((d, d));
            for n in 0..n_tr {
                let amp = ((n + 1) as f64 / 2.0).sqrt();
                for s in [Spin::Down, Spin::Up] {
                    let i = BasisIndex { n, s }.flat();
                    let j = BasisIndex { n: n + 1, s }.flat();
                    a[(j, i)] = amp;
                    a[(i, j)] = -amp;
                }
            }
            Ok(HermitianObservable::from_antisymmetric(a, kind))
        }
        ObsKind::SigmaX => {
            let mut m = Array2::<f64>::zeros((d, d));
            for n in 0..=n_tr {
                let down = BasisIndex { n, s: Spin::Down }.flat();
                let up = BasisIndex { n, s: Spin::Up }.flat();
                set_sym(&mut m, down, up, 1.0);
            }
            Ok(HermitianObservable::from_symmetric(m, kind))
        }
        ObsKind::SigmaY => {
            // in (down, up) ordering: ⟨n,1|σ_y|n,2⟩ = i, ⟨n,2|σ_y|n,1⟩ = -i
            let mut a = Array2::<f64>::zeros((d, d));
            for n in 0..=n_tr {
                let down = BasisIndex { n, s: Spin::Down }.flat();
                let up = BasisIndex { n, s: Spin::Up }.flat();
                a[(down, up)] = 1.0;
                a[(up, down)] = -1.0;
            }
            Ok(HermitianObservable::from_antisymmetric(a, kind))
        }
        ObsKind::SigmaZ => {
            let mut m = Array2::<f64>::zeros((d, d));
            for i in 0..d {
                m[(i, i)] = BasisIndex::from_flat(i).s.sigma_z();
            }
            Ok(HermitianObservable::from_symmetric(m, kind))
        }
        ObsKind::XSigmaX => {
            // product x·σ_x: boson hop and spin flip together
            let mut m = Array2::<f64>::zeros((d, d));
            for n in 0..n_tr {
                let amp = ((n + 1) as f64 / 2.0).sqrt();
                let down = BasisIndex { n, s: Spin::Down }.flat();
                let up = BasisIndex { n, s: Spin::Up }.flat();
                let down_next = BasisIndex { n: n + 1, s: Spin::Down }.flat();
                let up_next = BasisIndex { n: n + 1, s: Spin::Up }.flat();
                set_sym(&mut m, down, up_next, amp);
                set_sym(&mut m, up, down_next, amp);
            }
            Ok(HermitianObservable::from_symmetric(m, kind))
        }
        other => Err(HamiltonianError::UnsupportedKind(other)),
    }
}

/// Parity Π = σ_z·(-1)^(a†a), the Z₂ symmetry of the undriven model.
/// Diagonal with entries ±1 and Π² = 1.
pub fn build_parity(n_tr: usize) -> HermitianObservable {
    let d = 2 * (n_tr + 1);
    let mut m = Array2::<f64>::zeros((d, d));
    for i in 0..d {
        let b = BasisIndex::from_flat(i);
        let boson_sign = if b.n.is_multiple_of(2) { 1.0 } else { -1.0 };
        m[(i, i)] = boson_sign * b.s.sigma_z();
    }
    HermitianObservable::from_symmetric(m, ObsKind::Parity)
}

/// Hamiltonian with the spin drive removed by the exact displacement
/// transform, a → a - λ/(2g):
///
///   H' = a†a + (ω/2)σ_z + g(a† + a)σ_x - (λ/2g)(a† + a) + λ²/(4g²).
///
/// The boson drive and the constant shift follow from cancelling the spin
/// drive exactly, so H' is unitarily equivalent to `build_hamiltonian` and
/// the spectra agree absolutely (up to truncation error), not just by gaps.
pub fn build_displaced_hamiltonian(
    params: &ModelParams,
) -> Result<HermitianObservable, HamiltonianError> {
    if params.g == 0.0 {
        return Err(HamiltonianError::ZeroCouplingDisplacement);
    }
    let undriven = ModelParams::new(params.omega, params.g, 0.0, params.n_tr)?;
    let mut h = build_hamiltonian(&undriven)?.sym;
    let drive = -params.lambda / (2.0 * params.g);
    let shift = params.lambda * params.lambda / (4.0 * params.g * params.g);
    let d = undriven.dim();
    for i in 0..d {
        h[(i, i)] += shift;
    }
    if drive != 0.0 {
        // boson drive c(a† + a): same-spin hop with amplitude c√(n+1)
        for n in 0..params.n_tr {
            let amp = drive * ((n + 1) as f64).sqrt();
            for s in [Spin::Down, Spin::Up] {
                let i = BasisIndex { n, s }.flat();
                let j = BasisIndex { n: n + 1, s }.flat();
                set_sym(&mut h, i, j, amp);
            }
        }
    }
    Ok(HermitianObservable { sym: h, antisym: None, kind: ObsKind::Hamiltonian })
}
