//! Quantum-quench protocol and spectral-representation time evolution.
//!
//! A quench prepares the ground state of one Hamiltonian and evolves it under
//! another. With the quenched Hamiltonian's eigenpairs {E_ν, |ψ_ν⟩} and
//! expansion coefficients C_ν, everything follows from
//!
//!   ⟨A(t)⟩ = Σ_ν |C_ν|² A_νν + Σ_{ν≠μ} C_ν* C_μ e^{i(E_ν-E_μ)t} A_νμ,
//!
//! the t → ∞ average being the diagonal ensemble Σ_ν |C_ν|² A_νν.

use crate::eigensolver::{decompose_hamiltonian, EigenDecomposition, EigenError};
use crate::hamiltonian::{HamiltonianError, HermitianObservable, ModelParams, ObsKind};
use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::sync::Arc;
use thiserror::Error;

/// Coefficients with |C_ν|² below this are dropped from double sums and
/// sampling loops; the discarded weight is reported alongside results.
pub const COEFFICIENT_CUTOFF: f64 = 1e-16;

/// Two energy gaps closer than this count as colliding for the spectral
/// variance formula.
pub const GAP_COLLISION_TOL: f64 = 1e-10;

/// Collision fraction above which the spectral variance falls back to time
/// sampling.
pub const GAP_COLLISION_LIMIT: f64 = 0.01;

#[derive(Debug, Error)]
pub enum QuenchError {
    #[error("initial and final parameters must share n_tr (got {initial} vs {final_})")]
    TruncationMismatch { initial: usize, final_: usize },
    #[error("dimension mismatch: observable is {obs}, decomposition is {dec}")]
    DimensionMismatch { obs: usize, dec: usize },
    #[error("coefficients are not normalized: Σ|C|² = {norm}")]
    Unnormalized { norm: f64 },
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
}

/// Observable transformed to the eigenbasis of a decomposition,
/// A_νμ = ⟨ψ_ν|A|ψ_μ⟩. Hermitian by construction (symmetrized exactly).
#[derive(Debug, Clone)]
pub struct ObservableInEigenbasis {
    elements: Array2<Complex64>,
    kind: ObsKind,
}

impl ObservableInEigenbasis {
    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn kind(&self) -> ObsKind {
        self.kind
    }

    pub fn elements(&self) -> &Array2<Complex64> {
        &self.elements
    }

    /// Diagonal matrix elements A_νν (exactly real after symmetrization).
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.elements[(i, i)].re).collect()
    }
}

/// VᵀAV with the complex part carried through the sym/antisym split.
pub fn to_eigenbasis(
    obs: &HermitianObservable,
    dec: &EigenDecomposition,
) -> Result<ObservableInEigenbasis, QuenchError> {
    if obs.dim() != dec.dim() {
        return Err(QuenchError::DimensionMismatch { obs: obs.dim(), dec: dec.dim() });
    }
    let v = dec.vectors();
    let re = v.t().dot(&obs.sym().dot(v));
    let im = obs.antisym().map(|a| v.t().dot(&a.dot(v)));
    let d = dec.dim();
    let mut elements = Array2::<Complex64>::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            // exact Hermitian symmetrization of matmul roundoff
            let re_s = 0.5 * (re[(i, j)] + re[(j, i)]);
            let im_s = im.as_ref().map_or(0.0, |m| 0.5 * (m[(i, j)] - m[(j, i)]));
            elements[(i, j)] = Complex64::new(re_s, im_s);
        }
    }
    Ok(ObservableInEigenbasis { elements, kind: obs.kind() })
}

/// Expansion of an initial state in the quenched Hamiltonian's eigenbasis.
#[derive(Debug, Clone)]
pub struct QuenchState {
    coeffs: Array1<Complex64>,
    energy: f64,
    dec: Arc<EigenDecomposition>,
}

/// Time-sampling protocol for empirical long-time statistics.
#[derive(Debug, Clone, Copy)]
pub struct TimeSampling {
    pub n_samples: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub seed: u64,
}

impl Default for TimeSampling {
    fn default() -> Self {
        TimeSampling { n_samples: 10_000, t_min: 0.0, t_max: 1e6, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceMode {
    /// Closed-form infinite-time formula (assumes nondegenerate gaps).
    Spectral,
    /// Empirical standard deviation over random times.
    Sampled(TimeSamplingTag),
}

/// `VarianceMode::Sampled` carries its protocol out-of-band to keep the enum
/// Copy; see `long_time_variance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeSamplingTag;

/// Standard deviation of ⟨A(t)⟩ over infinite time, with provenance.
#[derive(Debug, Clone)]
pub struct VarianceResult {
    /// δ_A, the standard deviation (not the variance).
    pub delta: f64,
    /// Fraction of coinciding energy-gap pairs in the support window.
    pub gap_collision_fraction: f64,
    /// Σ|C_ν|² discarded by the coefficient cutoff.
    pub dropped_weight: f64,
    /// True when the spectral mode detected too many gap collisions and the
    /// result came from time sampling instead.
    pub fell_back_to_sampling: bool,
}

/// Prepare the quench: ground state of H(initial) expanded in the eigenbasis
/// of H(final). Both parameter sets must share the truncation.
pub fn quench(initial: &ModelParams, final_: &ModelParams) -> Result<QuenchState, QuenchError> {
    if initial.n_tr != final_.n_tr {
        return Err(QuenchError::TruncationMismatch {
            initial: initial.n_tr,
            final_: final_.n_tr,
        });
    }
    let gs = crate::eigensolver::ground_state(initial)?;
    let dec = Arc::new(decompose_hamiltonian(final_)?);
    Ok(QuenchState::from_ground_state(gs.vector.view(), dec))
}

impl QuenchState {
    /// Expand a normalized product-basis vector in `dec`'s eigenbasis.
    pub fn from_ground_state(initial: ArrayView1<'_, f64>, dec: Arc<EigenDecomposition>) -> Self {
        assert_eq!(initial.len(), dec.dim());
        let c_real = dec.vectors().t().dot(&initial);
        let coeffs = c_real.mapv(|x| Complex64::new(x, 0.0));
        let energy = coeffs
            .iter()
            .zip(dec.energies())
            .map(|(c, e)| c.norm_sqr() * e)
            .sum();
        QuenchState { coeffs, energy, dec }
    }

    /// Build directly from expansion coefficients (must be normalized).
    pub fn from_coefficients(
        coeffs: Array1<Complex64>,
        dec: Arc<EigenDecomposition>,
    ) -> Result<Self, QuenchError> {
        let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(QuenchError::Unnormalized { norm });
        }
        let energy = coeffs
            .iter()
            .zip(dec.energies())
            .map(|(c, e)| c.norm_sqr() * e)
            .sum();
        Ok(QuenchState { coeffs, energy, dec })
    }

    pub fn coefficients(&self) -> &Array1<Complex64> {
        &self.coeffs
    }

    /// ⟨Ψ|H|Ψ⟩ = Σ_ν |C_ν|² E_ν.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn decomposition(&self) -> &Arc<EigenDecomposition> {
        &self.dec
    }

    /// Σ|C_ν|², 1 up to roundoff.
    pub fn norm_squared(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Populations |C_l|² of the quenched Hamiltonian's eigenstates. Time
    /// independent under the evolution.
    pub fn populations(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm_sqr()).collect()
    }

    /// ⟨A(t)⟩ including cross terms; the exact value is real for Hermitian A,
    /// the imaginary part is returned as a numerical diagnostic.
    pub fn expectation_at_complex(&self, obs: &ObservableInEigenbasis, t: f64) -> Complex64 {
        assert!(t.is_finite());
        let d = self.coeffs.len();
        assert_eq!(obs.dim(), d);
        let z: Vec<Complex64> = self
            .coeffs
            .iter()
            .zip(self.dec.energies())
            .map(|(c, e)| c * Complex64::from_polar(1.0, -e * t))
            .collect();
        let a = obs.elements();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            let zi_conj = z[i].conj();
            let row = a.row(i);
            let mut inner = Complex64::new(0.0, 0.0);
            for j in 0..d {
                inner += row[j] * z[j];
            }
            acc += zi_conj * inner;
        }
        acc
    }

    /// Real part of ⟨A(t)⟩.
    pub fn expectation_at(&self, obs: &ObservableInEigenbasis, t: f64) -> f64 {
        self.expectation_at_complex(obs, t).re
    }

    /// Diagonal-ensemble (infinite-time) average Σ_ν |C_ν|² A_νν.
    pub fn long_time_average(&self, obs: &ObservableInEigenbasis) -> f64 {
        assert_eq!(obs.dim(), self.coeffs.len());
        self.coeffs
            .iter()
            .enumerate()
            .map(|(nu, c)| c.norm_sqr() * obs.elements()[(nu, nu)].re)
            .sum()
    }

    /// Indices with |C_ν|² ≥ cutoff plus the discarded weight.
    pub fn support(&self, cutoff: f64) -> (Vec<usize>, f64) {
        let mut idx = Vec::new();
        let mut dropped = 0.0;
        for (nu, c) in self.coeffs.iter().enumerate() {
            if c.norm_sqr() >= cutoff {
                idx.push(nu);
            } else {
                dropped += c.norm_sqr();
            }
        }
        (idx, dropped)
    }

    /// ⟨A(t_k)⟩ for a batch of times, restricted to the coefficient support
    /// window. Evaluation order is fixed, so results are reproducible.
    pub fn sample_expectations(&self, obs: &ObservableInEigenbasis, times: &[f64]) -> Vec<f64> {
        let (idx, _) = self.support(COEFFICIENT_CUTOFF);
        let w = idx.len();
        let energies: Vec<f64> = idx.iter().map(|&nu| self.dec.energy(nu)).collect();
        let coeffs: Vec<Complex64> = idx.iter().map(|&nu| self.coeffs[nu]).collect();
        let mut a_sub = Array2::<Complex64>::zeros((w, w));
        for (i, &nu) in idx.iter().enumerate() {
            for (j, &mu) in idx.iter().enumerate() {
                a_sub[(i, j)] = obs.elements()[(nu, mu)];
            }
        }
        times
            .iter()
            .map(|&t| {
                let z: Vec<Complex64> = coeffs
                    .iter()
                    .zip(energies.iter())
                    .map(|(c, e)| c * Complex64::from_polar(1.0, -e * t))
                    .collect();
                let mut acc = 0.0_f64;
                for i in 0..w {
                    let zi = z[i].conj();
                    let row = a_sub.row(i);
                    let mut inner = Complex64::new(0.0, 0.0);
                    for j in 0..w {
                        inner += row[j] * z[j];
                    }
                    acc += (zi * inner).re;
                }
                acc
            })
            .collect()
    }

    /// Uniform random times in [t_min, t_max], fully determined by the seed.
    pub fn sampling_times(sampling: &TimeSampling) -> Vec<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(sampling.seed);
        (0..sampling.n_samples)
            .map(|_| rng.random_range(sampling.t_min..sampling.t_max))
            .collect()
    }

    /// Standard deviation δ_A of ⟨A(t)⟩ over infinite time.
    ///
    /// Spectral mode evaluates √(Σ_{ν≠μ} |C_ν|²|C_μ|²|A_νμ|²), valid when
    /// energy gaps are nondegenerate; the collision fraction is measured and
    /// the calculation falls back to time sampling when it exceeds
    /// `GAP_COLLISION_LIMIT`. Sampled mode returns the empirical standard
    /// deviation over the given protocol.
    pub fn long_time_variance(
        &self,
        obs: &ObservableInEigenbasis,
        mode: VarianceMode,
        sampling: &TimeSampling,
    ) -> VarianceResult {
        let (idx, dropped) = self.support(COEFFICIENT_CUTOFF);
        match mode {
            VarianceMode::Sampled(_) => {
                let delta = self.sampled_std(obs, sampling);
                VarianceResult {
                    delta,
                    gap_collision_fraction: 0.0,
                    dropped_weight: dropped,
                    fell_back_to_sampling: false,
                }
            }
            VarianceMode::Spectral => {
                let collision = gap_collision_fraction(self.dec.energies(), &idx);
                if collision > GAP_COLLISION_LIMIT {
                    let delta = self.sampled_std(obs, sampling);
                    return VarianceResult {
                        delta,
                        gap_collision_fraction: collision,
                        dropped_weight: dropped,
                        fell_back_to_sampling: true,
                    };
                }
                let a = obs.elements();
                let mut acc = 0.0_f64;
                for &nu in &idx {
                    let w_nu = self.coeffs[nu].norm_sqr();
                    for &mu in &idx {
                        if mu == nu {
                            continue;
                        }
                        let w_mu = self.coeffs[mu].norm_sqr();
                        acc += w_nu * w_mu * a[(nu, mu)].norm_sqr();
                    }
                }
                VarianceResult {
                    delta: acc.sqrt(),
                    gap_collision_fraction: collision,
                    dropped_weight: dropped,
                    fell_back_to_sampling: false,
                }
            }
        }
    }

    fn sampled_std(&self, obs: &ObservableInEigenbasis, sampling: &TimeSampling) -> f64 {
        let times = Self::sampling_times(sampling);
        let values = self.sample_expectations(obs, &times);
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        var.sqrt()
    }

    /// |Ψ(t)⟩ = Σ_ν C_ν e^{-iE_ν t} |ψ_ν⟩ mapped back to the product basis.
    pub fn product_state_at(&self, t: f64) -> Array1<Complex64> {
        assert!(t.is_finite());
        let z_re: Array1<f64> = self
            .coeffs
            .iter()
            .zip(self.dec.energies())
            .map(|(c, e)| (c * Complex64::from_polar(1.0, -e * t)).re)
            .collect();
        let z_im: Array1<f64> = self
            .coeffs
            .iter()
            .zip(self.dec.energies())
            .map(|(c, e)| (c * Complex64::from_polar(1.0, -e * t)).im)
            .collect();
        let re = self.dec.vectors().dot(&z_re);
        let im = self.dec.vectors().dot(&z_im);
        Array1::from_iter(re.iter().zip(im.iter()).map(|(&r, &i)| Complex64::new(r, i)))
    }
}

/// Fraction of coinciding gap pairs among the support-window energies.
fn gap_collision_fraction(energies: &[f64], idx: &[usize]) -> f64 {
    let w = idx.len();
    if w < 3 {
        return 0.0;
    }
    let mut gaps = Vec::with_capacity(w * (w - 1) / 2);
    for a in 0..w {
        for b in (a + 1)..w {
            gaps.push((energies[idx[b]] - energies[idx[a]]).abs());
        }
    }
    gaps.sort_by(f64::total_cmp);
    let mut collisions = 0usize;
    for k in 1..gaps.len() {
        if gaps[k] - gaps[k - 1] < GAP_COLLISION_TOL {
            collisions += 1;
        }
    }
    collisions as f64 / gaps.len() as f64
}
