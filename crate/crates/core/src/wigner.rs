//! Reduced boson-field density matrix and its Wigner distribution.
//!
//! The Wigner function is evaluated in the normalized convention
//!
//!   W(x,p) = (1/2π) ∫ dy ⟨x-y/2|ρ_f|x+y/2⟩ e^{ipy},
//!
//! which makes ∫∫ W dx dp = 1 and W(0,0) = (1/π)·tr(ρ_f Π_b) with Π_b the
//! boson parity; the vacuum gives W = (1/π)e^{-x²-p²}. Position
//! wavefunctions come from the stable normalized-Hermite three-term
//! recurrence and the y-integral is a discretized trapezoid on a grid
//! commensurate with the x-axis, so the whole evaluation is deterministic.

use crate::eigensolver::{eigendecompose, EigenError};
use crate::hamiltonian::ModelParams;
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

/// Eigencomponents of ρ_f below this weight are dropped from the transform.
pub const COMPONENT_WEIGHT_CUTOFF: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum WignerError {
    #[error("density matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("density matrix trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("state vector length {0} is not twice a Fock dimension")]
    OddDimension(usize),
    #[error("state is not normalized: ⟨ψ|ψ⟩ = {0}")]
    UnnormalizedState(f64),
    #[error(
        "grid half-width {half_width} too small for the state: support fraction inside \
         {support_fraction:.6}, required half-width ≈ {required:.1}"
    )]
    GridTooSmall { half_width: f64, support_fraction: f64, required: f64 },
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// |Ψ(t)⟩ in the product basis, the input the field reduction wants.
/// Convenience alias for [`crate::quench::QuenchState::product_state_at`].
pub fn state_at_time(state: &crate::quench::QuenchState, t: f64) -> Array1<Complex64> {
    state.product_state_at(t)
}

/// Trace out the spin: ρ_f[n,m] = Σ_s ψ(n,s) ψ*(m,s).
///
/// The result is Hermitian, trace one, positive semidefinite and of rank at
/// most two (one term per spin component).
pub fn reduce_field(state: &Array1<Complex64>) -> Result<Array2<Complex64>, WignerError> {
    let d = state.len();
    if !d.is_multiple_of(2) || d == 0 {
        return Err(WignerError::OddDimension(d));
    }
    let norm: f64 = state.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(WignerError::UnnormalizedState(norm));
    }
    let n_fock = d / 2;
    let mut rho = Array2::<Complex64>::zeros((n_fock, n_fock));
    for s in 0..2usize {
        for n in 0..n_fock {
            let psi_n = state[2 * n + s];
            if psi_n == Complex64::new(0.0, 0.0) {
                continue;
            }
            for m in 0..n_fock {
                rho[(n, m)] += psi_n * state[2 * m + s].conj();
            }
        }
    }
    Ok(rho)
}

/// tr(ρ²), 1 for pure states.
pub fn field_purity(rho: &Array2<Complex64>) -> f64 {
    let n = rho.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (rho[(i, j)] * rho[(j, i)]).re;
        }
    }
    acc
}

/// Eigendecomposition of a complex Hermitian matrix through the real
/// symmetric embedding [[Re, -Im], [Im, Re]].
///
/// Every eigenvalue of the embedding is doubled (v and iv give the same
/// complex vector up to phase); one representative per copy is recovered by
/// complex Gram-Schmidt inside each numerically equal cluster. Only
/// eigenpairs with |weight| ≥ `cutoff` are returned, largest first.
pub fn complex_hermitian_eigendecompose(
    rho: &Array2<Complex64>,
    cutoff: f64,
) -> Result<Vec<(f64, Array1<Complex64>)>, WignerError> {
    let n = rho.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((rho[(i, j)] - rho[(j, i)].conj()).norm());
        }
    }
    if worst > 1e-10 {
        return Err(WignerError::NotHermitian(worst));
    }
    let mut embed = Array2::<f64>::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            let z = rho[(i, j)];
            embed[(i, j)] = z.re;
            embed[(i, j + n)] = -z.im;
            embed[(i + n, j)] = z.im;
            embed[(i + n, j + n)] = z.re;
        }
    }
    let dec = eigendecompose(&embed)?;

    let mut out: Vec<(f64, Array1<Complex64>)> = Vec::new();
    let evals = dec.energies();
    let mut start = 2 * n;
    // walk descending so the dominant components come out first
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    for k in (0..2 * n).rev() {
        if start == 2 * n {
            start = k;
            continue;
        }
        if (evals[start] - evals[k]).abs() > 1e-9 {
            clusters.push((k + 1, start));
            start = k;
        }
    }
    if start != 2 * n {
        clusters.push((0, start));
    }

    for (lo, hi) in clusters {
        let w = evals[hi];
        if w.abs() < cutoff {
            continue;
        }
        let mut accepted: Vec<Array1<Complex64>> = Vec::new();
        let cluster_size = hi - lo + 1;
        let want = cluster_size / 2;
        for k in lo..=hi {
            let col = dec.vector(k);
            let mut phi = Array1::<Complex64>::zeros(n);
            for i in 0..n {
                phi[i] = Complex64::new(col[i], col[i + n]);
            }
            for prev in &accepted {
                let overlap: Complex64 =
                    prev.iter().zip(phi.iter()).map(|(a, b)| a.conj() * b).sum();
                for (x, p) in phi.iter_mut().zip(prev.iter()) {
                    *x -= overlap * p;
                }
            }
            let norm: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
            if norm > 0.5 {
                let scale = 1.0 / norm.sqrt();
                accepted.push(phi.mapv(|z| z * scale));
                if accepted.len() == want {
                    break;
                }
            }
        }
        for phi in accepted {
            out.push((w, phi));
        }
    }
    Ok(out)
}

/// Uniform symmetric phase-space grid.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub half_width_x: f64,
    pub half_width_p: f64,
    pub points_x: usize,
    pub points_p: usize,
}

impl GridSpec {
    pub fn square(half_width: f64, points: usize) -> Self {
        GridSpec {
            half_width_x: half_width,
            half_width_p: half_width,
            points_x: points,
            points_p: points,
        }
    }

    /// Default grid covering both displaced wells: x, p ∈ [-2g-5, 2g+5] with
    /// 512 points per axis.
    pub fn default_for(params: &ModelParams) -> Self {
        GridSpec::square(2.0 * params.g + 5.0, 512)
    }
}

/// Origin of the state whose field was reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WignerSource {
    EvolvedState,
    Eigenstate,
    Custom,
}

/// Wigner distribution on a phase-space grid, with its numerical
/// self-checks.
#[derive(Debug, Clone)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    /// values[(i, j)] = W(x_i, p_j).
    pub values: Array2<f64>,
    pub time: Option<f64>,
    pub source: WignerSource,
    /// Largest |Im| of the discretized integral over the grid. The exact
    /// integral is real.
    pub max_imag_residue: f64,
    /// W(0,0) evaluated by quadrature.
    pub origin_value: f64,
    /// (1/π)·tr(ρ_f Π_b), the analytic value of W(0,0).
    pub origin_parity_value: f64,
}

impl WignerGrid {
    fn dx(&self) -> f64 {
        self.x_axis[1] - self.x_axis[0]
    }

    fn dp(&self) -> f64 {
        self.p_axis[1] - self.p_axis[0]
    }

    /// Σ W Δx Δp, 1 up to quadrature error for a grid covering the state.
    pub fn normalization(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dx() * self.dp()
    }

    /// Negativity volume ∫|W| dx dp - ∫W dx dp; positive exactly when W
    /// takes negative values (interference).
    pub fn negativity_volume(&self) -> f64 {
        let abs: f64 = self.values.iter().map(|v| v.abs()).sum();
        let plain: f64 = self.values.iter().sum();
        (abs - plain) * self.dx() * self.dp()
    }

    /// Marginal ∫ W dp at each x grid point.
    pub fn marginal_x(&self) -> Vec<f64> {
        let dp = self.dp();
        (0..self.x_axis.len())
            .map(|i| self.values.row(i).sum() * dp)
            .collect()
    }
}

/// Normalized oscillator eigenfunctions ψ_0..ψ_{n_max-1} at position u.
///
/// Upward recurrence of the pre-normalized functions; safe for n in the
/// hundreds. Far outside the classically allowed region the functions
/// underflow to zero, which is below every tolerance used here.
fn hermite_functions(u: f64, n_max: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), n_max);
    let psi0 = (-0.5 * u * u).exp() / std::f64::consts::PI.powf(0.25);
    out[0] = psi0;
    if n_max == 1 {
        return;
    }
    out[1] = std::f64::consts::SQRT_2 * u * psi0;
    for n in 2..n_max {
        let nf = n as f64;
        out[n] = (2.0 / nf).sqrt() * u * out[n - 1] - ((nf - 1.0) / nf).sqrt() * out[n - 2];
    }
}

/// Wigner transform of a boson density matrix on the given grid.
///
/// The grid must cover the state's support; the check estimates the needed
/// half-width from the Fock-population quantile and reports the support
/// fraction actually inside the grid on failure.
pub fn wigner_transform(
    rho: &Array2<Complex64>,
    grid: &GridSpec,
    time: Option<f64>,
    source: WignerSource,
) -> Result<WignerGrid, WignerError> {
    let n_fock = rho.nrows();
    let trace: f64 = (0..n_fock).map(|i| rho[(i, i)].re).sum();
    if (trace - 1.0).abs() > 1e-8 {
        return Err(WignerError::BadTrace(trace));
    }

    // support estimate from the Fock occupation tail: the grid must hold all
    // but ~1e-5 of the mass with a margin for the turning-point tail, so the
    // 1e-4 normalization target stays reachable
    let occupations: Vec<f64> = (0..n_fock).map(|i| rho[(i, i)].re.max(0.0)).collect();
    let mut cum = 0.0;
    let mut n_support = n_fock - 1;
    for (n, &w) in occupations.iter().enumerate() {
        cum += w;
        if cum >= 1.0 - 1e-5 {
            n_support = n;
            break;
        }
    }
    let required = (2.0 * n_support as f64 + 1.0).sqrt() + 2.0;
    let half_width = grid.half_width_x.min(grid.half_width_p);
    if half_width < required {
        let support_fraction: f64 = occupations
            .iter()
            .enumerate()
            .filter(|(n, _)| (2.0 * *n as f64 + 1.0).sqrt() <= half_width)
            .map(|(_, w)| w)
            .sum();
        return Err(WignerError::GridTooSmall { half_width, support_fraction, required });
    }

    let components = complex_hermitian_eigendecompose(rho, COMPONENT_WEIGHT_CUTOFF)?;

    let nx = grid.points_x.max(2);
    let np = grid.points_p.max(2);
    let dx = 2.0 * grid.half_width_x / (nx - 1) as f64;
    let x_axis: Vec<f64> = (0..nx).map(|i| -grid.half_width_x + i as f64 * dx).collect();
    let dp = 2.0 * grid.half_width_p / (np - 1) as f64;
    let p_axis: Vec<f64> = (0..np).map(|j| -grid.half_width_p + j as f64 * dp).collect();

    // y-grid commensurate with the x-grid: Δy = 2Δx/m resolves the fastest
    // oscillation k_max + p_max with at least 2x margin
    let k_max = (2.0 * n_fock as f64 + 1.0).sqrt();
    let dy_target = std::f64::consts::PI / (2.2 * (k_max + grid.half_width_p));
    let m = ((2.0 * dx / dy_target).ceil() as usize).max(1);
    let dy = 2.0 * dx / m as f64;
    let h = dx / m as f64;
    let u_supp = (2.0 * (n_fock - 1) as f64 + 1.0).sqrt() + 8.0;
    let y_max = 2.0 * u_supp;
    let half_k = (y_max / dy).ceil() as usize;
    let k_total = 2 * half_k; // y_k = (k - half_k)·dy, k = 0..=k_total

    // wavefunctions of each ρ eigencomponent on the shared u-grid
    let u_len = (nx - 1) * m + k_total + 1;
    let phi_grids: Vec<(f64, Vec<Complex64>)> = components
        .iter()
        .map(|(w, phi)| {
            let mut scratch = vec![0.0_f64; n_fock];
            let mut grid_vals = vec![Complex64::new(0.0, 0.0); u_len];
            for (j, val) in grid_vals.iter_mut().enumerate() {
                let u = -grid.half_width_x + (j as f64 - half_k as f64) * h;
                if u.abs() > u_supp {
                    continue;
                }
                hermite_functions(u, n_fock, &mut scratch);
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, psi) in phi.iter().zip(scratch.iter()) {
                    acc += c * psi;
                }
                *val = acc;
            }
            (*w, grid_vals)
        })
        .collect();

    // phase table e^{i p_j y_k}
    let phase: Vec<Vec<Complex64>> = p_axis
        .iter()
        .map(|&p| {
            (0..=k_total)
                .map(|k| {
                    let y = (k as f64 - half_k as f64) * dy;
                    Complex64::from_polar(1.0, p * y)
                })
                .collect()
        })
        .collect();

    let prefactor = dy / (2.0 * std::f64::consts::PI);
    let rows: Vec<(Vec<f64>, f64)> = (0..nx)
        .into_par_iter()
        .map(|i| {
            let x = x_axis[i];
            // restrict to y where both x±y/2 sit inside the support
            let reach = 2.0 * (u_supp - x.abs());
            let mut row = vec![0.0_f64; np];
            let mut residue = 0.0_f64;
            if reach > 0.0 {
                let k_span = ((reach / dy).ceil() as usize).min(half_k);
                let k_lo = half_k - k_span;
                let k_hi = half_k + k_span;
                let mut f = vec![Complex64::new(0.0, 0.0); k_hi - k_lo + 1];
                for (w, phi_u) in &phi_grids {
                    for (slot, k) in (k_lo..=k_hi).enumerate() {
                        // x - y/2 at index im - k + 2·half_k... see u-grid layout
                        let left = phi_u[i * m + k_total - k];
                        let right = phi_u[i * m + k];
                        f[slot] += w * left * right.conj();
                    }
                }
                for (j, out) in row.iter_mut().enumerate() {
                    let ph = &phase[j];
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (slot, k) in (k_lo..=k_hi).enumerate() {
                        acc += f[slot] * ph[k];
                    }
                    let w = acc * prefactor;
                    *out = w.re;
                    residue = residue.max(w.im.abs());
                }
            }
            (row, residue)
        })
        .collect();

    let mut values = Array2::<f64>::zeros((nx, np));
    let mut max_imag_residue = 0.0_f64;
    for (i, (row, residue)) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            values[(i, j)] = v;
        }
        max_imag_residue = max_imag_residue.max(residue);
    }

    // cross-check at the origin: W(0,0) = (1/π)·tr(ρ Π_b)
    let parity_trace: f64 = (0..n_fock)
        .map(|i| if i % 2 == 0 { rho[(i, i)].re } else { -rho[(i, i)].re })
        .sum();
    let origin_parity_value = parity_trace / std::f64::consts::PI;
    let origin_value = {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut scratch_l = vec![0.0_f64; n_fock];
        let mut scratch_r = vec![0.0_f64; n_fock];
        for k in 0..=k_total {
            let y = (k as f64 - half_k as f64) * dy;
            if y.abs() > 2.0 * u_supp {
                continue;
            }
            hermite_functions(-0.5 * y, n_fock, &mut scratch_l);
            hermite_functions(0.5 * y, n_fock, &mut scratch_r);
            let mut f = Complex64::new(0.0, 0.0);
            for (w, phi) in &components {
                let mut l = Complex64::new(0.0, 0.0);
                let mut r = Complex64::new(0.0, 0.0);
                for ((c, pl), pr) in phi.iter().zip(scratch_l.iter()).zip(scratch_r.iter()) {
                    l += c * *pl;
                    r += c * *pr;
                }
                f += w * l * r.conj();
            }
            acc += f;
        }
        (acc * prefactor).re
    };

    Ok(WignerGrid {
        x_axis,
        p_axis,
        values,
        time,
        source,
        max_imag_residue,
        origin_value,
        origin_parity_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fock_rho(n: usize, dim: usize) -> Array2<Complex64> {
        let mut rho = Array2::<Complex64>::zeros((dim, dim));
        rho[(n, n)] = Complex64::new(1.0, 0.0);
        rho
    }

    #[test]
    fn reduce_field_product_state_is_pure() {
        // |1⟩_boson ⊗ (|1⟩+i|2⟩)/√2 in the flat product basis
        let mut state = Array1::<Complex64>::zeros(8);
        state[2] = Complex64::new(0.5_f64.sqrt(), 0.0);
        state[3] = Complex64::new(0.0, 0.5_f64.sqrt());
        let rho = reduce_field(&state).unwrap();
        let trace: f64 = (0..4).map(|i| rho[(i, i)].re).sum();
        assert!((trace - 1.0).abs() < 1e-12);
        assert!((field_purity(&rho) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reduce_field_maximally_entangled_is_half_pure() {
        // (|0,1⟩ + |1,2⟩)/√2: orthogonal boson states attached to each spin
        let mut state = Array1::<Complex64>::zeros(8);
        state[0] = Complex64::new(0.5_f64.sqrt(), 0.0);
        state[3] = Complex64::new(0.5_f64.sqrt(), 0.0);
        let rho = reduce_field(&state).unwrap();
        assert!((field_purity(&rho) - 0.5).abs() < 1e-12);
        let trace: f64 = (0..4).map(|i| rho[(i, i)].re).sum();
        assert!((trace - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reduce_field_is_positive_semidefinite() {
        let mut state = Array1::<Complex64>::zeros(12);
        for (k, z) in state.iter_mut().enumerate() {
            *z = Complex64::from_polar(((k + 1) as f64).sqrt(), 0.3 * k as f64);
        }
        let norm: f64 = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        state.mapv_inplace(|z| z / norm);
        let rho = reduce_field(&state).unwrap();
        let comps = complex_hermitian_eigendecompose(&rho, 0.0).unwrap();
        for (w, _) in &comps {
            assert!(*w > -1e-12, "negative weight {w}");
        }
        let hefty: Vec<&(f64, Array1<Complex64>)> =
            comps.iter().filter(|(w, _)| *w > 1e-10).collect();
        assert!(hefty.len() <= 2, "rank must be at most two");
    }

    #[test]
    fn complex_eig_recovers_hermitian_matrix() {
        let n = 6;
        let mut rho = Array2::<Complex64>::zeros((n, n));
        // positive combination of two orthogonal complex projectors
        let mut a = Array1::<Complex64>::zeros(n);
        let mut b = Array1::<Complex64>::zeros(n);
        for k in 0..n {
            a[k] = Complex64::from_polar(1.0 / (k as f64 + 1.5), 0.9 * k as f64);
            b[k] = Complex64::from_polar((k as f64 + 0.3).sqrt(), -0.4 * k as f64);
        }
        let na: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        a.mapv_inplace(|z| z / na);
        let overlap: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
        for (y, x) in b.iter_mut().zip(a.iter()) {
            *y -= overlap * x;
        }
        let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        b.mapv_inplace(|z| z / nb);
        for i in 0..n {
            for j in 0..n {
                rho[(i, j)] = 0.7 * a[i] * a[j].conj() + 0.3 * b[i] * b[j].conj();
            }
        }
        let comps = complex_hermitian_eigendecompose(&rho, 1e-10).unwrap();
        assert_eq!(comps.len(), 2);
        assert!((comps[0].0 - 0.7).abs() < 1e-10);
        assert!((comps[1].0 - 0.3).abs() < 1e-10);
        // reconstruct
        let mut back = Array2::<Complex64>::zeros((n, n));
        for (w, phi) in &comps {
            for i in 0..n {
                for j in 0..n {
                    back[(i, j)] += w * phi[i] * phi[j].conj();
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert!((back[(i, j)] - rho[(i, j)]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn vacuum_wigner_is_gaussian() {
        let rho = fock_rho(0, 4);
        let grid = GridSpec::square(6.0, 81);
        let w = wigner_transform(&rho, &grid, None, WignerSource::Custom).unwrap();
        for (i, &x) in w.x_axis.iter().enumerate() {
            for (j, &p) in w.p_axis.iter().enumerate() {
                let want = (1.0 / PI) * (-x * x - p * p).exp();
                assert!(
                    (w.values[(i, j)] - want).abs() < 1e-8,
                    "x={x} p={p}: {} vs {want}",
                    w.values[(i, j)]
                );
            }
        }
        assert!((w.normalization() - 1.0).abs() < 1e-4);
        assert!(w.max_imag_residue < 1e-10);
        assert!((w.origin_value - 1.0 / PI).abs() < 1e-8);
        assert!((w.origin_parity_value - 1.0 / PI).abs() < 1e-14);
    }

    #[test]
    fn fock_state_origin_parity() {
        for n in [1usize, 2, 3, 7, 40] {
            let rho = fock_rho(n, n + 2);
            let half = (2.0 * n as f64 + 1.0).sqrt() + 6.0;
            let grid = GridSpec::square(half, 121);
            let w = wigner_transform(&rho, &grid, None, WignerSource::Custom).unwrap();
            let want = if n % 2 == 0 { 1.0 } else { -1.0 } / PI;
            assert!(
                (w.origin_value - want).abs() < 1e-6,
                "n={n}: origin {} vs {want}",
                w.origin_value
            );
            assert!((w.origin_parity_value - want).abs() < 1e-12);
            assert!((w.normalization() - 1.0).abs() < 1e-4, "n={n}");
        }
    }

    #[test]
    fn marginal_matches_position_density() {
        // superposition (|0⟩ + |3⟩)/√2 has structured marginals
        let dim = 6;
        let mut rho = Array2::<Complex64>::zeros((dim, dim));
        rho[(0, 0)] = Complex64::new(0.5, 0.0);
        rho[(3, 3)] = Complex64::new(0.5, 0.0);
        rho[(0, 3)] = Complex64::new(0.5, 0.0);
        rho[(3, 0)] = Complex64::new(0.5, 0.0);
        let grid = GridSpec::square(7.0, 141);
        let w = wigner_transform(&rho, &grid, None, WignerSource::Custom).unwrap();
        let marginal = w.marginal_x();
        let mut scratch = vec![0.0_f64; dim];
        for (i, &x) in w.x_axis.iter().enumerate() {
            hermite_functions(x, dim, &mut scratch);
            let density = 0.5 * scratch[0] * scratch[0]
                + 0.5 * scratch[3] * scratch[3]
                + scratch[0] * scratch[3];
            assert!(
                (marginal[i] - density).abs() < 1e-4,
                "x={x}: marginal {} vs density {density}",
                marginal[i]
            );
        }
        assert!((w.normalization() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn grid_too_small_is_rejected() {
        let rho = fock_rho(30, 40);
        let grid = GridSpec::square(3.0, 32);
        match wigner_transform(&rho, &grid, None, WignerSource::Custom) {
            Err(WignerError::GridTooSmall { support_fraction, required, .. }) => {
                assert!(support_fraction < 0.5);
                assert!(required > 7.0);
            }
            other => panic!("expected GridTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn cat_state_has_negativity() {
        // even superposition of displaced vacua ~ |α⟩ + |-α⟩ built in Fock
        // space via its even-n expansion
        let dim = 40;
        let alpha = 2.5_f64;
        let mut psi = Array1::<Complex64>::zeros(dim);
        let mut log_fact = 0.0_f64;
        for n in 0..dim {
            if n > 0 {
                log_fact += (n as f64).ln();
            }
            if n % 2 == 0 {
                let amp = (-0.5 * alpha * alpha + (n as f64) * alpha.ln() - 0.5 * log_fact).exp();
                psi[n] = Complex64::new(amp, 0.0);
            }
        }
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        psi.mapv_inplace(|z| z / norm);
        let mut rho = Array2::<Complex64>::zeros((dim, dim));
        for i in 0..dim {
            for j in 0..dim {
                rho[(i, j)] = psi[i] * psi[j].conj();
            }
        }
        let grid = GridSpec::square(12.0, 241);
        let w = wigner_transform(&rho, &grid, None, WignerSource::Custom).unwrap();
        assert!((w.normalization() - 1.0).abs() < 1e-4);
        assert!(w.negativity_volume() > 0.1, "negativity {}", w.negativity_volume());
        assert!(w.max_imag_residue < 1e-10);
    }
}
