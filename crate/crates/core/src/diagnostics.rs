//! Statistical diagnostics of thermalization: inverse participation ratio,
//! microcanonical averages, level-spacing statistics, Gaussianity of the
//! time signal, eigenstate populations, and the convergence/sweep drivers.

use crate::eigensolver::{EigenDecomposition, EigenError};
use crate::hamiltonian::{build_observable, HamiltonianError, ModelParams, ObsKind};
use crate::numerics::{ks_statistic, median_iqr, standard_normal_cdf};
use crate::quench::{
    quench, to_eigenbasis, ObservableInEigenbasis, QuenchError, QuenchState, TimeSampling,
    TimeSamplingTag, VarianceMode,
};
use ndarray::ArrayView1;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

/// Random-time sampling starts after this burn-in so the initial collapse
/// transient does not contaminate long-time statistics.
pub const BURN_IN_TIME: f64 = 1e3;

/// Hard cap for the truncation-doubling schedule.
pub const DEFAULT_NTR_CAP: usize = 4096;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("coefficients are not normalized: Σ|C|² = {0}")]
    Unnormalized(f64),
    #[error("no eigenvalues inside the window [{lo}, {hi}]")]
    EmptyWindow { lo: f64, hi: f64 },
    #[error("level-spacing window [{lo}, {hi}] holds {count} eigenvalues, need at least 3")]
    WindowTooSparse { lo: f64, hi: f64, count: usize },
    #[error("spacing values must be nonnegative, got {0}")]
    NegativeSpacing(f64),
    #[error("reference deviation is zero; Gaussianity test is degenerate")]
    DegenerateReference,
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("quantity {0:?} is not a valid convergence target")]
    InvalidConvergenceTarget(ConvergenceQuantity),
    #[error("no convergence below the n_tr cap {cap} (last change {last_change:.3e} at n_tr {n_tr})")]
    ResourceCap { cap: usize, n_tr: usize, last_change: f64 },
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Quench(#[from] QuenchError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
}

/// Inverse participation ratio η = (Σ_ν |C_ν|⁴)⁻¹, the effective number of
/// populated eigenstates; 1 ≤ η ≤ D for normalized coefficients.
pub fn ipr(coeffs: ArrayView1<'_, Complex64>) -> Result<f64, DiagnosticsError> {
    let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(DiagnosticsError::Unnormalized(norm));
    }
    let quartic: f64 = coeffs.iter().map(|c| c.norm_sqr() * c.norm_sqr()).sum();
    Ok(1.0 / quartic)
}

/// Microcanonical average (1/N) Σ_{γ: |E_γ - E| ≤ δ} A_γγ.
pub fn microcanonical_average(
    dec: &EigenDecomposition,
    obs: &ObservableInEigenbasis,
    energy: f64,
    delta: f64,
) -> Result<f64, DiagnosticsError> {
    let mut acc = 0.0_f64;
    let mut count = 0usize;
    for (nu, &e) in dec.energies().iter().enumerate() {
        if (e - energy).abs() <= delta {
            acc += obs.elements()[(nu, nu)].re;
            count += 1;
        }
    }
    if count == 0 {
        return Err(DiagnosticsError::EmptyWindow { lo: energy - delta, hi: energy + delta });
    }
    Ok(acc / count as f64)
}

/// Default microcanonical window: five times the local mean level spacing.
pub fn default_microcanonical_delta(dec: &EigenDecomposition, energy: f64) -> f64 {
    let e = dec.energies();
    let pos = e.partition_point(|&x| x < energy);
    let lo = pos.saturating_sub(5);
    let hi = (pos + 5).min(e.len() - 1);
    let local_spacing = (e[hi] - e[lo]) / (hi - lo).max(1) as f64;
    5.0 * local_spacing
}

/// Consecutive level spacings inside (e_min, e_max), normalized to unit
/// sample mean.
pub fn level_spacings(
    dec: &EigenDecomposition,
    window: (f64, f64),
) -> Result<Vec<f64>, DiagnosticsError> {
    let (lo, hi) = window;
    let inside: Vec<f64> = dec
        .energies()
        .iter()
        .copied()
        .filter(|&e| e > lo && e < hi)
        .collect();
    if inside.len() < 3 {
        return Err(DiagnosticsError::WindowTooSparse { lo, hi, count: inside.len() });
    }
    let mut spacings: Vec<f64> = inside.windows(2).map(|w| w[1] - w[0]).collect();
    let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
    for s in spacings.iter_mut() {
        *s /= mean;
    }
    Ok(spacings)
}

/// Poisson e^{-S} and Wigner-Dyson (πS/2)e^{-πS²/4} reference densities
/// evaluated at the given spacings.
pub fn reference_distributions(s: &[f64]) -> Result<(Vec<f64>, Vec<f64>), DiagnosticsError> {
    for &v in s {
        if v < 0.0 {
            return Err(DiagnosticsError::NegativeSpacing(v));
        }
    }
    let poisson = s.iter().map(|&v| (-v).exp()).collect();
    let wigner = s
        .iter()
        .map(|&v| 0.5 * std::f64::consts::PI * v * (-0.25 * std::f64::consts::PI * v * v).exp())
        .collect();
    Ok((poisson, wigner))
}

/// CDF of the Poisson spacing distribution, 1 - e^{-S}.
pub fn poisson_spacing_cdf(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        1.0 - (-s).exp()
    }
}

/// CDF of the Wigner-Dyson spacing distribution, 1 - e^{-πS²/4}.
pub fn wigner_dyson_spacing_cdf(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        1.0 - (-0.25 * std::f64::consts::PI * s * s).exp()
    }
}

/// Binning policy for spacing histograms.
#[derive(Debug, Clone, Copy)]
pub enum Binning {
    /// Freedman-Diaconis width 2·IQR/n^(1/3).
    FreedmanDiaconis,
    Fixed(usize),
}

/// Normalized spacing histogram over an energy window.
#[derive(Debug, Clone)]
pub struct SpacingHistogram {
    pub bin_edges: Vec<f64>,
    /// Probability densities per bin; they integrate to one.
    pub counts: Vec<f64>,
    /// Mean spacing inside the window before normalization.
    pub mean_spacing: f64,
    pub window: (f64, f64),
}

impl SpacingHistogram {
    /// ∫ density dS over the binned range.
    pub fn total_mass(&self) -> f64 {
        self.counts
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(c, e)| c * (e[1] - e[0]))
            .sum()
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }
}

/// Histogram of mean-normalized spacings in the window.
pub fn spacing_histogram(
    dec: &EigenDecomposition,
    window: (f64, f64),
    binning: Binning,
) -> Result<SpacingHistogram, DiagnosticsError> {
    let (lo, hi) = window;
    let inside: Vec<f64> = dec
        .energies()
        .iter()
        .copied()
        .filter(|&e| e > lo && e < hi)
        .collect();
    if inside.len() < 3 {
        return Err(DiagnosticsError::WindowTooSparse { lo, hi, count: inside.len() });
    }
    let raw: Vec<f64> = inside.windows(2).map(|w| w[1] - w[0]).collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let spacings: Vec<f64> = raw.iter().map(|s| s / mean).collect();

    let max = spacings.iter().fold(0.0_f64, |m, &s| m.max(s));
    let n_bins = match binning {
        Binning::Fixed(n) => n.max(1),
        Binning::FreedmanDiaconis => {
            let (_, iqr) = median_iqr(&spacings);
            let width = 2.0 * iqr / (spacings.len() as f64).cbrt();
            if width > 0.0 {
                ((max / width).ceil() as usize).clamp(1, 500)
            } else {
                1
            }
        }
    };
    let top = max * (1.0 + 1e-12);
    let width = top / n_bins as f64;
    let mut counts = vec![0.0_f64; n_bins];
    for &s in &spacings {
        let k = ((s / width) as usize).min(n_bins - 1);
        counts[k] += 1.0;
    }
    let norm = spacings.len() as f64 * width;
    for c in counts.iter_mut() {
        *c /= norm;
    }
    let bin_edges = (0..=n_bins).map(|k| k as f64 * width).collect();
    Ok(SpacingHistogram { bin_edges, counts, mean_spacing: mean, window })
}

/// Random-time samples of an expectation value against the matching normal
/// reference.
#[derive(Debug, Clone)]
pub struct GaussianityReport {
    pub samples: Vec<f64>,
    pub ks_statistic: f64,
    /// Diagonal-ensemble mean used as the reference location.
    pub reference_mean: f64,
    /// Long-time standard deviation used as the reference scale.
    pub reference_sigma: f64,
}

/// Sample ⟨A(t)⟩ at `n_samples` random times in [BURN_IN_TIME, t_max] and
/// compare against Normal(⟨A⟩_T, δ_A²) with a Kolmogorov-Smirnov statistic.
pub fn gaussianity_test(
    state: &QuenchState,
    obs: &ObservableInEigenbasis,
    n_samples: usize,
    t_max: f64,
    seed: u64,
) -> Result<GaussianityReport, DiagnosticsError> {
    if n_samples < 100 {
        return Err(DiagnosticsError::TooFewSamples { need: 100, got: n_samples });
    }
    let mean = state.long_time_average(obs);
    let sampling = TimeSampling { n_samples, t_min: BURN_IN_TIME, t_max, seed };
    let var = state.long_time_variance(obs, VarianceMode::Spectral, &sampling);
    let sigma = var.delta;
    if sigma == 0.0 {
        return Err(DiagnosticsError::DegenerateReference);
    }
    let times = QuenchState::sampling_times(&sampling);
    let samples = state.sample_expectations(obs, &times);
    let d = ks_statistic(&samples, |x| standard_normal_cdf((x - mean) / sigma));
    Ok(GaussianityReport {
        samples,
        ks_statistic: d,
        reference_mean: mean,
        reference_sigma: sigma,
    })
}

/// Γ(l) = |⟨φ_l|ψ⟩|², time independent under the quenched evolution.
pub fn eigenstate_population(state: &QuenchState) -> Vec<f64> {
    state.populations()
}

/// Quantity tracked across the truncation-doubling schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConvergenceQuantity {
    GroundEnergy,
    /// Diagonal-ensemble mean boson number for a quench from `initial_g`,
    /// `initial_lambda` into the target parameters.
    QuenchMeanBoson { initial_g: f64, initial_lambda: f64 },
    /// Number of eigenvalues below `energy`; the right target when a whole
    /// spectral window must be converged.
    LevelCountBelow { energy: f64 },
    /// Rejected: the trace is exactly n_tr-dependent and never converges.
    SpectralTrace,
}

#[derive(Debug, Clone)]
pub struct ConvergenceOutcome {
    pub n_tr: usize,
    /// (n_tr, value) pairs visited, in schedule order.
    pub history: Vec<(usize, f64)>,
}

/// Smallest n_tr in a doubling schedule whose tracked quantity moves by less
/// than `tol` (relative to max(1, |value|)) when n_tr doubles.
pub fn convergence_sweep(
    params: &ModelParams,
    quantity: ConvergenceQuantity,
    tol: f64,
) -> Result<ConvergenceOutcome, DiagnosticsError> {
    convergence_sweep_with_cap(params, quantity, tol, DEFAULT_NTR_CAP)
}

pub fn convergence_sweep_with_cap(
    params: &ModelParams,
    quantity: ConvergenceQuantity,
    tol: f64,
    cap: usize,
) -> Result<ConvergenceOutcome, DiagnosticsError> {
    assert!(tol > 0.0, "tolerance must be positive");
    if matches!(quantity, ConvergenceQuantity::SpectralTrace) {
        return Err(DiagnosticsError::InvalidConvergenceTarget(quantity));
    }
    let evaluate = |n_tr: usize| -> Result<f64, DiagnosticsError> {
        let p = params.with_n_tr(n_tr);
        match quantity {
            ConvergenceQuantity::GroundEnergy => Ok(crate::eigensolver::ground_state(&p)?.energy),
            ConvergenceQuantity::QuenchMeanBoson { initial_g, initial_lambda } => {
                let initial = ModelParams::new(p.omega, initial_g, initial_lambda, n_tr)?;
                let state = quench(&initial, &p)?;
                let n_obs = build_observable(ObsKind::Number, n_tr)?;
                let n_eig = to_eigenbasis(&n_obs, state.decomposition())?;
                Ok(state.long_time_average(&n_eig))
            }
            ConvergenceQuantity::LevelCountBelow { energy } => {
                let dec = crate::eigensolver::decompose_hamiltonian(&p)?;
                Ok(dec.energies().iter().filter(|&&e| e < energy).count() as f64)
            }
            ConvergenceQuantity::SpectralTrace => unreachable!(),
        }
    };

    let mut n_tr = 8usize;
    let mut value = evaluate(n_tr)?;
    let mut history = vec![(n_tr, value)];
    loop {
        let next = n_tr * 2;
        if next > cap {
            return Err(DiagnosticsError::ResourceCap { cap, n_tr, last_change: f64::NAN });
        }
        let next_value = evaluate(next)?;
        history.push((next, next_value));
        let change = (next_value - value).abs() / value.abs().max(1.0);
        if change < tol {
            return Ok(ConvergenceOutcome { n_tr, history });
        }
        if next == cap {
            return Err(DiagnosticsError::ResourceCap { cap, n_tr: next, last_change: change });
        }
        n_tr = next;
        value = next_value;
    }
}

/// Quench protocol for the coupling sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepSpec {
    pub initial_g: f64,
    pub initial_lambda: f64,
    pub observable: ObsKind,
    pub sampling: TimeSampling,
}

/// One coupling point of the sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub g: f64,
    pub n_tr: usize,
    pub quench_energy: f64,
    pub long_time_mean: f64,
    pub delta: f64,
    pub ratio: f64,
    pub ipr: f64,
    pub gap_collision_fraction: f64,
    pub dropped_weight: f64,
    pub fell_back_to_sampling: bool,
}

/// Long-time statistics across couplings: one row per g, reproducing the
/// variance, scaled variance and participation curves.
///
/// Rows are computed independently (fan-out is safe; results are gathered in
/// input order) at the truncation of `template`, which must be converged for
/// the largest coupling.
pub fn variance_sweep(
    g_values: &[f64],
    template: &ModelParams,
    spec: &SweepSpec,
) -> Result<Vec<SweepRow>, DiagnosticsError> {
    let results: Vec<Result<SweepRow, DiagnosticsError>> = g_values
        .par_iter()
        .map(|&g| {
            let final_ = ModelParams::new(template.omega, g, template.lambda, template.n_tr)?;
            let initial = ModelParams::new(
                template.omega,
                spec.initial_g,
                spec.initial_lambda,
                template.n_tr,
            )?;
            let state = quench(&initial, &final_)?;
            let obs = build_observable(spec.observable, template.n_tr)?;
            let obs_eig = to_eigenbasis(&obs, state.decomposition())?;
            let mean = state.long_time_average(&obs_eig);
            let var = state.long_time_variance(&obs_eig, VarianceMode::Spectral, &spec.sampling);
            let eta = ipr(state.coefficients().view())?;
            Ok(SweepRow {
                g,
                n_tr: template.n_tr,
                quench_energy: state.energy(),
                long_time_mean: mean,
                delta: var.delta,
                ratio: var.delta / mean,
                ipr: eta,
                gap_collision_fraction: var.gap_collision_fraction,
                dropped_weight: var.dropped_weight,
                fell_back_to_sampling: var.fell_back_to_sampling,
            })
        })
        .collect();
    results.into_iter().collect()
}

/// Sampled variance helper retained for sweeps that want the empirical mode.
pub fn sampled_variance_mode() -> VarianceMode {
    VarianceMode::Sampled(TimeSamplingTag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolver::decompose_hamiltonian;
    use ndarray::Array1;
    use std::sync::Arc;

    fn params(omega: f64, g: f64, lambda: f64, n_tr: usize) -> ModelParams {
        ModelParams::new(omega, g, lambda, n_tr).unwrap()
    }

    fn unit_coeffs(d: usize, populated: &[usize]) -> Array1<Complex64> {
        let amp = 1.0 / (populated.len() as f64).sqrt();
        let mut c = Array1::<Complex64>::zeros(d);
        for &k in populated {
            c[k] = Complex64::new(amp, 0.0);
        }
        c
    }

    #[test]
    fn ipr_limits() {
        let single = unit_coeffs(10, &[3]);
        assert!((ipr(single.view()).unwrap() - 1.0).abs() < 1e-12);
        let uniform = unit_coeffs(16, &(0..16).collect::<Vec<_>>());
        assert!((ipr(uniform.view()).unwrap() - 16.0).abs() < 1e-10);
        let bad = Array1::<Complex64>::zeros(4);
        assert!(matches!(ipr(bad.view()), Err(DiagnosticsError::Unnormalized(_))));
    }

    #[test]
    fn ipr_invariant_under_permutation_and_phase() {
        let mut c = Array1::<Complex64>::zeros(6);
        let weights = [0.5_f64, 0.3, 0.1, 0.06, 0.03, 0.01];
        for (k, w) in weights.iter().enumerate() {
            c[k] = Complex64::from_polar(w.sqrt(), 0.7 * k as f64);
        }
        let base = ipr(c.view()).unwrap();
        let mut permuted = c.to_vec();
        permuted.reverse();
        let p = Array1::from(permuted);
        assert!((ipr(p.view()).unwrap() - base).abs() < 1e-12);
        let rotated = c.mapv(|z| z * Complex64::from_polar(1.0, 1.234));
        assert!((ipr(rotated.view()).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn microcanonical_flat_observable() {
        let p = params(1.0, 1.0, 0.3, 8);
        let dec = Arc::new(decompose_hamiltonian(&p).unwrap());
        let ident = crate::hamiltonian::HermitianObservable::from_symmetric(
            ndarray::Array2::eye(dec.dim()) * 3.5,
            ObsKind::Custom,
        );
        let obs = to_eigenbasis(&ident, &dec).unwrap();
        let avg = microcanonical_average(&dec, &obs, 0.0, 1e6).unwrap();
        assert!((avg - 3.5).abs() < 1e-10);
    }

    #[test]
    fn microcanonical_full_window_is_trace_over_d() {
        let p = params(1.0, 1.0, 0.3, 8);
        let h = crate::hamiltonian::build_hamiltonian(&p).unwrap();
        let dec = Arc::new(decompose_hamiltonian(&p).unwrap());
        let h_eig = to_eigenbasis(&h, &dec).unwrap();
        let avg = microcanonical_average(&dec, &h_eig, 0.0, 1e9).unwrap();
        let trace: f64 = (0..h.dim()).map(|i| h.sym()[(i, i)]).sum();
        assert!((avg - trace / h.dim() as f64).abs() < 1e-8);
    }

    #[test]
    fn microcanonical_shrinking_window_hits_diagonal_element() {
        let p = params(1.0, 1.2, 0.4, 10);
        let dec = Arc::new(decompose_hamiltonian(&p).unwrap());
        let n_obs = build_observable(ObsKind::Number, p.n_tr).unwrap();
        let n_eig = to_eigenbasis(&n_obs, &dec).unwrap();
        let gamma = 7;
        let e = dec.energy(gamma);
        let gap = (dec.energy(gamma + 1) - e).min(e - dec.energy(gamma - 1));
        let avg = microcanonical_average(&dec, &n_eig, e, 0.4 * gap).unwrap();
        assert!((avg - n_eig.elements()[(gamma, gamma)].re).abs() < 1e-12);
    }

    #[test]
    fn microcanonical_empty_window_rejected() {
        let p = params(1.0, 0.5, 0.0, 4);
        let dec = Arc::new(decompose_hamiltonian(&p).unwrap());
        let n_obs = build_observable(ObsKind::Number, p.n_tr).unwrap();
        let n_eig = to_eigenbasis(&n_obs, &dec).unwrap();
        assert!(matches!(
            microcanonical_average(&dec, &n_eig, -1e6, 1e-3),
            Err(DiagnosticsError::EmptyWindow { .. })
        ));
    }

    #[test]
    fn equally_spaced_spectrum_gives_unit_spacings() {
        let diag =
            ndarray::Array2::from_diag(&ndarray::Array1::from_iter((0..20).map(|k| k as f64)));
        let dec = crate::eigensolver::eigendecompose(&diag).unwrap();
        let s = level_spacings(&dec, (-0.5, 19.5)).unwrap();
        for v in s {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sparse_window_rejected() {
        let diag =
            ndarray::Array2::from_diag(&ndarray::Array1::from_iter((0..20).map(|k| k as f64)));
        let dec = crate::eigensolver::eigendecompose(&diag).unwrap();
        assert!(matches!(
            level_spacings(&dec, (0.2, 1.8)),
            Err(DiagnosticsError::WindowTooSparse { .. })
        ));
    }

    #[test]
    fn reference_densities_normalized_and_pinned_at_zero() {
        let (p0, w0) = reference_distributions(&[0.0]).unwrap();
        assert_eq!(p0[0], 1.0);
        assert_eq!(w0[0], 0.0);
        assert!(reference_distributions(&[-0.1]).is_err());
        // quadrature normalization and Wigner-Dyson unit mean
        let poisson_mass = rabi_testkit::simpson(|s| (-s).exp(), 0.0, 40.0, 20_000);
        assert!((poisson_mass - 1.0).abs() < 1e-6);
        let wd =
            |s: f64| 0.5 * std::f64::consts::PI * s * (-0.25 * std::f64::consts::PI * s * s).exp();
        let wd_mass = rabi_testkit::simpson(wd, 0.0, 40.0, 20_000);
        assert!((wd_mass - 1.0).abs() < 1e-6);
        let wd_mean = rabi_testkit::simpson(|s| s * wd(s), 0.0, 40.0, 20_000);
        assert!((wd_mean - 1.0).abs() < 1e-6);
    }

    #[test]
    fn histogram_density_integrates_to_one() {
        let p = params(1.0, 3.0, 0.7, 60);
        let dec = decompose_hamiltonian(&p).unwrap();
        let hist = spacing_histogram(&dec, (0.0, 40.0), Binning::FreedmanDiaconis).unwrap();
        assert!((hist.total_mass() - 1.0).abs() < 1e-9);
        let s = level_spacings(&dec, (0.0, 40.0)).unwrap();
        let mean: f64 = s.iter().sum::<f64>() / s.len() as f64;
        assert!((mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussianity_degenerate_for_eigenstate() {
        let p = params(1.0, 1.0, 0.5, 6);
        let dec = Arc::new(decompose_hamiltonian(&p).unwrap());
        let c = unit_coeffs(dec.dim(), &[4]);
        let state = QuenchState::from_coefficients(c, dec.clone()).unwrap();
        let n_obs = build_observable(ObsKind::Number, p.n_tr).unwrap();
        let n_eig = to_eigenbasis(&n_obs, &dec).unwrap();
        assert!(matches!(
            gaussianity_test(&state, &n_eig, 500, 1e5, 1),
            Err(DiagnosticsError::DegenerateReference)
        ));
    }

    #[test]
    fn gaussianity_rejects_two_mode_arcsine() {
        // two populated modes give an arcsine-distributed signal, far from
        // Gaussian: the KS statistic must clear the critical value widely
        let p = params(1.0, 1.0, 0.5, 6);
        let dec = Arc::new(decompose_hamiltonian(&p).unwrap());
        let c = unit_coeffs(dec.dim(), &[2, 5]);
        let state = QuenchState::from_coefficients(c, dec.clone()).unwrap();
        let n_obs = build_observable(ObsKind::Number, p.n_tr).unwrap();
        let n_eig = to_eigenbasis(&n_obs, &dec).unwrap();
        let report = gaussianity_test(&state, &n_eig, 2000, 1e5, 7).unwrap();
        let crit = crate::numerics::ks_critical_value(2000, crate::numerics::KsLevel::FivePercent);
        assert!(
            report.ks_statistic > 2.0 * crit,
            "KS {} should exceed twice the critical value {crit}",
            report.ks_statistic
        );
    }

    #[test]
    fn populations_sum_to_one_and_match_coefficients() {
        let initial = params(1.0, 0.1, 0.0, 8);
        let final_ = params(1.0, 1.1, 0.3, 8);
        let state = quench(&initial, &final_).unwrap();
        let gamma = eigenstate_population(&state);
        let total: f64 = gamma.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for (g, c) in gamma.iter().zip(state.coefficients().iter()) {
            assert_eq!(*g, c.norm_sqr());
        }
    }

    #[test]
    fn convergence_sweep_ground_energy_weak_coupling() {
        let p = params(1.0, 0.1, 0.0, 0);
        let out = convergence_sweep(&p, ConvergenceQuantity::GroundEnergy, 1e-8).unwrap();
        assert!(out.n_tr <= 16, "weak coupling converges fast, got {}", out.n_tr);
        assert!(out.history.len() >= 2);
    }

    #[test]
    fn convergence_sweep_rejects_trace() {
        let p = params(1.0, 1.0, 0.0, 0);
        assert!(matches!(
            convergence_sweep(&p, ConvergenceQuantity::SpectralTrace, 1e-8),
            Err(DiagnosticsError::InvalidConvergenceTarget(_))
        ));
    }

    #[test]
    fn convergence_sweep_hits_resource_cap() {
        let p = params(1.0, 6.0, 0.0, 0);
        // ground energy at g=6 needs n_tr ~ 100; a cap of 16 must trip
        assert!(matches!(
            convergence_sweep_with_cap(&p, ConvergenceQuantity::GroundEnergy, 1e-10, 16),
            Err(DiagnosticsError::ResourceCap { .. })
        ));
    }

    #[test]
    fn variance_sweep_no_quench_row_is_quiet() {
        let template = params(1.0, 0.0, 0.0, 24);
        let spec = SweepSpec {
            initial_g: 0.1,
            initial_lambda: 0.0,
            observable: ObsKind::Number,
            sampling: TimeSampling { n_samples: 400, t_min: 0.0, t_max: 1e4, seed: 5 },
        };
        let rows = variance_sweep(&[0.1], &template, &spec).unwrap();
        assert_eq!(rows.len(), 1);
        // quenching into the same Hamiltonian leaves the state stationary
        assert!(rows[0].delta.abs() < 1e-8, "delta = {}", rows[0].delta);
        assert!((rows[0].ipr - 1.0).abs() < 1e-6);
    }
}
