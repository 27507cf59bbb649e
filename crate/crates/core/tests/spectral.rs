//! Cross-module spectral checks that need moderate dimensions: truncation
//! sensitivity of the displacement transform and the strong-coupling
//! convergence scale.

use rabi_core::diagnostics::{convergence_sweep, ConvergenceQuantity};
use rabi_core::{
    build_displaced_hamiltonian, decompose_hamiltonian, eigendecompose, ModelParams,
};

fn lowest_level_mismatch(omega: f64, g: f64, lambda: f64, n_tr: usize, levels: usize) -> f64 {
    let p = ModelParams::new(omega, g, lambda, n_tr).unwrap();
    let driven = decompose_hamiltonian(&p).unwrap();
    let displaced = eigendecompose(build_displaced_hamiltonian(&p).unwrap().sym()).unwrap();
    (0..levels)
        .map(|k| (driven.energy(k) - displaced.energy(k)).abs())
        .fold(0.0_f64, f64::max)
}

#[test]
fn displacement_mismatch_grows_below_convergence() {
    // both forms are unitarily equivalent only up to truncation error, so
    // shrinking n_tr below the support of the low-lying states must hurt
    let coarse = lowest_level_mismatch(1.0, 3.0, 1.0, 14, 10);
    let medium = lowest_level_mismatch(1.0, 3.0, 1.0, 28, 10);
    let fine = lowest_level_mismatch(1.0, 3.0, 1.0, 96, 10);
    assert!(
        coarse > 2.0 * medium && medium > 100.0 * fine,
        "mismatch should fall with truncation: {coarse:.3e} -> {medium:.3e} -> {fine:.3e}"
    );
    assert!(fine < 1e-8, "converged mismatch {fine:.3e}");
}

#[test]
fn strong_coupling_needs_hundreds_of_bosons() {
    // the displaced ground state sits at <n> ~ g^2, so the doubling schedule
    // cannot settle before n_tr reaches that scale
    let p = ModelParams::new(1.0, 10.0, 0.0, 0).unwrap();
    let out = convergence_sweep(&p, ConvergenceQuantity::GroundEnergy, 1e-8).unwrap();
    assert!(
        out.n_tr >= 128,
        "g = 10 ground state converged suspiciously early at n_tr = {}",
        out.n_tr
    );
    // and the converged value is the double-well depth -g^2 plus a small
    // quantum correction
    let (_, energy) = *out.history.last().unwrap();
    assert!(
        (energy + 100.0).abs() < 1.0,
        "ground energy {energy} should sit near -g^2"
    );
}
