//! Property tests for the structural invariants: Hermiticity and symmetry of
//! constructed operators, eigensolver identities, quench normalization, and
//! the classical equations as the gradient of the classical Hamiltonian.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use proptest::prelude::*;
use rabi_core::quench::QuenchState;
use rabi_core::semiclassical::{classical_energy, eom_rhs, ClassicalState};
use rabi_core::wigner::{complex_hermitian_eigendecompose, field_purity, reduce_field};
use rabi_core::{
    build_hamiltonian, build_parity, decompose_hamiltonian, eigendecompose, quench,
    ModelParams,
};
use std::sync::Arc;

fn small_params() -> impl Strategy<Value = ModelParams> {
    (0.1_f64..3.0, 0.0_f64..3.0, -2.0_f64..2.0, 2_usize..10).prop_map(|(omega, g, lambda, n_tr)| {
        ModelParams::new(omega, g, lambda, n_tr).unwrap()
    })
}

fn symmetric_matrix(max_dim: usize) -> impl Strategy<Value = Array2<f64>> {
    (2..=max_dim).prop_flat_map(|n| {
        proptest::collection::vec(-5.0_f64..5.0, n * n).prop_map(move |v| {
            let mut m = Array2::<f64>::zeros((n, n));
            for i in 0..n {
                for j in 0..=i {
                    let x = v[i * n + j];
                    m[(i, j)] = x;
                    m[(j, i)] = x;
                }
            }
            m
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hamiltonian_matches_operator_products(p in small_params()) {
        let h = build_hamiltonian(&p).unwrap();
        let oracle = rabi_testkit::rabi_hamiltonian_by_operators(p.omega, p.g, p.lambda, p.n_tr);
        for i in 0..p.dim() {
            for j in 0..p.dim() {
                prop_assert!((h.sym()[(i, j)] - oracle[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parity_commutes_exactly_without_drive(
        omega in 0.1_f64..3.0,
        g in 0.0_f64..5.0,
        n_tr in 2_usize..12,
    ) {
        let p = ModelParams::new(omega, g, 0.0, n_tr).unwrap();
        let h = build_hamiltonian(&p).unwrap();
        let pi = build_parity(n_tr);
        prop_assert!(h.commutator_max_norm_diag(&pi.diagonal()) < 1e-12);
    }

    #[test]
    fn eigendecomposition_identities(m in symmetric_matrix(12)) {
        let dec = eigendecompose(&m).unwrap();
        // ascending eigenvalues
        for w in dec.energies().windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        // orthonormal vectors and small residual
        prop_assert!(dec.orthonormality_error() < 1e-10);
        let scale = m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())).max(1.0);
        prop_assert!(dec.residual_error(&m) < 1e-8 * scale);
        // eigenvalue sum equals trace
        let trace: f64 = (0..m.nrows()).map(|i| m[(i, i)]).sum();
        let sum: f64 = dec.energies().iter().sum();
        prop_assert!((trace - sum).abs() < 1e-8 * trace.abs().max(1.0));
    }

    #[test]
    fn quench_preserves_normalization(
        p_final in small_params(),
        g0 in 0.0_f64..0.5,
    ) {
        let p_initial = ModelParams::new(p_final.omega, g0, 0.0, p_final.n_tr).unwrap();
        let state = quench(&p_initial, &p_final).unwrap();
        prop_assert!((state.norm_squared() - 1.0).abs() < 1e-12);
        // energy consistency between the two routes
        let expected: f64 = state
            .coefficients()
            .iter()
            .zip(state.decomposition().energies())
            .map(|(c, e)| c.norm_sqr() * e)
            .sum();
        prop_assert!((state.energy() - expected).abs() < 1e-10);
    }

    #[test]
    fn evolved_states_stay_normalized(
        p in small_params(),
        t in 0.0_f64..1e6,
        index in 0_usize..6,
    ) {
        let dec = Arc::new(decompose_hamiltonian(&p).unwrap());
        let mut c = Array1::<Complex64>::zeros(dec.dim());
        let k = index % dec.dim();
        c[k] = Complex64::new(0.6_f64.sqrt(), 0.0);
        let k2 = (k + 1) % dec.dim();
        c[k2] += Complex64::new(0.0, 0.4_f64.sqrt());
        let state = QuenchState::from_coefficients(c, dec).unwrap();
        let psi = state.product_state_at(t);
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reduced_field_is_a_density_matrix(coeffs in proptest::collection::vec(
        (-1.0_f64..1.0, -1.0_f64..1.0), 8)
    ) {
        let mut state = Array1::<Complex64>::zeros(8);
        for (k, (re, im)) in coeffs.iter().enumerate() {
            state[k] = Complex64::new(*re, *im);
        }
        let norm: f64 = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        state.mapv_inplace(|z| z / norm);
        let rho = reduce_field(&state).unwrap();
        let trace: f64 = (0..4).map(|i| rho[(i, i)].re).sum();
        prop_assert!((trace - 1.0).abs() < 1e-12);
        for i in 0..4 {
            for j in 0..4 {
                prop_assert!((rho[(i, j)] - rho[(j, i)].conj()).norm() < 1e-12);
            }
        }
        // positive semidefinite, rank at most two, purity in [1/2, 1]
        let comps = complex_hermitian_eigendecompose(&rho, 0.0).unwrap();
        for (w, _) in &comps {
            prop_assert!(*w > -1e-10);
        }
        let significant = comps.iter().filter(|(w, _)| *w > 1e-9).count();
        prop_assert!(significant <= 2);
        let purity = field_purity(&rho);
        prop_assert!(purity > 0.5 - 1e-9 && purity < 1.0 + 1e-9);
    }

    #[test]
    fn classical_flow_is_the_energy_gradient(
        x in -3.0_f64..3.0,
        p in -3.0_f64..3.0,
        z in -0.95_f64..0.95,
        dphi in -3.0_f64..3.0,
        omega in 0.1_f64..2.0,
        g in 0.0_f64..5.0,
        lambda in -2.0_f64..2.0,
    ) {
        let params = ModelParams::new(omega, g, lambda, 0).unwrap();
        let s = ClassicalState::new(x, p, z, dphi).unwrap();
        let d = eom_rhs(&s, &params);
        let h = 1e-6;
        let e = |x: f64, pv: f64, z: f64, phi: f64| {
            classical_energy(&ClassicalState { x, p: pv, z, dphi: phi }, &params).unwrap()
        };
        prop_assert!((d[0] - (e(x, p + h, z, dphi) - e(x, p - h, z, dphi)) / (2.0 * h)).abs() < 1e-5);
        prop_assert!((d[1] + (e(x + h, p, z, dphi) - e(x - h, p, z, dphi)) / (2.0 * h)).abs() < 1e-5);
        prop_assert!((d[2] + (e(x, p, z, dphi + h) - e(x, p, z, dphi - h)) / (2.0 * h)).abs() < 1e-5);
        prop_assert!((d[3] - (e(x, p, z + h, dphi) - e(x, p, z - h, dphi)) / (2.0 * h)).abs() < 1e-5);
    }
}
