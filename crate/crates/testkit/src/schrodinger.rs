//! Direct numerical integration of the Schrödinger equation.
//!
//! Adaptive Runge-Kutta-Fehlberg 4(5) on dψ/dt = -iHψ with a real symmetric
//! Hamiltonian. Used to cross-check spectral time evolution on small systems.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

fn matvec(h: &Array2<f64>, psi: &Array1<Complex64>) -> Array1<Complex64> {
    let n = psi.len();
    let mut out = Array1::<Complex64>::zeros(n);
    for i in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        let row = h.row(i);
        for j in 0..n {
            acc += row[j] * psi[j];
        }
        out[i] = acc;
    }
    out
}

fn rhs(h: &Array2<f64>, psi: &Array1<Complex64>) -> Array1<Complex64> {
    // dψ/dt = -i H ψ
    matvec(h, psi).mapv(|z| Complex64::new(z.im, -z.re))
}

fn rkf45_step(
    h_mat: &Array2<f64>,
    psi: &Array1<Complex64>,
    dt: f64,
) -> (Array1<Complex64>, f64) {
    let k1 = rhs(h_mat, psi);
    let k2 = rhs(h_mat, &(psi + &(&k1 * (dt * 0.25))));
    let k3 = rhs(
        h_mat,
        &(psi + &(&k1 * (dt * 3.0 / 32.0)) + &(&k2 * (dt * 9.0 / 32.0))),
    );
    let k4 = rhs(
        h_mat,
        &(psi + &(&k1 * (dt * 1932.0 / 2197.0)) - &(&k2 * (dt * 7200.0 / 2197.0))
            + &(&k3 * (dt * 7296.0 / 2197.0))),
    );
    let k5 = rhs(
        h_mat,
        &(psi + &(&k1 * (dt * 439.0 / 216.0)) - &(&k2 * (dt * 8.0))
            + &(&k3 * (dt * 3680.0 / 513.0))
            - &(&k4 * (dt * 845.0 / 4104.0))),
    );
    let k6 = rhs(
        h_mat,
        &(psi - &(&k1 * (dt * 8.0 / 27.0)) + &(&k2 * (dt * 2.0))
            - &(&k3 * (dt * 3544.0 / 2565.0))
            + &(&k4 * (dt * 1859.0 / 4104.0))
            - &(&k5 * (dt * 11.0 / 40.0))),
    );

    let fifth = psi
        + &(&k1 * (dt * 16.0 / 135.0))
        + &(&k3 * (dt * 6656.0 / 12825.0))
        + &(&k4 * (dt * 28561.0 / 56430.0))
        - &(&k5 * (dt * 9.0 / 50.0))
        + &(&k6 * (dt * 2.0 / 55.0));
    let fourth = psi
        + &(&k1 * (dt * 25.0 / 216.0))
        + &(&k3 * (dt * 1408.0 / 2565.0))
        + &(&k4 * (dt * 2197.0 / 4104.0))
        - &(&k5 * (dt * 0.2));

    let mut err = 0.0_f64;
    for (a, b) in fifth.iter().zip(fourth.iter()) {
        err = err.max((a - b).norm());
    }
    (fifth, err)
}

/// Integrate from t = 0 and return the state at each requested time.
///
/// `times` must be ascending and nonnegative. `tol` bounds the per-step local
/// error estimate.
pub fn integrate_schrodinger(
    h_mat: &Array2<f64>,
    psi0: &Array1<Complex64>,
    times: &[f64],
    tol: f64,
) -> Vec<Array1<Complex64>> {
    let mut out = Vec::with_capacity(times.len());
    let mut psi = psi0.clone();
    let mut t = 0.0_f64;
    let mut dt = 1e-3_f64;

    for &target in times {
        assert!(target >= t, "times must be ascending");
        while t < target {
            let step = dt.min(target - t);
            let (next, err) = rkf45_step(h_mat, &psi, step);
            if err <= tol || step <= 1e-12 {
                psi = next;
                t += step;
                let grow = if err > 0.0 {
                    0.9 * (tol / err).powf(0.2)
                } else {
                    2.0
                };
                dt = (step * grow.clamp(0.2, 2.0)).min(1.0);
            } else {
                dt = step * (0.9 * (tol / err).powf(0.2)).clamp(0.1, 0.9);
            }
        }
        out.push(psi.clone());
    }
    out
}

/// Expectation values ⟨ψ(t)|A|ψ(t)⟩ for each observable at each time.
pub fn evolve_expectations(
    h_mat: &Array2<f64>,
    observables: &[&Array2<f64>],
    psi0: &Array1<Complex64>,
    times: &[f64],
    tol: f64,
) -> Vec<Vec<f64>> {
    let states = integrate_schrodinger(h_mat, psi0, times, tol);
    states
        .iter()
        .map(|psi| {
            observables
                .iter()
                .map(|a| {
                    let ap = matvec(a, psi);
                    psi.iter().zip(ap.iter()).map(|(c, v)| (c.conj() * v).re).sum()
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn two_level_rabi_oscillation() {
        // H = σ_x: |0⟩ evolves with P_1(t) = sin²(t)
        let h = array![[0.0, 1.0], [1.0, 0.0]];
        let psi0 = Array1::from(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let times = [0.0, 0.3, 1.1, 2.7];
        let states = integrate_schrodinger(&h, &psi0, &times, 1e-11);
        for (&t, psi) in times.iter().zip(states.iter()) {
            let p1 = psi[1].norm_sqr();
            assert!((p1 - t.sin().powi(2)).abs() < 1e-8, "t={t}");
            let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-9);
        }
    }
}
