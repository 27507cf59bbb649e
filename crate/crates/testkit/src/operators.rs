//! Literal operator-product construction of spin-boson matrices.
//!
//! Builds a†, a and the Pauli matrices as explicit dense blocks and assembles
//! Hamiltonians by Kronecker products and sums, term by term. Ordering
//! convention: basis |n, s⟩ at flat index 2n + (s-1), spin s=1 is the lower
//! σ_z eigenstate, so kron(boson, spin) with 2x2 spin blocks innermost.

use ndarray::Array2;

/// Kronecker product with `b` as the fast (inner) index block.
pub fn kron(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::<f64>::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Elementary one-body operators on the truncated boson mode and the spin.
pub struct OperatorSet {
    pub number: Array2<f64>,
    pub create: Array2<f64>,
    pub annihilate: Array2<f64>,
    pub boson_identity: Array2<f64>,
    pub sigma_x: Array2<f64>,
    pub sigma_z: Array2<f64>,
    pub spin_identity: Array2<f64>,
}

impl OperatorSet {
    pub fn new(n_tr: usize) -> Self {
        let nb = n_tr + 1;
        let mut number = Array2::<f64>::zeros((nb, nb));
        let mut create = Array2::<f64>::zeros((nb, nb));
        let mut annihilate = Array2::<f64>::zeros((nb, nb));
        for n in 0..nb {
            number[(n, n)] = n as f64;
            if n + 1 < nb {
                create[(n + 1, n)] = ((n + 1) as f64).sqrt();
                annihilate[(n, n + 1)] = ((n + 1) as f64).sqrt();
            }
        }
        // spin basis (s=1, s=2) with σ_z = diag(-1, +1)
        let mut sigma_x = Array2::<f64>::zeros((2, 2));
        sigma_x[(0, 1)] = 1.0;
        sigma_x[(1, 0)] = 1.0;
        let mut sigma_z = Array2::<f64>::zeros((2, 2));
        sigma_z[(0, 0)] = -1.0;
        sigma_z[(1, 1)] = 1.0;
        OperatorSet {
            number,
            create,
            annihilate,
            boson_identity: Array2::eye(nb),
            sigma_x,
            sigma_z,
            spin_identity: Array2::eye(2),
        }
    }
}

/// Driven Rabi Hamiltonian assembled as the literal sum of its four terms:
/// a†a + (ω/2)σ_z + g(a†+a)σ_x + λσ_x.
pub fn rabi_hamiltonian_by_operators(omega: f64, g: f64, lambda: f64, n_tr: usize) -> Array2<f64> {
    let ops = OperatorSet::new(n_tr);
    let field = &ops.create + &ops.annihilate;
    kron(&ops.number, &ops.spin_identity)
        + kron(&ops.boson_identity, &ops.sigma_z) * (omega / 2.0)
        + kron(&field, &ops.sigma_x) * g
        + kron(&ops.boson_identity, &ops.sigma_x) * lambda
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoupled_limit_is_diagonal() {
        let h = rabi_hamiltonian_by_operators(1.0, 0.0, 0.0, 1);
        let expect = [-0.5, 0.5, 0.5, 1.5];
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { expect[i] } else { 0.0 };
                assert!((h[(i, j)] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn hamiltonian_is_symmetric() {
        let h = rabi_hamiltonian_by_operators(0.7, 3.0, 1.2, 5);
        for i in 0..h.nrows() {
            for j in 0..h.ncols() {
                assert_eq!(h[(i, j)], h[(j, i)]);
            }
        }
    }
}
