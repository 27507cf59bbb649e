//! Cyclic Jacobi eigensolver for real symmetric matrices.
//!
//! O(D^4)-ish and only fit for small matrices, which is the point: it shares
//! no machinery with the Householder/QL path it is used to cross-check.

use ndarray::Array2;

/// Full eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues sorted ascending and the orthogonal matrix whose
/// columns are the matching eigenvectors. Sweeps run until the off-diagonal
/// Frobenius norm drops below `tol` times the matrix scale.
pub fn jacobi_eigen(matrix: &Array2<f64>, tol: f64) -> (Vec<f64>, Array2<f64>) {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "matrix must be square");
    let mut a = matrix.clone();
    let mut v = Array2::<f64>::eye(n);

    let scale: f64 = matrix.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(1.0);

    for _sweep in 0..200 {
        let mut off = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() <= tol * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                // tan of the rotation angle, smaller root for stability
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let energies: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    (energies, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn diagonal_matrix_sorts() {
        let m = array![[3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]];
        let (e, _) = jacobi_eigen(&m, 1e-14);
        assert!((e[0] - 1.0).abs() < 1e-12);
        assert!((e[1] - 2.0).abs() < 1e-12);
        assert!((e[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_closed_form() {
        let m = array![[-0.5, 2.0], [2.0, 0.5]];
        let (e, v) = jacobi_eigen(&m, 1e-14);
        let root = (0.25_f64 + 4.0).sqrt();
        assert!((e[0] + root).abs() < 1e-12);
        assert!((e[1] - root).abs() < 1e-12);
        // residual ‖Mv - ev‖
        for k in 0..2 {
            let r0 = m[(0, 0)] * v[(0, k)] + m[(0, 1)] * v[(1, k)] - e[k] * v[(0, k)];
            let r1 = m[(1, 0)] * v[(0, k)] + m[(1, 1)] * v[(1, k)] - e[k] * v[(1, k)];
            assert!(r0.abs() < 1e-12 && r1.abs() < 1e-12);
        }
    }
}
