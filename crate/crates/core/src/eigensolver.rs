//! Dense eigensolver for real symmetric matrices.
//!
//! Householder reduction to tridiagonal form followed by the implicitly
//! shifted QL iteration with eigenvector accumulation. This is the single
//! kernel behind every spectral quantity in the crate; it is deterministic
//! (bit-identical output for identical input) and has no external
//! dependencies. A slow Jacobi implementation lives in the test tree as the
//! independent oracle.

use crate::hamiltonian::{build_hamiltonian, HamiltonianError, HermitianObservable, ModelParams};
use ndarray::{Array1, Array2, ArrayView1, ShapeBuilder};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Implicit shifts allowed per eigenvalue before declaring failure.
const MAX_QL_ITERATIONS: usize = 50;

/// Eigenvalues closer than this are treated as one numerically degenerate
/// cluster when fixing the eigenvector gauge.
pub const DEGENERACY_GAP_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("matrix is not symmetric: max |a_ij - a_ji| = {asymmetry:.3e} (dim {dim})")]
    NotSymmetric { dim: usize, asymmetry: f64 },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("QL iteration failed to converge at eigenvalue {index} after {iterations} shifts (dim {dim}, off-diagonal {offdiag:.3e})")]
    NoConvergence {
        index: usize,
        iterations: usize,
        dim: usize,
        offdiag: f64,
    },
    #[error("observable used for degeneracy resolution must be real symmetric")]
    ComplexResolver,
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
}

/// Complete spectrum of a real symmetric matrix.
///
/// `energies` ascending; column ν of `vectors` is the eigenvector |ψ_ν⟩.
/// Within numerically degenerate clusters the basis is re-orthogonalized and
/// sign-fixed deterministically; downstream formulas never rely on individual
/// vectors inside a cluster.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    energies: Vec<f64>,
    vectors: Array2<f64>,
    params_hash: String,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, nu: usize) -> f64 {
        self.energies[nu]
    }

    /// Orthonormal eigenvector matrix; column ν is |ψ_ν⟩.
    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }

    pub fn vector(&self, nu: usize) -> ArrayView1<'_, f64> {
        self.vectors.column(nu)
    }

    /// Identifier of the generating inputs (model parameters or raw matrix).
    pub fn params_hash(&self) -> &str {
        &self.params_hash
    }

    /// Reassemble from parts (cache deserialization). The caller is
    /// responsible for having validated the invariants.
    pub fn from_parts(energies: Vec<f64>, vectors: Array2<f64>, params_hash: String) -> Self {
        assert_eq!(energies.len(), vectors.nrows());
        assert_eq!(vectors.nrows(), vectors.ncols());
        EigenDecomposition { energies, vectors, params_hash }
    }

    /// Max deviation of VᵀV from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.vectors.t().dot(&self.vectors);
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - want).abs());
            }
        }
        worst
    }

    /// Max-norm residual ‖HV - V diag(E)‖ against the generating matrix.
    pub fn residual_error(&self, matrix: &Array2<f64>) -> f64 {
        let hv = matrix.dot(&self.vectors);
        let n = self.dim();
        let mut worst = 0.0_f64;
        for j in 0..n {
            for i in 0..n {
                worst = worst.max((hv[(i, j)] - self.energies[j] * self.vectors[(i, j)]).abs());
            }
        }
        worst
    }

    /// Index ranges of numerically degenerate clusters (gap < `gap_tol`).
    pub fn degenerate_clusters(&self, gap_tol: f64) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let n = self.dim();
        let mut start = 0;
        for i in 1..=n {
            if i == n || self.energies[i] - self.energies[i - 1] >= gap_tol {
                if i - start > 1 {
                    out.push(start..i);
                }
                start = i;
            }
        }
        out
    }

    /// Rotate eigenvectors within near-degenerate clusters so that they also
    /// diagonalize `obs`, then re-fix signs.
    ///
    /// For an observable commuting with the matrix (e.g. parity at λ = 0)
    /// this restores the symmetry-adapted basis that roundoff scrambles when
    /// level splittings sink below the backward-error scale. Rotating a
    /// cluster of width w changes eigenvector residuals by at most w, so
    /// `gap_tol` should stay well below the accepted residual budget.
    pub fn resolve_degenerate_with(
        &mut self,
        obs: &HermitianObservable,
        gap_tol: f64,
    ) -> Result<(), EigenError> {
        if !obs.is_real() {
            return Err(EigenError::ComplexResolver);
        }
        let clusters = self.degenerate_clusters(gap_tol);
        for cluster in clusters {
            let w = self.vectors.slice(ndarray::s![.., cluster.clone()]).to_owned();
            let ow = obs.sym().dot(&w);
            let b = w.t().dot(&ow);
            let (_, rot) = small_jacobi(&b);
            let rotated = w.dot(&rot);
            self.vectors
                .slice_mut(ndarray::s![.., cluster.clone()])
                .assign(&rotated);
            for j in cluster {
                fix_column_sign(&mut self.vectors, j);
            }
        }
        Ok(())
    }
}

/// Ground level of a model Hamiltonian.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    /// Normalized, sign-fixed eigenvector in the product basis.
    pub vector: Array1<f64>,
    /// E_1 - E_0; callers decide what to do when this is numerically zero.
    pub gap_to_first_excited: f64,
}

impl GroundState {
    pub fn is_degenerate(&self) -> bool {
        self.gap_to_first_excited < 1e-12
    }
}

/// Full eigendecomposition of a real symmetric matrix.
pub fn eigendecompose(matrix: &Array2<f64>) -> Result<EigenDecomposition, EigenError> {
    eigendecompose_with_hash(matrix, matrix_hash(matrix))
}

/// Decompose the Hamiltonian generated by `params`, keyed by its content
/// hash (the cache identity).
pub fn decompose_hamiltonian(params: &ModelParams) -> Result<EigenDecomposition, EigenError> {
    let h = build_hamiltonian(params)?;
    eigendecompose_with_hash(h.sym(), params.content_hash())
}

/// Ground state of the Hamiltonian generated by `params`.
pub fn ground_state(params: &ModelParams) -> Result<GroundState, EigenError> {
    let dec = decompose_hamiltonian(params)?;
    let gap = if dec.dim() > 1 {
        dec.energy(1) - dec.energy(0)
    } else {
        f64::INFINITY
    };
    Ok(GroundState {
        energy: dec.energy(0),
        vector: dec.vector(0).to_owned(),
        gap_to_first_excited: gap,
    })
}

pub fn eigendecompose_with_hash(
    matrix: &Array2<f64>,
    params_hash: String,
) -> Result<EigenDecomposition, EigenError> {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "matrix must be square");

    let mut scale = 0.0_f64;
    let mut asymmetry = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let v = matrix[(i, j)];
            if !v.is_finite() {
                return Err(EigenError::NonFinite);
            }
            scale = scale.max(v.abs());
            asymmetry = asymmetry.max((v - matrix[(j, i)]).abs());
        }
    }
    if asymmetry > 1e-12 * scale.max(1.0) {
        return Err(EigenError::NotSymmetric { dim: n, asymmetry });
    }

    // Working copy, row-major flat.
    let mut a: Vec<f64> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            a.push(matrix[(i, j)]);
        }
    }
    let mut d = vec![0.0_f64; n];
    let mut e = vec![0.0_f64; n];
    tred2(&mut a, n, &mut d, &mut e);

    // Transpose the accumulated transform so each eigenvector is a contiguous
    // row during the QL sweeps (the rotation loop dominates the runtime).
    let mut vt = vec![0.0_f64; n * n];
    for i in 0..n {
        for j in 0..n {
            vt[j * n + i] = a[i * n + j];
        }
    }
    tql2(&mut d, &mut e, &mut vt, n)?;

    // Sort ascending, reordering eigenvector rows.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let energies: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut sorted = vec![0.0_f64; n * n];
    for (dst, &src) in order.iter().enumerate() {
        sorted[dst * n..(dst + 1) * n].copy_from_slice(&vt[src * n..(src + 1) * n]);
    }

    regauge_clusters(&energies, &mut sorted, n);

    // Rows of `sorted` are eigenvectors; expose the math convention
    // (column ν = eigenvector) by wrapping column-major.
    let vectors = Array2::from_shape_vec((n, n).f(), sorted).expect("shape");
    let mut dec = EigenDecomposition { energies, vectors, params_hash };
    for j in 0..n {
        fix_column_sign(&mut dec.vectors, j);
    }
    Ok(dec)
}

/// Householder reduction of a (row-major flat, symmetric) to tridiagonal
/// form with accumulated transformations left in `a`.
fn tred2(a: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0_f64;
        if l > 0 {
            let scale: f64 = a[i * n..i * n + i].iter().map(|x| x.abs()).sum();
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..i {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                let mut f_acc = 0.0_f64;
                for j in 0..i {
                    a[j * n + i] = a[i * n + j] / h;
                    let mut g_acc = 0.0_f64;
                    for k in 0..=j {
                        g_acc += a[j * n + k] * a[i * n + k];
                    }
                    for k in (j + 1)..i {
                        g_acc += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g_acc / h;
                    f_acc += e[j] * a[i * n + j];
                }
                let hh = f_acc / (h + h);
                for j in 0..i {
                    let f = a[i * n + j];
                    e[j] -= hh * f;
                    let g = e[j];
                    for k in 0..=j {
                        a[j * n + k] -= f * e[k] + g * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            // accumulate the stored transform into columns 0..i
            for j in 0..i {
                let mut g = 0.0_f64;
                for k in 0..i {
                    g += a[i * n + k] * a[k * n + j];
                }
                for k in 0..i {
                    a[k * n + j] -= g * a[k * n + i];
                }
            }
        }
        d[i] = a[i * n + i];
        a[i * n + i] = 1.0;
        for j in 0..i {
            a[j * n + i] = 0.0;
            a[i * n + j] = 0.0;
        }
    }
}

/// Implicitly shifted QL on the tridiagonal (d, e), rotating the rows of the
/// transposed transform `vt` alongside.
fn tql2(d: &mut [f64], e: &mut [f64], vt: &mut [f64], n: usize) -> Result<(), EigenError> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;

    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > MAX_QL_ITERATIONS {
                return Err(EigenError::NoConvergence {
                    index: l,
                    iterations: MAX_QL_ITERATIONS,
                    dim: n,
                    offdiag: e[l].abs(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let denom = g + if g >= 0.0 { r } else { -r };
            g = d[m] - d[l] + e[l] / denom;
            let mut s = 1.0_f64;
            let mut c = 1.0_f64;
            let mut p = 0.0_f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;

                let (row_i, row_ip1) = vt.split_at_mut((i + 1) * n);
                let row_i = &mut row_i[i * n..];
                let row_ip1 = &mut row_ip1[..n];
                for k in 0..n {
                    f = row_ip1[k];
                    row_ip1[k] = s * row_i[k] + c * f;
                    row_i[k] = c * row_i[k] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Re-orthogonalize eigenvector rows inside numerically degenerate clusters
/// (modified Gram-Schmidt, deterministic order).
fn regauge_clusters(energies: &[f64], rows: &mut [f64], n: usize) {
    let mut start = 0;
    for i in 1..=n {
        if i == n || energies[i] - energies[i - 1] >= DEGENERACY_GAP_TOL {
            if i - start > 1 {
                for j in start..i {
                    for prev in start..j {
                        let (a, b) = rows.split_at_mut(j * n);
                        let prev_row = &a[prev * n..prev * n + n];
                        let row = &mut b[..n];
                        let dot: f64 = prev_row.iter().zip(row.iter()).map(|(x, y)| x * y).sum();
                        for k in 0..n {
                            row[k] -= dot * prev_row[k];
                        }
                    }
                    let row = &mut rows[j * n..(j + 1) * n];
                    let norm: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm > 0.0 {
                        for x in row.iter_mut() {
                            *x /= norm;
                        }
                    }
                }
            }
            start = i;
        }
    }
}

/// Make the largest-magnitude component of column `j` positive (first index
/// wins exact ties).
fn fix_column_sign(vectors: &mut Array2<f64>, j: usize) {
    let n = vectors.nrows();
    let mut best = 0;
    let mut best_abs = vectors[(0, j)].abs();
    for i in 1..n {
        let a = vectors[(i, j)].abs();
        if a > best_abs {
            best_abs = a;
            best = i;
        }
    }
    if vectors[(best, j)] < 0.0 {
        for i in 0..n {
            vectors[(i, j)] = -vectors[(i, j)];
        }
    }
}

/// Cyclic Jacobi for the small symmetric blocks arising in cluster
/// resolution. Returns eigenvalues (unsorted significance, ascending) and the
/// rotation matrix.
fn small_jacobi(b: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let k = b.nrows();
    let mut m = b.clone();
    let mut rot = Array2::<f64>::eye(k);
    for _ in 0..100 {
        let mut off = 0.0_f64;
        for i in 0..k {
            for j in (i + 1)..k {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() < 1e-14 {
            break;
        }
        for p in 0..k {
            for q in (p + 1)..k {
                if m[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for r in 0..k {
                    let mrp = m[(r, p)];
                    let mrq = m[(r, q)];
                    m[(r, p)] = c * mrp - s * mrq;
                    m[(r, q)] = s * mrp + c * mrq;
                }
                for r in 0..k {
                    let mpr = m[(p, r)];
                    let mqr = m[(q, r)];
                    m[(p, r)] = c * mpr - s * mqr;
                    m[(q, r)] = s * mpr + c * mqr;
                }
                for r in 0..k {
                    let rp = rot[(r, p)];
                    let rq = rot[(r, q)];
                    rot[(r, p)] = c * rp - s * rq;
                    rot[(r, q)] = s * rp + c * rq;
                }
            }
        }
    }
    // order by eigenvalue so the resolved basis is deterministic
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let vals: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    let mut sorted = Array2::<f64>::zeros((k, k));
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..k {
            sorted[(r, dst)] = rot[(r, src)];
        }
    }
    (vals, sorted)
}

fn matrix_hash(matrix: &Array2<f64>) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"raw-matrix");
    hasher.update((matrix.nrows() as u64).to_le_bytes());
    for v in matrix.iter() {
        hasher.update(v.to_bits().to_le_bytes());
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_parity, ObsKind};
    use ndarray::array;

    fn params(omega: f64, g: f64, lambda: f64, n_tr: usize) -> ModelParams {
        ModelParams::new(omega, g, lambda, n_tr).unwrap()
    }

    #[test]
    fn diagonal_input_sorts_with_permutation_vectors() {
        let m = array![[3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]];
        let dec = eigendecompose(&m).unwrap();
        assert_eq!(dec.energies(), &[1.0, 2.0, 3.0]);
        // vectors form a permutation matrix
        for j in 0..3 {
            let col = dec.vector(j);
            let ones = col.iter().filter(|v| (v.abs() - 1.0).abs() < 1e-14).count();
            let zeros = col.iter().filter(|v| v.abs() < 1e-14).count();
            assert_eq!((ones, zeros), (1, 2));
        }
    }

    #[test]
    fn two_by_two_closed_form() {
        let m = array![[-0.5, 2.0], [2.0, 0.5]];
        let dec = eigendecompose(&m).unwrap();
        let root = 4.25_f64.sqrt();
        assert!((dec.energy(0) + root).abs() < 1e-12);
        assert!((dec.energy(1) - root).abs() < 1e-12);
    }

    #[test]
    fn random_matrix_matches_jacobi_oracle() {
        // deterministic pseudo-random symmetric matrix
        let n = 50;
        let mut m = Array2::<f64>::zeros((n, n));
        let mut state = 0x9e3779b97f4a7c15_u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for i in 0..n {
            for j in 0..=i {
                let v = next();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let dec = eigendecompose(&m).unwrap();
        let (oracle, _) = rabi_testkit::jacobi_eigen(&m, 1e-13);
        for (a, b) in dec.energies().iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert!(dec.orthonormality_error() < 1e-10);
        assert!(dec.residual_error(&m) < 1e-8);
    }

    #[test]
    fn eigenvalue_sum_matches_trace() {
        let h = build_hamiltonian(&params(1.0, 3.0, 0.7, 30)).unwrap();
        let dec = eigendecompose(h.sym()).unwrap();
        let trace: f64 = (0..h.dim()).map(|i| h.sym()[(i, i)]).sum();
        let sum: f64 = dec.energies().iter().sum();
        assert!((trace - sum).abs() < 1e-8 * trace.abs().max(1.0));
    }

    #[test]
    fn spectrum_invariant_under_permutation() {
        let h = build_hamiltonian(&params(0.9, 2.0, 0.3, 10)).unwrap();
        let d = h.dim();
        // reverse the basis order
        let mut permuted = Array2::<f64>::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                permuted[(d - 1 - i, d - 1 - j)] = h.sym()[(i, j)];
            }
        }
        let a = eigendecompose(h.sym()).unwrap();
        let b = eigendecompose(&permuted).unwrap();
        for (x, y) in a.energies().iter().zip(b.energies().iter()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_asymmetric_and_nonfinite() {
        let m = array![[1.0, 2.0], [2.5, 1.0]];
        assert!(matches!(
            eigendecompose(&m),
            Err(EigenError::NotSymmetric { .. })
        ));
        let m = array![[f64::NAN, 0.0], [0.0, 1.0]];
        assert!(matches!(eigendecompose(&m), Err(EigenError::NonFinite)));
    }

    #[test]
    fn ground_state_decoupled_limit() {
        let gs = ground_state(&params(1.0, 0.0, 0.0, 5)).unwrap();
        assert!((gs.energy + 0.5).abs() < 1e-14);
        assert!((gs.vector[0] - 1.0).abs() < 1e-14);
        for k in 1..gs.vector.len() {
            assert!(gs.vector[k].abs() < 1e-14);
        }
    }

    #[test]
    fn ground_state_weak_coupling_perturbative() {
        let gs = ground_state(&params(1.0, 0.1, 0.0, 12)).unwrap();
        let norm: f64 = gs.vector.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-14);
        assert!(gs.vector[0] > 0.99, "overlap with |0,1> should dominate");
        let n_obs = crate::hamiltonian::build_observable(ObsKind::Number, 12).unwrap();
        let mean_n: f64 = (0..gs.vector.len())
            .map(|i| n_obs.sym()[(i, i)] * gs.vector[i] * gs.vector[i])
            .sum();
        assert!(mean_n < 0.02, "mean boson number {mean_n}");
    }

    #[test]
    fn deterministic_output() {
        let h = build_hamiltonian(&params(1.0, 4.0, 1.0, 20)).unwrap();
        let a = eigendecompose(h.sym()).unwrap();
        let b = eigendecompose(h.sym()).unwrap();
        assert_eq!(a.energies(), b.energies());
        for (x, y) in a.vectors().iter().zip(b.vectors().iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn parity_sectors_at_zero_drive() {
        // moderate case: every eigenvector should carry a sharp parity
        let p = params(1.0, 2.0, 0.0, 30);
        let h = build_hamiltonian(&p).unwrap();
        let mut dec = eigendecompose(h.sym()).unwrap();
        let pi = build_parity(p.n_tr);
        dec.resolve_degenerate_with(&pi, 1e-7).unwrap();
        let diag = pi.diagonal();
        for nu in 0..dec.dim() {
            let col = dec.vector(nu);
            let expect: f64 = col.iter().zip(diag.iter()).map(|(c, pi)| c * c * pi).sum();
            assert!(
                (expect.abs() - 1.0).abs() < 1e-8,
                "nu={nu} parity expectation {expect}"
            );
        }
    }

    #[test]
    fn cluster_resolution_keeps_residuals() {
        let p = params(1.0, 6.0, 0.0, 60);
        let h = build_hamiltonian(&p).unwrap();
        let mut dec = eigendecompose(h.sym()).unwrap();
        let pi = build_parity(p.n_tr);
        dec.resolve_degenerate_with(&pi, 1e-7).unwrap();
        assert!(dec.orthonormality_error() < 1e-10);
        let scale = h.sym().iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        assert!(dec.residual_error(h.sym()) < 1e-8 * scale);
    }
}
