//! Small dense linear algebra used across the crate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigen-decomposition of a symmetric pencil `(a, b)` with `b` positive definite.
///
/// Returns eigenvalues in ascending order and `b`-orthonormal eigenvectors
/// as the columns of the second matrix. `None` when `b` is not positive definite.
pub fn symmetric_pencil_eigen(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let chol = b.clone().cholesky()?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse()?;
    let c = &l_inv * symmetrize(a) * l_inv.transpose();
    let eig = SymmetricEigen::new(symmetrize(&c));
    let m = a.nrows();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(m, order.iter().map(|&i| eig.eigenvalues[i]));
    let q = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    let vectors = l_inv.transpose() * q;
    Some((values, vectors))
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Frobenius norm of the antisymmetric part.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    ((a - a.transpose()) * 0.5).norm()
}

/// Ratio of smallest to largest singular value (0 for a zero matrix).
pub fn condition_ratio(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0.0;
    }
    sv.min() / max
}

/// Eigenvalues of a symmetric matrix with their eigenvectors, ascending.
pub fn symmetric_eigen_sorted(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(symmetrize(a));
    let m = a.nrows();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(m, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Minimum-norm least-squares solution of `a x = b` and its residual norm.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(b, 1e-14 * svd.singular_values.max())
        .unwrap_or_else(|_| DVector::zeros(a.ncols()));
    let residual = (a * &x - b).norm();
    (x, residual)
}

/// Column-stacks vectors into a matrix.
pub fn columns(vectors: &[DVector<f64>]) -> DMatrix<f64> {
    let n = vectors.first().map_or(0, |v| v.len());
    DMatrix::from_fn(n, vectors.len(), |r, c| vectors[c][r])
}

/// The `g`-orthogonal projector onto the span of the columns of `basis`.
///
/// The span must be non-degenerate for `g`; for spacelike screens it always is.
pub fn metric_projector(g: &DMatrix<f64>, basis: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let gram = basis.transpose() * g * basis;
    let inv = gram.try_inverse()?;
    Some(basis * inv * basis.transpose() * g)
}

/// Groups sorted values whose relative separation is below `rel` (or absolute below `abs`).
pub fn cluster_sorted(values: &[f64], rel: f64, abs: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize, f64)> = Vec::new();
    for &v in values {
        if let Some(last) = out.last_mut() {
            let scale = last.0.abs().max(v.abs());
            if (v - last.0).abs() <= rel * scale || (v - last.0).abs() <= abs {
                last.2 += v;
                last.1 += 1;
                continue;
            }
        }
        out.push((v, 1, v));
    }
    out.into_iter()
        .map(|(_, m, sum)| (sum / m as f64, m))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pencil_eigen_identity_metric() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let b = DMatrix::identity(2, 2);
        let (vals, vecs) = symmetric_pencil_eigen(&a, &b).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        let gram = vecs.transpose() * &b * &vecs;
        assert!((gram - DMatrix::<f64>::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn pencil_eigen_general_metric() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, -2.0]);
        let b = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let (vals, vecs) = symmetric_pencil_eigen(&a, &b).unwrap();
        for k in 0..2 {
            let v = vecs.column(k);
            let r = &a * v - (&b * v) * vals[k];
            assert!(r.norm() < 1e-12);
        }
        assert!(vals[0] <= vals[1]);
    }

    #[test]
    fn clustering_merges_close_values() {
        let c = cluster_sorted(&[1.0, 1.0 + 1e-9, 2.0], 1e-6, 1e-12);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].1, 2);
        let z = cluster_sorted(&[-1e-14, 1e-14], 1e-6, 1e-12);
        assert_eq!(z, vec![(0.0, 2)]);
    }

    #[test]
    fn projector_is_idempotent() {
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 1.0, -1.0]));
        let basis = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.3, 0.2]);
        let p = metric_projector(&g, &basis).unwrap();
        assert!((&p * &p - &p).norm() < 1e-13);
        assert!((&p * &basis - &basis).norm() < 1e-13);
    }
}
