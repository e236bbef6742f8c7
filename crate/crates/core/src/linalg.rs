//! Small dense linear-algebra helpers shared by the geometry modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub fn inner(g: &DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    (u.transpose() * g * v)[(0, 0)]
}

pub fn norm(g: &DMatrix<f64>, u: &DVector<f64>) -> f64 {
    inner(g, u, u).max(0.0).sqrt()
}

/// Gram–Schmidt in index order with respect to `g`. Fails on a (numerically)
/// dependent input vector.
pub fn gram_schmidt(g: &DMatrix<f64>, vectors: &[DVector<f64>]) -> Option<Vec<DVector<f64>>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        // two passes keep the frame orthonormal to machine precision
        for _ in 0..2 {
            for e in &out {
                let c = inner(g, e, &w);
                w -= e * c;
            }
        }
        let n = norm(g, &w);
        if !(n > 1e-12 * (1.0 + norm(g, v))) {
            return None;
        }
        out.push(w / n);
    }
    Some(out)
}

/// Orthonormal frame of the coordinate vectors at a point.
pub fn coordinate_frame(g: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let n = g.nrows();
    let basis: Vec<DVector<f64>> = (0..n).map(|i| unit(n, i)).collect();
    gram_schmidt(g, &basis).expect("metric is positive definite")
}

pub fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

pub fn invert_spd(g: &DMatrix<f64>, point: &[f64]) -> Result<DMatrix<f64>> {
    let degenerate = || Error::DegenerateMetric { point: point.to_vec() };
    if g.iter().any(|v| !v.is_finite()) {
        return Err(degenerate());
    }
    let chol = g.clone().cholesky().ok_or_else(degenerate)?;
    let inv = chol.inverse();
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(degenerate());
    }
    Ok(inv)
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Ascending eigenpairs of a symmetric matrix.
pub fn sym_eigen(a: &DMatrix<f64>) -> Vec<(f64, DVector<f64>)> {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut pairs: Vec<(f64, DVector<f64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, eig.eigenvectors.column(i).into_owned()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Matrix of `a` in the orthonormal frame `e` (columns as vectors).
pub fn in_frame(a: &DMatrix<f64>, e: &[DVector<f64>]) -> DMatrix<f64> {
    let k = e.len();
    DMatrix::from_fn(k, k, |i, j| (e[i].transpose() * a * &e[j])[(0, 0)])
}

/// Pairwise (tree) summation; the result depends only on the input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_schmidt_is_orthonormal_for_skewed_metric() {
        let g = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.1, 0.5, 1.0, 0.2, 0.1, 0.2, 3.0]);
        let e = coordinate_frame(&g);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((inner(&g, &e[i], &e[j]) - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn pairwise_sum_matches_plain_sum_on_integers() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500500.0);
    }

    #[test]
    fn singular_matrix_is_degenerate() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(invert_spd(&g, &[0.0]), Err(Error::DegenerateMetric { .. })));
    }
}
