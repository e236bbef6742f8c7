//! Calibration forms, calibrated planes and PSH defects.
//!
//! A function is PSH with respect to a family of planes when the trace of its
//! Hessian over every plane of the family is nonnegative; the defect at a
//! point is the minimum of that trace.

mod g2;
mod kahler;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::forms::AlternatingForm;
use crate::linalg;
use crate::manifold::{hessian, MetricField};

pub use g2::{
    associative_minimum, associative_plane, coassociative_residual, coassociative_test, g2_cross, g2_psh_defect,
    hphi_form, phi, psi, G2Structure, PHI_TERMS, PSI_TERMS,
};
pub use kahler::{kahler_psh_defect, levi_form, levi_form_coordinate, levi_minimum, omega_residual, KahlerStructure};

/// Oriented orthonormal `k`-frame at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub base: Vec<f64>,
    pub frame: Vec<DVector<f64>>,
}

impl Plane {
    /// Accepts a frame whose Gram matrix in `g` is the identity to 1e-10.
    pub fn new(base: Vec<f64>, frame: Vec<DVector<f64>>, g: &DMatrix<f64>) -> Result<Self> {
        let pl = Plane { base, frame };
        let residual = pl.gram_residual(g);
        if residual > 1e-10 {
            return Err(Error::NotOrthonormal { residual });
        }
        Ok(pl)
    }

    pub fn euclidean(base: Vec<f64>, frame: Vec<DVector<f64>>) -> Result<Self> {
        let n = frame.first().map_or(0, |v| v.len());
        Plane::new(base, frame, &DMatrix::identity(n, n))
    }

    /// Oriented span of the given vectors, orthonormalized in index order.
    pub fn from_span(base: Vec<f64>, vectors: &[DVector<f64>], g: &DMatrix<f64>) -> Result<Self> {
        let frame = linalg::gram_schmidt(g, vectors).ok_or_else(|| Error::RankDeficient {
            expected: vectors.len(),
            point: base.clone(),
        })?;
        Ok(Plane { base, frame })
    }

    /// Span of the coordinate vectors `e_i`, `i ∈ idx`, for the identity metric.
    pub fn coordinate(base: Vec<f64>, n: usize, idx: &[usize]) -> Self {
        Plane {
            base,
            frame: idx.iter().map(|&i| linalg::unit(n, i)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.frame.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.first().map_or(0, |v| v.len())
    }

    pub fn gram_residual(&self, g: &DMatrix<f64>) -> f64 {
        let k = self.dim();
        let mut worst = 0.0f64;
        for a in 0..k {
            for b in 0..k {
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((linalg::inner(g, &self.frame[a], &self.frame[b]) - want).abs());
            }
        }
        worst
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.frame)
    }

    /// Trace of a bilinear form over the plane.
    pub fn trace(&self, b: &DMatrix<f64>) -> f64 {
        self.frame.iter().map(|e| (e.transpose() * b * e)[(0, 0)]).sum()
    }
}

/// Principal angles between two planes (Euclidean inner product), ascending.
pub fn principal_angles(a: &Plane, b: &Plane) -> Vec<f64> {
    let m = a.matrix().transpose() * b.matrix();
    let mut s: Vec<f64> = m
        .svd(false, false)
        .singular_values
        .iter()
        .map(|v| v.clamp(-1.0, 1.0).acos())
        .collect();
    s.sort_by(|x, y| x.total_cmp(y));
    s
}

/// Largest principal angle; zero iff the planes span the same subspace.
pub fn plane_angle(a: &Plane, b: &Plane) -> f64 {
    if a.dim() != b.dim() {
        return std::f64::consts::FRAC_PI_2;
    }
    principal_angles(a, b).last().copied().unwrap_or(0.0)
}

pub fn restrict_form(a: &AlternatingForm, pl: &Plane) -> Result<f64> {
    if a.degree() != pl.dim() {
        return Err(Error::DegreeMismatch {
            degree: a.degree(),
            plane_dim: pl.dim(),
        });
    }
    if a.dim() != pl.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: pl.ambient_dim(),
        });
    }
    Ok(a.evaluate(&pl.frame))
}

pub fn is_calibrated(a: &AlternatingForm, pl: &Plane, tol: f64) -> Result<bool> {
    Ok((restrict_form(a, pl)? - 1.0).abs() <= tol)
}

/// Settings for Grassmannian minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub samples: usize,
    pub refine_iters: usize,
    /// How many of the best samples are refined.
    pub candidates: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            samples: 1024,
            refine_iters: 200,
            candidates: 8,
            seed: 0,
        }
    }
}

/// Minimum Hessian trace over a plane family, with the minimizing plane.
#[derive(Debug, Clone)]
pub struct PshDefect {
    pub defect: f64,
    pub witness: Plane,
    /// Best value before refinement.
    pub sampled: f64,
}

/// Indices of the `k` smallest values, ties broken by lower index.
pub(crate) fn best_indices(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    idx.truncate(k.max(1));
    idx
}

/// Sum of the `plane_dim` smallest eigenvalues of the Hessian in an
/// orthonormal frame: the minimum trace over all `plane_dim`-planes.
pub fn p_plane_psh_defect(g: &MetricField, f: &dyn ScalarField, p: &[f64], plane_dim: usize) -> Result<f64> {
    let n = g.dim();
    if plane_dim == 0 || plane_dim > n {
        return Err(Error::Precondition(format!(
            "plane dimension {plane_dim} not in 1..={n}"
        )));
    }
    let h = hessian(g, f, p)?;
    let frame = linalg::coordinate_frame(&g.at(p)?);
    let ev = linalg::sym_eigenvalues(&linalg::in_frame(&h, &frame));
    Ok(ev[..plane_dim].iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::expr_field;
    use crate::manifold::Domain;

    #[test]
    fn restriction_of_area_form() {
        let w = AlternatingForm::from_terms(2, 2, &[(&[0, 1], 1.0)]);
        assert_eq!(
            restrict_form(&w, &Plane::coordinate(vec![0.0; 2], 2, &[0, 1])).unwrap(),
            1.0
        );
        assert!(matches!(
            restrict_form(&w, &Plane::coordinate(vec![0.0; 2], 2, &[0])),
            Err(Error::DegreeMismatch { .. })
        ));
    }

    #[test]
    fn non_orthonormal_frames_are_rejected() {
        let v = vec![DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![1.0, 1.0])];
        assert!(matches!(
            Plane::euclidean(vec![0.0; 2], v),
            Err(Error::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn p_plane_defects() {
        let g = MetricField::euclidean(Domain::unbounded(2));
        let f = expr_field("2*x^2 - y^2", 2).unwrap();
        assert_eq!(p_plane_psh_defect(&g, &*f, &[0.1, 0.2], 1).unwrap(), -2.0);
        assert_eq!(p_plane_psh_defect(&g, &*f, &[0.1, 0.2], 2).unwrap(), 2.0);
        let g3 = MetricField::euclidean(Domain::unbounded(3));
        let f3 = expr_field("-x^2/2 + y^2 + 3*z^2/2", 3).unwrap();
        assert!((p_plane_psh_defect(&g3, &*f3, &[0.0; 3], 2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn principal_angle_between_lines() {
        let a = Plane::coordinate(vec![0.0; 2], 2, &[0]);
        let b = Plane::euclidean(vec![0.0; 2], vec![DVector::from_vec(vec![0.6, 0.8])]).unwrap();
        assert!((plane_angle(&a, &b) - 0.8f64.atan2(0.6)).abs() < 1e-12);
    }
}
