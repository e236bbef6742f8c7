use nalgebra::{DMatrix, DVector};

use super::{best_indices, Plane, PshDefect, SearchOptions};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::forms::{exterior_derivative_fd, AlternatingForm};
use crate::linalg;
use crate::manifold::{hessian, Domain, MetricField};
use crate::sampling::Kronecker;

/// Kähler structure: either a constant complex structure compatible with the
/// metric, or the +90° metric rotation on a surface.
#[derive(Debug, Clone)]
pub struct KahlerStructure {
    pub metric: MetricField,
    j: Option<DMatrix<f64>>,
}

impl KahlerStructure {
    /// Flat `ℂⁿ` in coordinates `(x_1..x_n, y_1..y_n)` with `J ∂x_j = ∂y_j`.
    pub fn flat(n_complex: usize) -> Self {
        KahlerStructure::flat_on(Domain::unbounded(2 * n_complex))
    }

    pub fn flat_on(domain: Domain) -> Self {
        let n2 = domain.dim();
        assert!(n2 % 2 == 0, "flat Kähler space needs even dimension");
        let n = n2 / 2;
        let mut j = DMatrix::zeros(n2, n2);
        for a in 0..n {
            j[(a + n, a)] = 1.0;
            j[(a, a + n)] = -1.0;
        }
        KahlerStructure {
            metric: MetricField::euclidean(domain),
            j: Some(j),
        }
    }

    pub fn with_constant_j(metric: MetricField, j: DMatrix<f64>) -> Result<Self> {
        let n = metric.dim();
        if j.nrows() != n || j.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: j.nrows(),
            });
        }
        if linalg::max_abs(&(&j * &j + DMatrix::identity(n, n))) > 1e-12 {
            return Err(Error::Config("complex structure does not square to -1".into()));
        }
        Ok(KahlerStructure { metric, j: Some(j) })
    }

    /// Surface metric with `J` the rotation by +90° in oriented orthonormal frames.
    pub fn surface(metric: MetricField) -> Result<Self> {
        if metric.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: metric.dim(),
            });
        }
        Ok(KahlerStructure { metric, j: None })
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn has_constant_j(&self) -> bool {
        self.j.is_some()
    }

    pub fn j_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        match &self.j {
            Some(j) => {
                self.metric.domain().check(p)?;
                Ok(j.clone())
            }
            None => {
                let g = self.metric.at(p)?;
                let det = g.determinant();
                if !(det > 0.0) {
                    return Err(Error::DegenerateMetric { point: p.to_vec() });
                }
                let s = 1.0 / det.sqrt();
                Ok(DMatrix::from_row_slice(
                    2,
                    2,
                    &[-g[(0, 1)] * s, -g[(1, 1)] * s, g[(0, 0)] * s, g[(0, 1)] * s],
                ))
            }
        }
    }

    /// `ω(X, Y) = g(JX, Y)`.
    pub fn omega_at(&self, p: &[f64]) -> Result<AlternatingForm> {
        let g = self.metric.at(p)?;
        let w = self.j_at(p)?.transpose() * g;
        let n = self.dim();
        let mut out = AlternatingForm::zero(n, 2);
        for i in 0..n {
            for j in i + 1..n {
                out.add_term(&[i, j], w[(i, j)]);
            }
        }
        Ok(out)
    }

    /// Largest `|g(JX,JY) − g(X,Y)|` over coordinate vectors.
    pub fn compatibility_residual(&self, p: &[f64]) -> Result<f64> {
        let g = self.metric.at(p)?;
        let j = self.j_at(p)?;
        Ok(linalg::max_abs(&(j.transpose() * &g * &j - &g)))
    }

    /// Largest coefficient of `dω` by central differences.
    pub fn closedness_residual(&self, p: &[f64], h: f64) -> Result<f64> {
        let mut q = p.to_vec();
        for i in 0..p.len() {
            for s in [h, -h] {
                q[i] = p[i] + s;
                self.omega_at(&q)?;
            }
            q[i] = p[i];
        }
        let d = exterior_derivative_fd(&|x| self.omega_at(x).expect("stencil checked"), p, h);
        Ok(d.max_abs())
    }
}

/// `Hess f(X,X) + Hess f(JX,JX)`.
pub fn levi_form(k: &KahlerStructure, f: &dyn ScalarField, p: &[f64], x: &DVector<f64>) -> Result<f64> {
    let h = hessian(&k.metric, f, p)?;
    let jx = k.j_at(p)? * x;
    Ok((x.transpose() * &h * x)[(0, 0)] + (jx.transpose() * &h * &jx)[(0, 0)])
}

/// `X(Xf) + JX(JXf) − df(J[X,JX])` for constant-coefficient `X` and constant
/// `J`, where the bracket vanishes.
pub fn levi_form_coordinate(k: &KahlerStructure, f: &dyn ScalarField, p: &[f64], x: &DVector<f64>) -> Result<f64> {
    let d2 = f.jet(p).hessian();
    let jx = k.j_at(p)? * x;
    Ok((x.transpose() * &d2 * x)[(0, 0)] + (jx.transpose() * &d2 * &jx)[(0, 0)])
}

/// Largest `|ω(v_a, v_b)|` over pairs of the given vectors.
pub fn omega_residual(k: &KahlerStructure, p: &[f64], vectors: &[DVector<f64>]) -> Result<f64> {
    let w = k.omega_at(p)?;
    let mut worst = 0.0f64;
    for a in 0..vectors.len() {
        for b in a + 1..vectors.len() {
            worst = worst.max(w.evaluate(&[vectors[a].clone(), vectors[b].clone()]).abs());
        }
    }
    Ok(worst)
}

/// Minimum of the Levi form over unit vectors, i.e. over complex lines
/// `span{X, JX}`. Low-discrepancy sampling followed by projected-gradient
/// refinement with step halving.
pub fn kahler_psh_defect(
    k: &KahlerStructure,
    f: &dyn ScalarField,
    p: &[f64],
    opts: &SearchOptions,
) -> Result<PshDefect> {
    if opts.samples < 64 {
        return Err(Error::Precondition(format!(
            "need at least 64 samples, got {}",
            opts.samples
        )));
    }
    let h = hessian(&k.metric, f, p)?;
    levi_minimum(k, &h, p, opts)
}

/// Minimum of `H(X,X) + H(JX,JX)` over unit `X` for a given symmetric `H`.
pub fn levi_minimum(k: &KahlerStructure, h: &DMatrix<f64>, p: &[f64], opts: &SearchOptions) -> Result<PshDefect> {
    if opts.samples < 64 {
        return Err(Error::Precondition(format!(
            "need at least 64 samples, got {}",
            opts.samples
        )));
    }
    let n = k.dim();
    let g = k.metric.at(p)?;
    let j = k.j_at(p)?;
    let a = h + j.transpose() * h * &j;
    // work in an orthonormal frame E so that unit vectors are Euclidean-unit
    let e = DMatrix::from_columns(&linalg::coordinate_frame(&g));
    let q = e.transpose() * &a * &e;
    let levi = |c: &DVector<f64>| (c.transpose() * &q * c)[(0, 0)];

    let seq = Kronecker::new(n + n % 2, opts.seed);
    let starts: Vec<DVector<f64>> = (0..opts.samples)
        .map(|s| {
            let v = DVector::from_column_slice(&seq.gaussian(s)[..n]);
            let nv = v.norm();
            if nv > 1e-12 {
                v / nv
            } else {
                linalg::unit(n, 0)
            }
        })
        .collect();
    let values: Vec<f64> = starts.iter().map(levi).collect();
    let sampled = values.iter().copied().fold(f64::INFINITY, f64::min);

    let step0 = 0.5 / linalg::max_abs(&q).max(1e-12);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for idx in best_indices(&values, opts.candidates) {
        let mut c = starts[idx].clone();
        let mut val = values[idx];
        let mut step = step0;
        for _ in 0..opts.refine_iters {
            let grad = &q * &c * 2.0;
            let tangent = &grad - &c * c.dot(&grad);
            if tangent.norm() < 1e-15 {
                break;
            }
            loop {
                let trial = &c - &tangent * step;
                let trial = &trial / trial.norm();
                let tv = levi(&trial);
                if tv < val {
                    c = trial;
                    val = tv;
                    break;
                }
                step *= 0.5;
                if step < 1e-16 {
                    break;
                }
            }
            if step < 1e-16 {
                break;
            }
        }
        if best.as_ref().is_none_or(|(bv, _)| val < *bv) {
            best = Some((val, c));
        }
    }
    let (defect, c) = best.expect("at least one candidate");
    let x = &e * c;
    let jx = &j * &x;
    let witness = Plane::new(p.to_vec(), vec![x, jx], &g)?;
    Ok(PshDefect {
        defect,
        witness,
        sampled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::expr_field;

    fn opts() -> SearchOptions {
        SearchOptions {
            samples: 256,
            ..SearchOptions::default()
        }
    }

    #[test]
    fn levi_form_examples_on_c() {
        let k = KahlerStructure::flat(1);
        let x = DVector::from_vec(vec![0.6, 0.8]);
        let p = [0.3, -0.2];
        let lf = |e: &str| levi_form(&k, &*expr_field(e, 2).unwrap(), &p, &x).unwrap();
        assert!((lf("x^2 + y^2") - 4.0).abs() < 1e-12);
        assert!((lf("2*x^2 - y^2") - 2.0).abs() < 1e-12);
        assert!(lf("x^2 - y^2").abs() < 1e-12);
    }

    #[test]
    fn defect_of_partial_square_on_c2() {
        let k = KahlerStructure::flat(2);
        let f = expr_field("x1^2", 4).unwrap();
        let d = kahler_psh_defect(&k, &*f, &[0.1, 0.2, 0.3, 0.4], &opts()).unwrap();
        assert!(d.defect.abs() < 1e-10);
        // the witness is the z2-line span{∂x2, ∂y2}
        let target = Plane::coordinate(vec![0.0; 4], 4, &[1, 3]);
        assert!(super::super::plane_angle(&d.witness, &target) < 1e-4);
        let f = expr_field("x1^2 + x2^2 + x3^2 + x4^2", 4).unwrap();
        assert!((kahler_psh_defect(&k, &*f, &[0.0; 4], &opts()).unwrap().defect - 4.0).abs() < 1e-12);
    }

    #[test]
    fn surface_rotation_squares_to_minus_one() {
        let g = MetricField::from_exprs(&["2 + x^2", "0.3", "0.3", "1 + y^2"], Domain::unbounded(2)).unwrap();
        let k = KahlerStructure::surface(g).unwrap();
        let p = [0.4, -0.7];
        let j = k.j_at(&p).unwrap();
        assert!(linalg::max_abs(&(&j * &j + DMatrix::identity(2, 2))) < 1e-14);
        assert!(k.compatibility_residual(&p).unwrap() < 1e-14);
        // ω is the Riemannian area form, closed in two dimensions
        let w = k.omega_at(&p).unwrap();
        let area = k.metric.at(&p).unwrap().determinant().sqrt();
        assert!((w.coefficient(&[0, 1]) - area).abs() < 1e-14);
    }

    #[test]
    fn too_few_samples_is_a_precondition_error() {
        let k = KahlerStructure::flat(1);
        let f = expr_field("x", 2).unwrap();
        let o = SearchOptions { samples: 10, ..opts() };
        assert!(matches!(
            kahler_psh_defect(&k, &*f, &[0.0, 0.0], &o),
            Err(Error::Precondition(_))
        ));
    }
}
