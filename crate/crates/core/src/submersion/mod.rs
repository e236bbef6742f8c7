//! Riemannian submersions given in charts: splitting, horizontal lifts,
//! Hessian transfer, fibre geometry and fibre-wise pushdowns.

mod convexity;
mod pushdown;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::{Composed, Field, Frozen};
use crate::linalg;
use crate::manifold::{
    christoffel, geodesic, hessian, submanifold_geometry, Domain, ImmersedSubmanifold, MetricField, SubmanifoldGeometry,
};
use crate::sampling::Kronecker;

pub use convexity::{base_convexity_check, fd_hessian, ConvexityMode, ConvexityReport, MIN_CONVEXITY_GRID};
pub use pushdown::{
    fibre_grid, fibre_integral, fibre_quadrature, fibre_supremum, haar_pushdown, invariance_oscillation, Pushdown,
    PushdownKind, MIN_FIBRE_GRID,
};

/// `π: M → B` with a fibre parametrization `(b, y) ↦ ι_b(y)`.
#[derive(Debug, Clone)]
pub struct RiemannianSubmersion {
    pub total: MetricField,
    pub base: MetricField,
    /// `m` fields of arity `n`.
    pub projection: Vec<Field>,
    /// `n` fields of arity `m + (n − m)`; the base point comes first.
    pub fibre_param: Vec<Field>,
    pub fibre_domain: Domain,
    /// Fibres are torus orbits and `y` are angle coordinates.
    pub orbit_chart: bool,
}

impl RiemannianSubmersion {
    pub fn new(
        total: MetricField,
        base: MetricField,
        projection: Vec<Field>,
        fibre_param: Vec<Field>,
        fibre_domain: Domain,
    ) -> Result<Self> {
        let (n, m) = (total.dim(), base.dim());
        if m >= n {
            return Err(Error::Config(format!(
                "base dimension {m} must be below total dimension {n}"
            )));
        }
        if projection.len() != m || projection.iter().any(|f| f.arity() != n) {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: projection.len(),
            });
        }
        if fibre_param.len() != n || fibre_param.iter().any(|f| f.arity() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: fibre_param.len(),
            });
        }
        if fibre_domain.dim() != n - m {
            return Err(Error::DimensionMismatch {
                expected: n - m,
                got: fibre_domain.dim(),
            });
        }
        Ok(RiemannianSubmersion {
            total,
            base,
            projection,
            fibre_param,
            fibre_domain,
            orbit_chart: false,
        })
    }

    pub fn with_orbit_chart(mut self) -> Self {
        self.orbit_chart = true;
        self
    }

    pub fn total_dim(&self) -> usize {
        self.total.dim()
    }

    pub fn base_dim(&self) -> usize {
        self.base.dim()
    }

    pub fn fibre_dim(&self) -> usize {
        self.total.dim() - self.base.dim()
    }

    pub fn project(&self, p: &[f64]) -> Vec<f64> {
        self.projection.iter().map(|f| f.value(p)).collect()
    }

    /// `dπ` at `p` as an `m × n` matrix.
    pub fn differential(&self, p: &[f64]) -> DMatrix<f64> {
        let n = self.total_dim();
        let rows: Vec<Vec<f64>> = self.projection.iter().map(|f| f.dual(p).grad).collect();
        DMatrix::from_fn(self.base_dim(), n, |a, i| rows[a][i])
    }

    pub fn fibre_point(&self, b: &[f64], y: &[f64]) -> Vec<f64> {
        let mut arg = b.to_vec();
        arg.extend_from_slice(y);
        self.fibre_param.iter().map(|f| f.value(&arg)).collect()
    }

    /// The fibre over `b` as a parametrized submanifold of `M`.
    pub fn fibre(&self, b: &[f64]) -> ImmersedSubmanifold {
        let components = self
            .fibre_param
            .iter()
            .map(|f| {
                Arc::new(Frozen {
                    inner: f.clone(),
                    prefix: b.to_vec(),
                }) as Field
            })
            .collect();
        ImmersedSubmanifold {
            components,
            metric: self.total.clone(),
        }
    }

    /// `π*F = F ∘ π`.
    pub fn pullback(&self, f: &Field) -> Result<Field> {
        Ok(Arc::new(Composed::new(f.clone(), self.projection.clone())?))
    }

    /// Horizontal projector `G⁻¹Dᵀ(DG⁻¹Dᵀ)⁻¹D` at `p` (as a map on components).
    fn horizontal_map(&self, p: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let g = self.total.at(p)?;
        let gi = linalg::invert_spd(&g, p)?;
        let d = self.differential(p);
        let k = &d * &gi * d.transpose();
        let ki = k.clone().try_inverse().filter(|m| m.iter().all(|v| v.is_finite()));
        let ki = match ki {
            Some(ki) if linalg::sym_eigenvalues(&k)[0] > 1e-14 * linalg::max_abs(&k).max(1.0) => ki,
            _ => {
                return Err(Error::RankDeficient {
                    expected: self.base_dim(),
                    point: p.to_vec(),
                })
            }
        };
        Ok((&gi * d.transpose() * ki, d))
    }

    /// `(vertical, horizontal)` parts of `v ∈ T_pM`.
    pub fn split(&self, p: &[f64], v: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        let (lift, d) = self.horizontal_map(p)?;
        let h = lift * (d * v);
        Ok((v - &h, h))
    }

    /// Unique horizontal `w` at `p` with `dπ(w) = x`.
    pub fn horizontal_lift(&self, b: &[f64], x: &DVector<f64>, p: &[f64]) -> Result<DVector<f64>> {
        let pb = self.project(p);
        let off = pb.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        if off > 1e-8 {
            return Err(Error::Precondition(format!(
                "point {p:?} lies over {pb:?}, not over {b:?}"
            )));
        }
        let (lift, _) = self.horizontal_map(p)?;
        Ok(lift * x)
    }

    /// `| |w|_M − |x|_B |` for the lift `w` of `x` at `p`.
    pub fn isometry_residual(&self, b: &[f64], x: &DVector<f64>, p: &[f64]) -> Result<f64> {
        let w = self.horizontal_lift(b, x, p)?;
        let nm = linalg::norm(&self.total.at(p)?, &w);
        let nb = linalg::norm(&self.base.at(b)?, x);
        Ok((nm - nb).abs())
    }

    /// `max |π(ι_b(y)) − b|` over the given fibre parameters.
    pub fn section_residual(&self, b: &[f64], ys: &[Vec<f64>]) -> f64 {
        ys.iter()
            .map(|y| {
                let q = self.project(&self.fibre_point(b, y));
                q.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

/// Deterministic sample of fibre parameters: a midpoint grid for
/// one-dimensional fibres, a Kronecker sequence otherwise.
pub fn fibre_samples(domain: &Domain, count: usize) -> Vec<Vec<f64>> {
    let d = domain.dim();
    let width = |a: usize| {
        let w = domain.upper[a] - domain.lower[a];
        if w.is_finite() {
            w
        } else {
            2.0
        }
    };
    let low = |a: usize| {
        if domain.lower[a].is_finite() {
            domain.lower[a]
        } else {
            -1.0
        }
    };
    if d == 1 {
        return (0..count)
            .map(|k| vec![low(0) + (k as f64 + 0.5) / count as f64 * width(0)])
            .collect();
    }
    let seq = Kronecker::new(d, 0);
    (0..count)
        .map(|k| {
            seq.point(k)
                .iter()
                .enumerate()
                .map(|(a, u)| low(a) + u * width(a))
                .collect()
        })
        .collect()
}

/// `max_y |Hess_M(π*F)(X̃, X̃) − Hess_B(F)(X, X)|` over fibre samples.
pub fn hessian_transfer_residual(
    rs: &RiemannianSubmersion,
    f: &Field,
    b: &[f64],
    x: &DVector<f64>,
    fibre_samples_count: usize,
) -> Result<f64> {
    let hb = hessian(&rs.base, &**f, b)?;
    let want = (x.transpose() * &hb * x)[(0, 0)];
    let pulled = rs.pullback(f)?;
    let mut worst = 0.0f64;
    for y in fibre_samples(&rs.fibre_domain, fibre_samples_count) {
        let p = rs.fibre_point(b, &y);
        let w = rs.horizontal_lift(b, x, &p)?;
        let hm = hessian(&rs.total, &*pulled, &p)?;
        worst = worst.max(((w.transpose() * &hm * &w)[(0, 0)] - want).abs());
    }
    Ok(worst)
}

/// Fibre geometry with minimality flags.
#[derive(Debug, Clone)]
pub struct FibreGeometry {
    pub geometry: SubmanifoldGeometry,
    pub is_minimal: bool,
    pub is_totally_geodesic: bool,
}

pub const FIBRE_FLAG_TOL: f64 = 1e-7;

pub fn fibre_geometry(rs: &RiemannianSubmersion, b: &[f64], y: &[f64]) -> Result<FibreGeometry> {
    fibre_geometry_tol(rs, b, y, FIBRE_FLAG_TOL)
}

pub fn fibre_geometry_tol(rs: &RiemannianSubmersion, b: &[f64], y: &[f64], tol: f64) -> Result<FibreGeometry> {
    let geometry = submanifold_geometry(&rs.fibre(b), y)?;
    Ok(FibreGeometry {
        is_minimal: geometry.is_minimal(tol),
        is_totally_geodesic: geometry.is_totally_geodesic(tol),
        geometry,
    })
}

/// Largest `|⟨∇^M_X̃ Ỹ, W̃⟩ − ⟨∇^B_X Y, W⟩|` over base coordinate fields
/// `X, Y, W` at `p`. The derivative of the lifted field is a central
/// difference along `X̃` with step `h`.
pub fn oneill_residual(rs: &RiemannianSubmersion, p: &[f64], h: f64) -> Result<f64> {
    let m = rs.base_dim();
    let b = rs.project(p);
    let gm = rs.total.at(p)?;
    let gb = rs.base.at(&b)?;
    let gamma_m = christoffel(&rs.total, p)?;
    let gamma_b = christoffel(&rs.base, &b)?;
    let lift_at = |q: &[f64], a: usize| -> Result<DVector<f64>> {
        let bq = rs.project(q);
        rs.horizontal_lift(&bq, &linalg::unit(m, a), q)
    };
    let lifts: Vec<DVector<f64>> = (0..m).map(|a| lift_at(p, a)).collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for a in 0..m {
        let xa = &lifts[a];
        let qp: Vec<f64> = p.iter().zip(xa.iter()).map(|(u, v)| u + h * v).collect();
        let qm: Vec<f64> = p.iter().zip(xa.iter()).map(|(u, v)| u - h * v).collect();
        for c in 0..m {
            let deriv = (lift_at(&qp, c)? - lift_at(&qm, c)?) / (2.0 * h);
            let nabla = deriv + gamma_m.contract(xa, &lifts[c]);
            let base_nabla = gamma_b.contract(&linalg::unit(m, a), &linalg::unit(m, c));
            for w in 0..m {
                let lhs = linalg::inner(&gm, &nabla, &lifts[w]);
                let rhs = linalg::inner(&gb, &base_nabla, &linalg::unit(m, w));
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    Ok(worst)
}

/// Outcome of integrating an initially horizontal geodesic.
#[derive(Debug, Clone)]
pub struct HorizontalGeodesicReport {
    /// Largest `|vertical part of γ'| / |γ'|` along the path.
    pub max_vertical: f64,
    /// Largest coordinate distance between `π∘γ` and the base geodesic.
    pub max_projection_error: f64,
}

pub fn horizontal_geodesic_check(
    rs: &RiemannianSubmersion,
    p: &[f64],
    x: &DVector<f64>,
    time: f64,
    steps: usize,
) -> Result<HorizontalGeodesicReport> {
    let b = rs.project(p);
    let w = rs.horizontal_lift(&b, x, p)?;
    let up = geodesic(&rs.total, p, w.as_slice(), time, steps)?;
    let down = geodesic(&rs.base, &b, x.as_slice(), time, steps)?;
    let mut max_vertical = 0.0f64;
    let mut max_projection_error = 0.0f64;
    for ((q, v), bq) in up.points.iter().zip(&up.velocities).zip(&down.points) {
        let (vert, _) = rs.split(q.as_slice(), v)?;
        let g = rs.total.at(q.as_slice())?;
        max_vertical = max_vertical.max(linalg::norm(&g, &vert) / linalg::norm(&g, v).max(1e-300));
        let proj = rs.project(q.as_slice());
        let err = proj
            .iter()
            .zip(bq.iter())
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max);
        max_projection_error = max_projection_error.max(err);
    }
    Ok(HorizontalGeodesicReport {
        max_vertical,
        max_projection_error,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::field::expr_field;
    use std::f64::consts::PI;

    pub fn polar() -> RiemannianSubmersion {
        let total = MetricField::diagonal(&["1", "r^2"], Domain::new(vec![1e-3, -1e3], vec![1e3, 1e3])).unwrap();
        let base = MetricField::euclidean(Domain::new(vec![1e-3], vec![1e3]));
        RiemannianSubmersion::new(
            total,
            base,
            vec![expr_field("r", 2).unwrap()],
            vec![expr_field("x1", 2).unwrap(), expr_field("x2", 2).unwrap()],
            Domain::new(vec![0.0], vec![2.0 * PI]).with_periodic(0),
        )
        .unwrap()
        .with_orbit_chart()
    }

    pub fn cylinder() -> RiemannianSubmersion {
        let total = MetricField::diagonal(
            &["1/(x^2 + y^2)", "1/(x^2 + y^2)"],
            Domain::new(vec![-1e3, -1e3], vec![1e3, 1e3]),
        )
        .unwrap();
        let base = MetricField::euclidean(Domain::new(vec![-6.0], vec![6.0]));
        RiemannianSubmersion::new(
            total,
            base,
            vec![expr_field("log(x^2 + y^2)/2", 2).unwrap()],
            vec![
                expr_field("exp(x1)*cos(x2)", 2).unwrap(),
                expr_field("exp(x1)*sin(x2)", 2).unwrap(),
            ],
            Domain::new(vec![0.0], vec![2.0 * PI]).with_periodic(0),
        )
        .unwrap()
        .with_orbit_chart()
    }

    pub fn flat_t7() -> RiemannianSubmersion {
        let dom = (0..7).fold(Domain::new(vec![0.0; 7], vec![2.0 * PI; 7]), |d, a| d.with_periodic(a));
        let base = (0..3).fold(Domain::new(vec![0.0; 3], vec![2.0 * PI; 3]), |d, a| d.with_periodic(a));
        let fib = (0..4).fold(Domain::new(vec![0.0; 4], vec![2.0 * PI; 4]), |d, a| d.with_periodic(a));
        let proj = (1..=3).map(|i| expr_field(&format!("x{i}"), 7).unwrap()).collect();
        let param = (1..=7).map(|i| expr_field(&format!("x{i}"), 7).unwrap()).collect();
        RiemannianSubmersion::new(
            MetricField::euclidean(dom),
            MetricField::euclidean(base),
            proj,
            param,
            fib,
        )
        .unwrap()
        .with_orbit_chart()
    }

    #[test]
    fn polar_split_and_lift() {
        let rs = polar();
        let p = [2.0, 0.4];
        let (v, h) = rs.split(&p, &DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert!(v.norm() < 1e-15 && (h[0] - 1.0).abs() < 1e-15);
        let (v, h) = rs.split(&p, &DVector::from_vec(vec![0.0, 1.0])).unwrap();
        assert!(h.norm() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cylinder_lift_of_dt_is_radial_field() {
        let rs = cylinder();
        let p = [1.2, -0.5];
        let b = rs.project(&p);
        let w = rs.horizontal_lift(&b, &DVector::from_vec(vec![1.0]), &p).unwrap();
        assert!((w[0] - 1.2).abs() < 1e-12 && (w[1] + 0.5).abs() < 1e-12);
        assert!(rs.isometry_residual(&b, &DVector::from_vec(vec![1.0]), &p).unwrap() < 1e-12);
    }

    #[test]
    fn lift_rejects_point_off_the_fibre() {
        let rs = polar();
        assert!(rs
            .horizontal_lift(&[1.0], &DVector::from_vec(vec![1.0]), &[2.0, 0.0])
            .is_err());
    }

    #[test]
    fn polar_hessian_transfer_of_log() {
        let rs = polar();
        let f = expr_field("log(x)", 1).unwrap();
        let r = hessian_transfer_residual(&rs, &f, &[1.7], &DVector::from_vec(vec![1.0]), 32).unwrap();
        assert!(r < 1e-12);
    }

    #[test]
    fn polar_fibres_are_not_minimal() {
        let fg = fibre_geometry(&polar(), &[4.0], &[0.3]).unwrap();
        assert!((fg.geometry.mean_curvature_norm() - 0.25).abs() < 1e-14);
        assert!(!fg.is_minimal);
        let fg = fibre_geometry(&cylinder(), &[0.7], &[0.3]).unwrap();
        assert!(fg.is_totally_geodesic);
    }

    #[test]
    fn oneill_identity_on_cylinder_and_polar() {
        assert!(oneill_residual(&cylinder(), &[0.8, 0.9], 1e-5).unwrap() < 1e-8);
        assert!(oneill_residual(&polar(), &[2.0, 0.3], 1e-5).unwrap() < 1e-8);
    }

    #[test]
    fn radial_geodesic_stays_horizontal() {
        let rs = polar();
        let rep = horizontal_geodesic_check(&rs, &[1.0, 0.5], &DVector::from_vec(vec![1.0]), 3.0, 256).unwrap();
        assert!(rep.max_vertical < 1e-12);
        assert!(rep.max_projection_error < 1e-12);
    }
}
