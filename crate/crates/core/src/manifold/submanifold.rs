use nalgebra::{DMatrix, DVector};

use super::{christoffel_from_jet, hessian_from_jet, MetricField};
use crate::error::{Error, Result};
use crate::field::{Field, ScalarField};
use crate::jet::Jet;
use crate::linalg;

/// A parametrized submanifold `u ↦ ι(u)` of a chart, one field per ambient
/// coordinate.
#[derive(Debug, Clone)]
pub struct ImmersedSubmanifold {
    pub components: Vec<Field>,
    pub metric: MetricField,
}

impl ImmersedSubmanifold {
    pub fn new(components: Vec<Field>, metric: MetricField) -> Result<Self> {
        if components.len() != metric.dim() {
            return Err(Error::DimensionMismatch {
                expected: metric.dim(),
                got: components.len(),
            });
        }
        let k = components.first().map_or(0, |c| c.arity());
        if let Some(bad) = components.iter().find(|c| c.arity() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: bad.arity(),
            });
        }
        Ok(ImmersedSubmanifold { components, metric })
    }

    pub fn dim(&self) -> usize {
        self.components.first().map_or(0, |c| c.arity())
    }

    pub fn ambient_dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn point(&self, u: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.value(u)).collect()
    }

    pub fn jets(&self, u: &[f64]) -> Vec<Jet> {
        self.components.iter().map(|c| c.jet(u)).collect()
    }
}

/// Extrinsic geometry at one parameter point.
#[derive(Debug, Clone)]
pub struct SubmanifoldGeometry {
    pub point: DVector<f64>,
    /// Ambient metric at the point.
    pub metric: DMatrix<f64>,
    /// Columns are the coordinate tangent vectors `∂_a ι`.
    pub tangent: DMatrix<f64>,
    pub induced_metric: DMatrix<f64>,
    pub induced_inverse: DMatrix<f64>,
    /// Normal-valued `II(∂_a, ∂_b)` at index `a * k + b`.
    pub second_fundamental_form: Vec<DVector<f64>>,
    pub mean_curvature: DVector<f64>,
}

impl SubmanifoldGeometry {
    pub fn k(&self) -> usize {
        self.tangent.ncols()
    }

    pub fn ii(&self, a: usize, b: usize) -> &DVector<f64> {
        &self.second_fundamental_form[a * self.k() + b]
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        linalg::inner(&self.metric, u, v)
    }

    /// Component of `v` tangent to the submanifold.
    pub fn tangential(&self, v: &DVector<f64>) -> DVector<f64> {
        let coeff = &self.induced_inverse * (self.tangent.transpose() * &self.metric * v);
        &self.tangent * coeff
    }

    pub fn normal(&self, v: &DVector<f64>) -> DVector<f64> {
        v - self.tangential(v)
    }

    /// Orthonormal tangent frame from Gram–Schmidt on `∂_1 ι, …, ∂_k ι`.
    pub fn tangent_frame(&self) -> Vec<DVector<f64>> {
        let cols: Vec<DVector<f64>> = (0..self.k()).map(|a| self.tangent.column(a).into_owned()).collect();
        linalg::gram_schmidt(&self.metric, &cols).expect("rank checked at construction")
    }

    pub fn mean_curvature_norm(&self) -> f64 {
        linalg::norm(&self.metric, &self.mean_curvature)
    }

    /// `|II|` measured with the induced metric.
    pub fn second_fundamental_norm(&self) -> f64 {
        let k = self.k();
        let hi = &self.induced_inverse;
        let mut s = 0.0;
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    for d in 0..k {
                        s += hi[(a, c)] * hi[(b, d)] * self.inner(self.ii(a, b), self.ii(c, d));
                    }
                }
            }
        }
        s.max(0.0).sqrt()
    }

    pub fn is_minimal(&self, tol: f64) -> bool {
        self.mean_curvature_norm() < tol
    }

    pub fn is_totally_geodesic(&self, tol: f64) -> bool {
        self.second_fundamental_norm() < tol
    }
}

pub fn submanifold_geometry(s: &ImmersedSubmanifold, u: &[f64]) -> Result<SubmanifoldGeometry> {
    let (geo, _, _) = geometry_with_jets(s, u)?;
    Ok(geo)
}

fn geometry_with_jets(s: &ImmersedSubmanifold, u: &[f64]) -> Result<(SubmanifoldGeometry, Vec<Jet>, super::MetricJet)> {
    let (n, k) = (s.ambient_dim(), s.dim());
    if u.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: u.len(),
        });
    }
    let jets = s.jets(u);
    let point: Vec<f64> = jets.iter().map(|j| j.value).collect();
    let mj = s.metric.jet1(&point)?;
    let gamma = christoffel_from_jet(&mj);
    let tangent = DMatrix::from_fn(n, k, |m, a| jets[m].grad[a]);
    let h = tangent.transpose() * &mj.g * &tangent;
    let rank_err = || Error::RankDeficient {
        expected: k,
        point: u.to_vec(),
    };
    let ev = linalg::sym_eigenvalues(&h);
    if ev.is_empty() || !(ev[0] > 1e-12 * ev[k - 1].abs().max(1.0)) {
        return Err(rank_err());
    }
    let h_inv = linalg::invert_spd(&h, u).map_err(|_| rank_err())?;
    let mut geo = SubmanifoldGeometry {
        point: DVector::from_vec(point),
        metric: mj.g.clone(),
        tangent,
        induced_metric: h,
        induced_inverse: h_inv,
        second_fundamental_form: Vec::with_capacity(k * k),
        mean_curvature: DVector::zeros(n),
    };
    for a in 0..k {
        for b in 0..k {
            let xa = geo.tangent.column(a).into_owned();
            let xb = geo.tangent.column(b).into_owned();
            let xab = DVector::from_fn(n, |m, _| jets[m].h(a, b));
            let accel = xab + gamma.contract(&xa, &xb);
            geo.second_fundamental_form.push(geo.normal(&accel));
        }
    }
    let mut hvec = DVector::zeros(n);
    for a in 0..k {
        for b in 0..k {
            hvec += geo.ii(a, b) * geo.induced_inverse[(a, b)];
        }
    }
    geo.mean_curvature = hvec;
    Ok((geo, jets, mj))
}

/// Returns `(Δ_Σ (f∘ι), tr_TΣ Hess_M f)` at `u`. The intrinsic value is computed
/// from the induced metric and its own Christoffel symbols; the two differ by
/// `df(H)`.
pub fn restricted_laplacian(s: &ImmersedSubmanifold, f: &dyn ScalarField, u: &[f64]) -> Result<(f64, f64)> {
    let (n, k) = (s.ambient_dim(), s.dim());
    if f.arity() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: f.arity(),
        });
    }
    let (geo, jets, mj) = geometry_with_jets(s, u)?;
    let fj = f.jet(geo.point.as_slice());
    let hess_m = hessian_from_jet(&christoffel_from_jet(&mj), &fj);
    let x = &geo.tangent;
    let ambient = geo.induced_inverse.component_mul(&(x.transpose() * &hess_m * x)).sum();

    // ∂_c h_ab = ⟨X_ac, X_b⟩ + ⟨X_a, X_bc⟩ + (∂_c g)(X_a, X_b)
    let second = |a: usize, b: usize| DVector::from_fn(n, |m, _| jets[m].h(a, b));
    let mut dh = vec![DMatrix::zeros(k, k); k];
    for c in 0..k {
        let mut dgc = DMatrix::zeros(n, n);
        for m in 0..n {
            dgc += &mj.dg[m] * x[(m, c)];
        }
        for a in 0..k {
            for b in 0..k {
                let xa = x.column(a).into_owned();
                let xb = x.column(b).into_owned();
                dh[c][(a, b)] = linalg::inner(&mj.g, &second(a, c), &xb)
                    + linalg::inner(&mj.g, &xa, &second(b, c))
                    + linalg::inner(&dgc, &xa, &xb);
            }
        }
    }
    let hi = &geo.induced_inverse;
    let df = fj.gradient();
    let dphi: Vec<f64> = (0..k).map(|a| df.dot(&x.column(a))).collect();
    let mut intrinsic = 0.0;
    for a in 0..k {
        for b in 0..k {
            let xa = x.column(a).into_owned();
            let xb = x.column(b).into_owned();
            let mut phi_ab = (xa.transpose() * fj.hessian() * &xb)[(0, 0)] + df.dot(&second(a, b));
            for c in 0..k {
                let mut gamma_c = 0.0;
                for d in 0..k {
                    gamma_c += 0.5 * hi[(c, d)] * (dh[a][(b, d)] + dh[b][(a, d)] - dh[d][(a, b)]);
                }
                phi_ab -= gamma_c * dphi[c];
            }
            intrinsic += hi[(a, b)] * phi_ab;
        }
    }
    Ok((intrinsic, ambient))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::expr_field;
    use crate::manifold::Domain;
    use std::f64::consts::PI;

    fn param(exprs: &[&str], k: usize) -> Vec<Field> {
        exprs.iter().map(|e| expr_field(e, k).unwrap()).collect()
    }

    #[test]
    fn circle_mean_curvature_points_inward() {
        let s = ImmersedSubmanifold::new(
            param(&["2*cos(x)", "2*sin(x)"], 1),
            MetricField::euclidean(Domain::unbounded(2)),
        )
        .unwrap();
        let geo = submanifold_geometry(&s, &[0.3]).unwrap();
        assert!((geo.mean_curvature_norm() - 0.5).abs() < 1e-14);
        assert!(geo.mean_curvature.dot(&geo.point) < 0.0);
        let t = geo.tangent.column(0).into_owned();
        assert!(geo.inner(&t, &geo.mean_curvature).abs() < 1e-14);
    }

    #[test]
    fn latitude_circle_on_sphere() {
        let g = MetricField::diagonal(
            &["1", "sin(x)^2"],
            Domain::new(vec![0.01, -10.0], vec![PI - 0.01, 10.0]),
        )
        .unwrap();
        for theta0 in [0.4, 1.1, PI / 2.0] {
            let s = ImmersedSubmanifold::new(param(&[&format!("{theta0:?}"), "x"], 1), g.clone()).unwrap();
            let geo = submanifold_geometry(&s, &[0.2]).unwrap();
            assert!((geo.mean_curvature_norm() - (1.0 / theta0.tan()).abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn line_is_totally_geodesic_and_saddle_restricts_negatively() {
        let s =
            ImmersedSubmanifold::new(param(&["0", "0", "x"], 1), MetricField::euclidean(Domain::unbounded(3))).unwrap();
        let geo = submanifold_geometry(&s, &[0.7]).unwrap();
        assert!(geo.is_totally_geodesic(1e-14));
        let f = expr_field("x^2 + y^2 - z^2", 3).unwrap();
        let (intrinsic, ambient) = restricted_laplacian(&s, &*f, &[0.7]).unwrap();
        assert!((intrinsic + 2.0).abs() < 1e-14 && (ambient + 2.0).abs() < 1e-14);
    }

    #[test]
    fn circle_discrepancy_is_minus_df_of_h() {
        let s = ImmersedSubmanifold::new(
            param(&["3*cos(x)", "3*sin(x)"], 1),
            MetricField::euclidean(Domain::unbounded(2)),
        )
        .unwrap();
        let f = expr_field("x", 2).unwrap();
        let u = [0.9];
        let geo = submanifold_geometry(&s, &u).unwrap();
        let (intrinsic, ambient) = restricted_laplacian(&s, &*f, &u).unwrap();
        let df_h = geo.mean_curvature[0];
        assert!((ambient - intrinsic + df_h).abs() < 1e-12);
        // x restricted to the circle is 3cos(s/3): Δ = −cos(u)/3
        assert!((intrinsic + (0.9f64).cos() / 3.0).abs() < 1e-12);
    }

    #[test]
    fn constant_map_is_rank_deficient() {
        let s = ImmersedSubmanifold::new(param(&["1", "2"], 1), MetricField::euclidean(Domain::unbounded(2))).unwrap();
        assert!(matches!(
            submanifold_geometry(&s, &[0.0]),
            Err(Error::RankDeficient { .. })
        ));
    }
}
