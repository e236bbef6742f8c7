//! Chart-based Riemannian geometry.
//!
//! A manifold is one coordinate chart: a box [`Domain`] plus a [`MetricField`]
//! whose entries are scalar fields with order-2 jets. Christoffel symbols,
//! Hessians and Laplacians only need first metric derivatives; curvature uses
//! the second derivatives carried by the jets.

mod curvature;
mod geodesic;
mod submanifold;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::{self, Field, ScalarField};
use crate::jet::Jet;
use crate::linalg;

pub use curvature::{curvature, curvature_with, CurvatureMode, CurvaturePack, DEFAULT_FD_STEP};
pub use geodesic::{geodesic, Geodesic, MIN_GEODESIC_STEPS};
pub use submanifold::{restricted_laplacian, submanifold_geometry, ImmersedSubmanifold, SubmanifoldGeometry};

/// Coordinate box of a chart. Periodic axes have no boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub periodic: Vec<bool>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        let n = lower.len();
        assert_eq!(n, upper.len(), "domain bounds must have equal length");
        Domain {
            lower,
            upper,
            periodic: vec![false; n],
        }
    }

    pub fn unbounded(n: usize) -> Self {
        Domain::new(vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n])
    }

    pub fn with_periodic(mut self, axis: usize) -> Self {
        self.periodic[axis] = true;
        self
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .enumerate()
                .all(|(i, &x)| x.is_finite() && (self.periodic[i] || (x >= self.lower[i] && x <= self.upper[i])))
    }

    /// Distance to the nearest non-periodic face of the box.
    pub fn boundary_distance(&self, p: &[f64]) -> f64 {
        let mut d = f64::INFINITY;
        for (i, &x) in p.iter().enumerate() {
            if !self.periodic[i] {
                d = d.min(x - self.lower[i]).min(self.upper[i] - x);
            }
        }
        d
    }

    pub fn period(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn check(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: p.len(),
            });
        }
        if !self.contains(p) {
            return Err(Error::OutOfDomain { point: p.to_vec() });
        }
        Ok(())
    }
}

/// Symmetric positive-definite matrix of scalar fields on a chart.
#[derive(Debug, Clone)]
pub struct MetricField {
    n: usize,
    entries: Vec<Field>,
    domain: Domain,
    flat: bool,
}

/// Metric value and derivatives at one point. `dg[m]` is `∂_m g`, and when
/// present `ddg[m * n + l]` is `∂_m ∂_l g`.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub point: Vec<f64>,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub dg: Vec<DMatrix<f64>>,
    pub ddg: Vec<DMatrix<f64>>,
}

impl MetricField {
    /// Builds a metric from row-major entries; symmetry is checked at a
    /// representative point of the domain.
    pub fn new(entries: Vec<Field>, domain: Domain) -> Result<Self> {
        let n = domain.dim();
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        if let Some(bad) = entries.iter().find(|f| f.arity() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.arity(),
            });
        }
        let probe = representative_point(&domain);
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (entries[i * n + j].value(&probe), entries[j * n + i].value(&probe));
                if (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
                    return Err(Error::Config(format!(
                        "metric entries ({i},{j}) and ({j},{i}) differ at {probe:?}"
                    )));
                }
            }
        }
        Ok(MetricField {
            n,
            entries,
            domain,
            flat: false,
        })
    }

    /// Row-major entry expressions.
    pub fn from_exprs(entries: &[&str], domain: Domain) -> Result<Self> {
        let n = domain.dim();
        let fields = entries
            .iter()
            .map(|e| field::expr_field(e, n))
            .collect::<Result<Vec<_>>>()?;
        MetricField::new(fields, domain)
    }

    pub fn diagonal(diag: &[&str], domain: Domain) -> Result<Self> {
        let n = domain.dim();
        if diag.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: diag.len(),
            });
        }
        let mut fields = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                fields.push(if i == j {
                    field::expr_field(diag[i], n)?
                } else {
                    field::constant(0.0, n)
                });
            }
        }
        MetricField::new(fields, domain)
    }

    /// Identity metric on the given chart.
    pub fn euclidean(domain: Domain) -> Self {
        let n = domain.dim();
        let entries = (0..n * n)
            .map(|k| field::constant(if k / n == k % n { 1.0 } else { 0.0 }, n))
            .collect();
        MetricField {
            n,
            entries,
            domain,
            flat: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn entry(&self, i: usize, j: usize) -> &Field {
        &self.entries[i * self.n + j]
    }

    /// True only for metrics built with [`MetricField::euclidean`].
    pub fn is_euclidean(&self) -> bool {
        self.flat
    }

    pub fn at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.domain.check(p)?;
        let n = self.n;
        Ok(DMatrix::from_fn(n, n, |i, j| self.entries[i * n + j].value(p)))
    }

    /// Metric and first derivatives.
    pub fn jet1(&self, p: &[f64]) -> Result<MetricJet> {
        self.domain.check(p)?;
        let n = self.n;
        let mut g = DMatrix::zeros(n, n);
        let mut dg = vec![DMatrix::zeros(n, n); n];
        if !self.flat {
            for i in 0..n {
                for j in i..n {
                    let d = self.entries[i * n + j].dual(p);
                    g[(i, j)] = d.value;
                    g[(j, i)] = d.value;
                    for m in 0..n {
                        dg[m][(i, j)] = d.grad[m];
                        dg[m][(j, i)] = d.grad[m];
                    }
                }
            }
        } else {
            g = DMatrix::identity(n, n);
        }
        let g_inv = linalg::invert_spd(&g, p)?;
        Ok(MetricJet {
            point: p.to_vec(),
            g,
            g_inv,
            dg,
            ddg: Vec::new(),
        })
    }

    /// Metric with first and second derivatives.
    pub fn jet2(&self, p: &[f64]) -> Result<MetricJet> {
        if self.flat {
            let mut mj = self.jet1(p)?;
            mj.ddg = vec![DMatrix::zeros(self.n, self.n); self.n * self.n];
            return Ok(mj);
        }
        self.domain.check(p)?;
        let n = self.n;
        let mut g = DMatrix::zeros(n, n);
        let mut dg = vec![DMatrix::zeros(n, n); n];
        let mut ddg = vec![DMatrix::zeros(n, n); n * n];
        for i in 0..n {
            for j in i..n {
                let jet: Jet = self.entries[i * n + j].jet(p);
                g[(i, j)] = jet.value;
                g[(j, i)] = jet.value;
                for m in 0..n {
                    dg[m][(i, j)] = jet.grad[m];
                    dg[m][(j, i)] = jet.grad[m];
                    for l in 0..n {
                        ddg[m * n + l][(i, j)] = jet.h(m, l);
                        ddg[m * n + l][(j, i)] = jet.h(m, l);
                    }
                }
            }
        }
        let g_inv = linalg::invert_spd(&g, p)?;
        Ok(MetricJet {
            point: p.to_vec(),
            g,
            g_inv,
            dg,
            ddg,
        })
    }

    pub fn inner(&self, p: &[f64], u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        Ok(linalg::inner(&self.at(p)?, u, v))
    }
}

fn representative_point(domain: &Domain) -> Vec<f64> {
    (0..domain.dim())
        .map(|i| {
            let (a, b) = (domain.lower[i], domain.upper[i]);
            match (a.is_finite(), b.is_finite()) {
                (true, true) => a + 0.37 * (b - a),
                (true, false) => a + 0.37 + a.abs() * 0.1,
                (false, true) => b - 0.37 - b.abs() * 0.1,
                (false, false) => 0.37,
            }
        })
        .collect()
}

/// Christoffel symbols `Γ^k_ij`, stored as `data[(k * n + i) * n + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(n: usize) -> Self {
        Christoffel {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    /// The vector `Γ(u, v)^k = Γ^k_ij u^i v^j`.
    pub fn contract(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(n, |k, _| {
            let mut s = 0.0;
            for i in 0..n {
                if u[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    s += self.get(k, i, j) * u[i] * v[j];
                }
            }
            s
        })
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        let n = self.n;
        (0..n)
            .map(|k| (0..n).map(|i| (0..n).map(|j| self.get(k, i, j)).collect()).collect())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

pub fn christoffel_from_jet(mj: &MetricJet) -> Christoffel {
    let n = mj.g.nrows();
    let mut out = Christoffel::zeros(n);
    // lowered symbols Γ_lij = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
    let mut lower = vec![0.0; n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in i..n {
                let v = 0.5 * (mj.dg[i][(j, l)] + mj.dg[j][(i, l)] - mj.dg[l][(i, j)]);
                lower[(l * n + i) * n + j] = v;
                lower[(l * n + j) * n + i] = v;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += mj.g_inv[(k, l)] * lower[(l * n + i) * n + j];
                }
                out.data[(k * n + i) * n + j] = s;
                out.data[(k * n + j) * n + i] = s;
            }
        }
    }
    out
}

pub fn christoffel(g: &MetricField, p: &[f64]) -> Result<Christoffel> {
    if g.is_euclidean() {
        g.domain.check(p)?;
        return Ok(Christoffel::zeros(g.n));
    }
    Ok(christoffel_from_jet(&g.jet1(p)?))
}

/// Covariant Hessian `∂_ij f − Γ^k_ij ∂_k f` from a precomputed jet.
pub fn hessian_from_jet(gamma: &Christoffel, f: &Jet) -> DMatrix<f64> {
    let n = gamma.n;
    DMatrix::from_fn(n, n, |i, j| {
        let mut s = f.h(i, j);
        for k in 0..n {
            s -= gamma.get(k, i, j) * f.grad[k];
        }
        s
    })
}

pub fn hessian(g: &MetricField, f: &dyn ScalarField, p: &[f64]) -> Result<DMatrix<f64>> {
    check_arity(g, f)?;
    let gamma = christoffel(g, p)?;
    Ok(hessian_from_jet(&gamma, &f.jet(p)))
}

pub fn laplacian(g: &MetricField, f: &dyn ScalarField, p: &[f64]) -> Result<f64> {
    check_arity(g, f)?;
    let mj = g.jet1(p)?;
    let h = hessian_from_jet(&christoffel_from_jet(&mj), &f.jet(p));
    Ok(mj.g_inv.component_mul(&h).sum())
}

/// Riemannian gradient `g^{ij} ∂_j f`.
pub fn gradient(g: &MetricField, f: &dyn ScalarField, p: &[f64]) -> Result<DVector<f64>> {
    check_arity(g, f)?;
    let gi = linalg::invert_spd(&g.at(p)?, p)?;
    Ok(gi * f.jet(p).gradient())
}

fn check_arity(g: &MetricField, f: &dyn ScalarField) -> Result<()> {
    if f.arity() != g.n {
        return Err(Error::DimensionMismatch {
            expected: g.n,
            got: f.arity(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn polar() -> MetricField {
        MetricField::diagonal(&["1", "r^2"], Domain::new(vec![1e-3, -10.0], vec![1e3, 10.0])).unwrap()
    }

    fn sphere() -> MetricField {
        MetricField::diagonal(
            &["1", "sin(x)^2"],
            Domain::new(vec![1e-3, -10.0], vec![PI - 1e-3, 10.0]),
        )
        .unwrap()
    }

    #[test]
    fn flat_christoffel_vanishes() {
        let g = MetricField::euclidean(Domain::unbounded(3));
        assert_eq!(christoffel(&g, &[0.2, 3.0, -1.0]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn polar_christoffel_symbols() {
        let gm = christoffel(&polar(), &[2.0, 0.3]).unwrap();
        assert!((gm.get(0, 1, 1) + 2.0).abs() < 1e-14);
        assert!((gm.get(1, 0, 1) - 0.5).abs() < 1e-14);
        assert!((gm.get(1, 1, 0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn sphere_christoffel_at_quarter_pi() {
        let gm = christoffel(&sphere(), &[PI / 4.0, 0.0]).unwrap();
        assert!((gm.get(0, 1, 1) + 0.5).abs() < 1e-14);
    }

    #[test]
    fn hessians_of_model_functions() {
        let flat = MetricField::euclidean(Domain::unbounded(2));
        let h = hessian(&flat, &*field::expr_field("2*x^2 - y^2", 2).unwrap(), &[0.3, 0.4]).unwrap();
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, -2.0]));
        let logr = field::expr_field("log(r)", 2).unwrap();
        let h = hessian(&polar(), &*logr, &[1.0, 0.7]).unwrap();
        assert!((h[(0, 0)] + 1.0).abs() < 1e-14);
        assert!((h[(1, 1)] - 1.0).abs() < 1e-14);
        assert!(laplacian(&polar(), &*logr, &[3.7, 0.1]).unwrap().abs() < 1e-14);
    }

    #[test]
    fn laplacian_of_saddle_in_three_dimensions() {
        let flat = MetricField::euclidean(Domain::unbounded(3));
        let f = field::expr_field("x^2 + y^2 - z^2", 3).unwrap();
        assert_eq!(laplacian(&flat, &*f, &[1.0, 2.0, 3.0]).unwrap(), 2.0);
    }

    #[test]
    fn degenerate_metric_is_reported() {
        let g = MetricField::diagonal(&["x^2", "1"], Domain::unbounded(2)).unwrap();
        assert!(matches!(
            christoffel(&g, &[0.0, 1.0]),
            Err(Error::DegenerateMetric { .. })
        ));
    }

    #[test]
    fn out_of_domain_point_is_rejected() {
        assert!(matches!(
            christoffel(&polar(), &[-1.0, 0.0]),
            Err(Error::OutOfDomain { .. })
        ));
    }
}
