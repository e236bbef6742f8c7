//! First and second variation of fibre volume along horizontal geodesic
//! families of fibres, with a finite-difference volume oracle.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::calibration::{G2Structure, KahlerStructure, Plane};
use crate::error::{Error, Result};
use crate::field::constant;
use crate::forms::AlternatingForm;
use crate::linalg;
use crate::manifold::{christoffel, curvature, geodesic, MIN_GEODESIC_STEPS};
use crate::submersion::{fibre_grid, fibre_integral, RiemannianSubmersion, FIBRE_FLAG_TOL};

/// Smallest quadrature grid per fibre axis for the termwise integrals.
pub const MIN_VARIATION_GRID: usize = 8;
pub const DEFAULT_FD_STEP: f64 = 1e-3;
/// Step for difference quotients along the fibre.
const FIBRE_STEP: f64 = 1e-4;
const HORIZONTAL_TOL: f64 = 1e-8;
const LAGRANGIAN_TOL: f64 = 1e-8;
const COASSOCIATIVE_TOL: f64 = 1e-8;

/// Fibres `ι_t = fibre_param(b(t), ·)` over the base geodesic `b(t)` with
/// `b(0) = base_point`, `ḃ(0) = direction`.
#[derive(Debug, Clone)]
pub struct FibreVariation {
    pub submersion: RiemannianSubmersion,
    pub base_point: Vec<f64>,
    pub direction: DVector<f64>,
}

/// Termwise second variation together with the finite-difference oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationReport {
    pub first: f64,
    pub second_analytic: f64,
    pub first_fd: f64,
    pub second_fd: f64,
    /// `|second_fd(h) − second_fd(2h)|`.
    pub fd_richardson: f64,
    pub terms: BTreeMap<String, f64>,
}

impl VariationReport {
    pub fn agreement(&self) -> f64 {
        (self.second_analytic - self.second_fd).abs()
    }

    /// `max(1e-4, 1e-3·|second_fd|)`.
    pub fn default_tolerance(&self) -> f64 {
        1e-4f64.max(1e-3 * self.second_fd.abs())
    }
}

/// Pointwise data of the lifted family at one fibre parameter.
struct Node {
    point: Vec<f64>,
    g: DMatrix<f64>,
    /// Columns `∂_a ι`.
    tangent: DMatrix<f64>,
    h: DMatrix<f64>,
    h_inv: DMatrix<f64>,
    density: f64,
    z: DVector<f64>,
    /// `∇_{∂_a} Z`, one per fibre coordinate.
    dz: Vec<DVector<f64>>,
    nabla_zz: DVector<f64>,
    /// `II(∂_a, ∂_b)` at `a*k + b`.
    ii: Vec<DVector<f64>>,
    mean_curvature: DVector<f64>,
}

impl Node {
    fn k(&self) -> usize {
        self.tangent.ncols()
    }

    fn normal(&self, v: &DVector<f64>) -> DVector<f64> {
        let coeffs = &self.h_inv * (self.tangent.transpose() * &self.g * v);
        v - &self.tangent * coeffs
    }

    /// Orthonormal frame of the fibre tangent space as coefficient rows
    /// `c` with `e_i = Σ_a c[(i,a)] ∂_a`.
    fn frame_coeffs(&self) -> DMatrix<f64> {
        let chol = self.h.clone().cholesky().expect("induced metric is positive definite");
        // h = L Lᵀ, so the columns of T L⁻ᵀ are orthonormal
        chol.l().try_inverse().expect("triangular factor is invertible")
    }

    fn frame(&self) -> Vec<DVector<f64>> {
        let c = self.frame_coeffs();
        (0..self.k()).map(|i| &self.tangent * c.row(i).transpose()).collect()
    }
}

impl FibreVariation {
    pub fn new(submersion: RiemannianSubmersion, base_point: Vec<f64>, direction: DVector<f64>) -> Result<Self> {
        submersion.base.domain().check(&base_point)?;
        if direction.len() != submersion.base_dim() {
            return Err(Error::DimensionMismatch {
                expected: submersion.base_dim(),
                got: direction.len(),
            });
        }
        Ok(FibreVariation {
            submersion,
            base_point,
            direction,
        })
    }

    fn fibre_dim(&self) -> usize {
        self.submersion.fibre_dim()
    }

    fn node(&self, y: &[f64]) -> Result<Node> {
        let rs = &self.submersion;
        let (m, k) = (rs.base_dim(), y.len());
        let a = m + k;
        let mut arg = self.base_point.clone();
        arg.extend_from_slice(y);
        let jets: Vec<_> = rs.fibre_param.iter().map(|f| f.jet(&arg)).collect();
        let n = jets.len();
        let point: Vec<f64> = jets.iter().map(|j| j.value).collect();
        let g = rs.total.at(&point)?;
        let gamma = christoffel(&rs.total, &point)?;
        let tangent = DMatrix::from_fn(n, k, |i, c| jets[i].grad[m + c]);
        let h = tangent.transpose() * &g * &tangent;
        let h_inv = linalg::invert_spd(&h, &point).map_err(|_| Error::RankDeficient {
            expected: k,
            point: point.clone(),
        })?;
        let density = h.determinant().sqrt();
        let x = &self.direction;
        let z = DVector::from_fn(n, |i, _| (0..m).map(|b| x[b] * jets[i].grad[b]).sum());

        let dz = (0..k)
            .map(|c| {
                let raw = DVector::from_fn(n, |i, _| (0..m).map(|b| x[b] * jets[i].hess[b * a + m + c]).sum());
                raw + gamma.contract(&tangent.column(c).into_owned(), &z)
            })
            .collect();

        let gamma_b = christoffel(&rs.base, &self.base_point)?;
        let b_acc = -gamma_b.contract(x, x);
        let nabla_zz = DVector::from_fn(n, |i, _| {
            let mut s = 0.0;
            for b in 0..m {
                s += b_acc[b] * jets[i].grad[b];
                for c in 0..m {
                    s += x[b] * x[c] * jets[i].hess[b * a + c];
                }
            }
            s
        }) + gamma.contract(&z, &z);

        let mut node = Node {
            point,
            g,
            tangent,
            h,
            h_inv,
            density,
            z,
            dz,
            nabla_zz,
            ii: Vec::new(),
            mean_curvature: DVector::zeros(n),
        };
        let mut ii = Vec::with_capacity(k * k);
        for b in 0..k {
            for c in 0..k {
                let raw = DVector::from_fn(n, |i, _| jets[i].hess[(m + b) * a + m + c]);
                let cov = raw
                    + gamma.contract(
                        &node.tangent.column(b).into_owned(),
                        &node.tangent.column(c).into_owned(),
                    );
                ii.push(node.normal(&cov));
            }
        }
        let mut hvec = DVector::zeros(n);
        for b in 0..k {
            for c in 0..k {
                hvec += &ii[b * k + c] * node.h_inv[(b, c)];
            }
        }
        node.ii = ii;
        node.mean_curvature = hvec;
        Ok(node)
    }

    fn nodes_grid(&self, grid: usize) -> Result<(Vec<Vec<f64>>, f64)> {
        if grid < MIN_VARIATION_GRID {
            return Err(Error::GridTooCoarse {
                got: grid,
                min: MIN_VARIATION_GRID,
            });
        }
        let rs = &self.submersion;
        let ys = fibre_grid(rs, &[grid])?;
        let cell: f64 = (0..self.fibre_dim())
            .map(|a| rs.fibre_domain.period(a) / grid as f64)
            .product();
        Ok((ys, cell))
    }

    /// Integrates the per-node vectors of term values; result is one sum per term.
    fn integrate<F>(&self, grid: usize, width: usize, term: F) -> Result<Vec<f64>>
    where
        F: Fn(&[f64], &Node) -> Result<Vec<f64>> + Sync,
    {
        let (ys, cell) = self.nodes_grid(grid)?;
        let rows: Vec<Vec<f64>> = ys
            .par_iter()
            .map(|y| {
                let node = self.node(y)?;
                let vals = term(y, &node)?;
                Ok(vals.into_iter().map(|v| v * node.density * cell).collect())
            })
            .collect::<Result<_>>()?;
        Ok((0..width)
            .map(|t| linalg::pairwise_sum(&rows.iter().map(|r| r[t]).collect::<Vec<_>>()))
            .collect())
    }

    /// Largest `|Z^vert| / |Z|` over the grid.
    pub fn horizontality_residual(&self, grid: usize) -> Result<f64> {
        let (ys, _) = self.nodes_grid(grid)?;
        let mut worst = 0.0f64;
        for y in ys {
            let node = self.node(&y)?;
            let (vert, _) = self.submersion.split(&node.point, &node.z)?;
            let nz = linalg::norm(&node.g, &node.z).max(1e-300);
            worst = worst.max(linalg::norm(&node.g, &vert) / nz);
        }
        Ok(worst)
    }

    fn require_horizontal(&self, grid: usize) -> Result<()> {
        let vertical = self.horizontality_residual(grid.min(16).max(MIN_VARIATION_GRID))?;
        if vertical > HORIZONTAL_TOL {
            return Err(Error::NotHorizontal { vertical });
        }
        Ok(())
    }

    /// `Vol(Σ_{b(t)})`; negative `t` runs the base geodesic backwards.
    pub fn volume_at(&self, t: f64, grid: usize) -> Result<f64> {
        let rs = &self.submersion;
        let b = if t == 0.0 {
            self.base_point.clone()
        } else {
            let v: Vec<f64> = self.direction.iter().map(|c| c * t.signum()).collect();
            let path = geodesic(&rs.base, &self.base_point, &v, t.abs(), MIN_GEODESIC_STEPS * 4)?;
            path.end().0.as_slice().to_vec()
        };
        let one = constant(1.0, rs.total_dim());
        fibre_integral(rs, &*one, &b, &[grid.max(crate::submersion::MIN_FIBRE_GRID)])
    }
}

/// Symmetric differences of `t ↦ Vol(Σ_{b(t)})`: `(first, second)`.
pub fn volume_profile_fd(v: &FibreVariation, t_step: f64, grid: usize) -> Result<(f64, f64)> {
    let vp = v.volume_at(t_step, grid)?;
    let v0 = v.volume_at(0.0, grid)?;
    let vm = v.volume_at(-t_step, grid)?;
    Ok(((vp - vm) / (2.0 * t_step), (vp - 2.0 * v0 + vm) / (t_step * t_step)))
}

/// `−∫ ⟨H, Z⟩ dvol`.
pub fn first_variation(v: &FibreVariation, grid: usize) -> Result<f64> {
    v.require_horizontal(grid)?;
    let out = v.integrate(grid, 1, |_, node| {
        Ok(vec![-linalg::inner(&node.g, &node.mean_curvature, &node.z)])
    })?;
    Ok(out[0])
}

fn finish(
    v: &FibreVariation,
    grid: usize,
    first: f64,
    names: &[&str],
    values: Vec<f64>,
    fd_step: Option<f64>,
) -> Result<VariationReport> {
    let (first_fd, second_fd, fd_richardson) = match fd_step {
        Some(h) => {
            let v0 = v.volume_at(0.0, grid)?;
            let (vp, vm) = (v.volume_at(h, grid)?, v.volume_at(-h, grid)?);
            let (vp2, vm2) = (v.volume_at(2.0 * h, grid)?, v.volume_at(-2.0 * h, grid)?);
            let second = (vp - 2.0 * v0 + vm) / (h * h);
            let second2 = (vp2 - 2.0 * v0 + vm2) / (4.0 * h * h);
            ((vp - vm) / (2.0 * h), second, (second - second2).abs())
        }
        None => (f64::NAN, f64::NAN, f64::NAN),
    };
    let mut terms = BTreeMap::new();
    let mut total = 0.0;
    for (name, val) in names.iter().zip(&values) {
        terms.insert((*name).to_string(), *val);
        total += val;
    }
    Ok(VariationReport {
        first,
        second_analytic: total,
        first_fd,
        second_fd,
        fd_richardson,
        terms,
    })
}

pub const RIEMANNIAN_TERMS: [&str; 6] = [
    "second_fundamental",
    "curvature",
    "tangential_divergence",
    "mean_curvature_acceleration",
    "normal_derivative",
    "mean_curvature_squared",
];

/// Six-term second variation of volume for a general Riemannian total space.
pub fn second_variation_riemannian(v: &FibreVariation, grid: usize) -> Result<VariationReport> {
    second_variation_riemannian_with(v, grid, Some(DEFAULT_FD_STEP))
}

/// `fd_step: None` skips the volume oracle and leaves the FD fields NaN.
pub fn second_variation_riemannian_with(
    v: &FibreVariation,
    grid: usize,
    fd_step: Option<f64>,
) -> Result<VariationReport> {
    v.require_horizontal(grid)?;
    let rs = &v.submersion;
    let k = v.fibre_dim();
    // √h · (∇_Z Z)^T in fibre coordinates; its divergence is a coordinate divergence of this flux
    let flux = |y: &[f64]| -> Result<DVector<f64>> {
        let node = v.node(y)?;
        let coeffs = &node.h_inv * (node.tangent.transpose() * &node.g * &node.nabla_zz);
        Ok(coeffs * node.density)
    };
    let vals = v.integrate(grid, 7, |y, node| {
        let frame = node.frame();
        let g = &node.g;
        let z = &node.z;
        let curv = curvature(&rs.total, &node.point)?;
        let mut t_ii = 0.0;
        let mut t_curv = 0.0;
        let mut t_normal = 0.0;
        let c = node.frame_coeffs();
        for i in 0..k {
            for j in 0..k {
                let mut iiz = 0.0;
                for a in 0..k {
                    for b in 0..k {
                        iiz += c[(i, a)] * c[(j, b)] * linalg::inner(g, &node.ii[a * k + b], z);
                    }
                }
                t_ii -= iiz * iiz;
            }
            t_curv -= linalg::inner(g, &curv.apply(&frame[i], z, z), &frame[i]);
            let de: DVector<f64> = (0..k).map(|a| &node.dz[a] * c[(i, a)]).sum();
            let dn = node.normal(&de);
            t_normal += linalg::inner(g, &dn, &dn);
        }
        let mut div = 0.0;
        let mut yy = y.to_vec();
        for a in 0..k {
            yy[a] = y[a] + FIBRE_STEP;
            let fp = flux(&yy)?;
            yy[a] = y[a] - FIBRE_STEP;
            let fm = flux(&yy)?;
            yy[a] = y[a];
            div += (fp[a] - fm[a]) / (2.0 * FIBRE_STEP);
        }
        div /= node.density;
        let hvec = &node.mean_curvature;
        let acc_normal = node.normal(&node.nabla_zz);
        let hz = linalg::inner(g, hvec, z);
        Ok(vec![
            t_ii,
            t_curv,
            div,
            -linalg::inner(g, hvec, &acc_normal),
            t_normal,
            hz * hz,
            -hz,
        ])
    })?;
    let first = vals[6];
    finish(v, grid, first, &RIEMANNIAN_TERMS, vals[..6].to_vec(), fd_step)
}

/// Second variation on a Kähler total space through minimal Lagrangian
/// fibres: `∫ (Δζ, ζ) − Ric(Z, Z)` with `ζ = ω(Z, ·)|_Σ`. The Hodge term is
/// integrated as `∫ |dζ|² + |δζ|²`, which equals `∫ (Δζ, ζ)` on a closed fibre.
pub fn second_variation_kahler(v: &FibreVariation, k: &KahlerStructure, grid: usize) -> Result<VariationReport> {
    second_variation_kahler_with(v, k, grid, Some(DEFAULT_FD_STEP))
}

pub fn second_variation_kahler_with(
    v: &FibreVariation,
    ks: &KahlerStructure,
    grid: usize,
    fd_step: Option<f64>,
) -> Result<VariationReport> {
    v.require_horizontal(grid)?;
    let rs = &v.submersion;
    let dim = v.fibre_dim();
    let (ys, _) = v.nodes_grid(grid)?;
    for y in &ys {
        let node = v.node(y)?;
        let hn = linalg::norm(&node.g, &node.mean_curvature);
        if hn > FIBRE_FLAG_TOL {
            return Err(Error::FibreNotMinimal { mean_curvature: hn });
        }
        let residual = crate::calibration::omega_residual(ks, &node.point, &node.frame())?;
        if residual > LAGRANGIAN_TOL {
            return Err(Error::FibreNotLagrangian { residual });
        }
    }
    // ζ_a = ω(Z, ∂_a ι) together with the induced metric data
    let zeta = |y: &[f64]| -> Result<(DVector<f64>, DMatrix<f64>, f64)> {
        let node = v.node(y)?;
        let jz = ks.j_at(&node.point)? * &node.z;
        let z = node.tangent.transpose() * &node.g * jz;
        Ok((z, node.h_inv, node.density))
    };
    let vals = v.integrate(grid, 2, |y, node| {
        let hi0 = &node.h_inv;
        let mut dzeta: Vec<DVector<f64>> = Vec::with_capacity(dim);
        let mut delta = 0.0;
        let mut yy = y.to_vec();
        for a in 0..dim {
            yy[a] = y[a] + FIBRE_STEP;
            let (zp, hip, sp) = zeta(&yy)?;
            yy[a] = y[a] - FIBRE_STEP;
            let (zm, him, sm) = zeta(&yy)?;
            yy[a] = y[a];
            dzeta.push((&zp - &zm) / (2.0 * FIBRE_STEP));
            // coordinate divergence of √h h^{ab} ζ_b
            delta += ((&hip * &zp)[a] * sp - (&him * &zm)[a] * sm) / (2.0 * FIBRE_STEP);
        }
        let codiff = -delta / node.density;
        let mut d_sq = 0.0;
        for a in 0..dim {
            for b in 0..dim {
                let wab = dzeta[a][b] - dzeta[b][a];
                for c in 0..dim {
                    for d in 0..dim {
                        let wcd = dzeta[c][d] - dzeta[d][c];
                        d_sq += 0.5 * wab * wcd * hi0[(a, c)] * hi0[(b, d)];
                    }
                }
            }
        }
        let ric = curvature(&rs.total, &node.point)?.ricci_form(&node.z, &node.z);
        Ok(vec![d_sq + codiff * codiff, -ric])
    })?;
    let first = first_variation(v, grid)?;
    finish(v, grid, first, &["hodge", "ricci"], vals, fd_step)
}

/// Second variation on a G₂ total space through coassociative fibres:
/// `∫ τ₂ ∧ γ_Z − Ric(Z, Z) vol`. The exact term `∫ d(ι_Zτ₂ ∧ ι_Zφ)` is
/// reported as `exact` and excluded from the total.
pub fn second_variation_g2(v: &FibreVariation, g2: &G2Structure, grid: usize) -> Result<VariationReport> {
    second_variation_g2_with(v, g2, grid, Some(DEFAULT_FD_STEP))
}

pub fn second_variation_g2_with(
    v: &FibreVariation,
    g2: &G2Structure,
    grid: usize,
    fd_step: Option<f64>,
) -> Result<VariationReport> {
    v.require_horizontal(grid)?;
    let rs = &v.submersion;
    if v.fibre_dim() != 4 || rs.total_dim() != 7 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: v.fibre_dim(),
        });
    }
    let (ys, cell) = v.nodes_grid(grid)?;
    for y in &ys {
        let node = v.node(y)?;
        let pl = Plane::new(node.point.clone(), node.frame(), &node.g)?;
        let residual = crate::calibration::coassociative_residual(&pl, g2)?;
        if residual > COASSOCIATIVE_TOL {
            return Err(Error::FibreNotCoassociative { residual });
        }
    }
    let tau_at = |p: &[f64]| match &g2.tau2 {
        Some(t) => t.at(p),
        None => AlternatingForm::zero(7, 2),
    };
    let vals = v.integrate(grid, 2, |_, node| {
        let frame = node.frame();
        let c = node.frame_coeffs();
        let izphi = g2.phi.interior(&node.z);
        // (∇_{e_i} Z)^T
        let dzt: Vec<DVector<f64>> = (0..4)
            .map(|i| {
                let de: DVector<f64> = (0..4).map(|a| &node.dz[a] * c[(i, a)]).sum();
                &de - node.normal(&de)
            })
            .collect();
        let tau = tau_at(&node.point);
        let mut gamma = AlternatingForm::zero(4, 2);
        let mut tau_s = AlternatingForm::zero(4, 2);
        for i in 0..4 {
            for j in i + 1..4 {
                let gij = izphi.evaluate(&[dzt[i].clone(), frame[j].clone()])
                    + izphi.evaluate(&[frame[i].clone(), dzt[j].clone()]);
                gamma.add_term(&[i, j], gij);
                tau_s.add_term(&[i, j], tau.evaluate(&[frame[i].clone(), frame[j].clone()]));
            }
        }
        let torsion = tau_s.wedge(&gamma).coefficient(&[0, 1, 2, 3]);
        let ric = curvature(&rs.total, &node.point)?.ricci_form(&node.z, &node.z);
        Ok(vec![torsion, -ric])
    })?;
    let first = first_variation(v, grid)?;
    let mut report = finish(v, grid, first, &["torsion", "ricci"], vals, fd_step)?;
    report
        .terms
        .insert("exact".into(), g2_exact_term(v, g2, &ys, cell, &tau_at)?);
    Ok(report)
}

/// `∫_Σ d(ι_Zτ₂ ∧ ι_Zφ)` by central differences of the pulled-back 3-form.
fn g2_exact_term(
    v: &FibreVariation,
    g2: &G2Structure,
    ys: &[Vec<f64>],
    cell: f64,
    tau_at: &(dyn Fn(&[f64]) -> AlternatingForm + Sync),
) -> Result<f64> {
    let beta = |y: &[f64]| -> Result<AlternatingForm> {
        let node = v.node(y)?;
        let form = tau_at(&node.point).interior(&node.z).wedge(&g2.phi.interior(&node.z));
        Ok(form.pullback(&node.tangent))
    };
    let vals: Vec<f64> = ys
        .par_iter()
        .map(|y| {
            let mut yy = y.clone();
            let mut s = 0.0;
            // (dβ)_{0123} = Σ_a (−1)^a ∂_a β_{0..â..3}
            for a in 0..4 {
                let rest: Vec<usize> = (0..4).filter(|&b| b != a).collect();
                yy[a] = y[a] + FIBRE_STEP;
                let bp = beta(&yy)?.coefficient(&rest);
                yy[a] = y[a] - FIBRE_STEP;
                let bm = beta(&yy)?.coefficient(&rest);
                yy[a] = y[a];
                let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
                s += sign * (bp - bm) / (2.0 * FIBRE_STEP);
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    Ok(linalg::pairwise_sum(&vals) * cell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::expr_field;
    use crate::forms::FormField;
    use crate::manifold::{Domain, MetricField};
    use std::f64::consts::PI;

    fn polar_variation(r: f64) -> FibreVariation {
        let rs = crate::submersion::tests::polar();
        FibreVariation::new(rs, vec![r], DVector::from_vec(vec![1.0])).unwrap()
    }

    pub fn s2_latitude() -> RiemannianSubmersion {
        let total =
            MetricField::diagonal(&["1", "sin(x)^2"], Domain::new(vec![0.05, -1e3], vec![PI - 0.05, 1e3])).unwrap();
        let base = MetricField::euclidean(Domain::new(vec![0.05], vec![PI - 0.05]));
        RiemannianSubmersion::new(
            total,
            base,
            vec![expr_field("x", 2).unwrap()],
            vec![expr_field("x1", 2).unwrap(), expr_field("x2", 2).unwrap()],
            Domain::new(vec![0.0], vec![2.0 * PI]).with_periodic(0),
        )
        .unwrap()
        .with_orbit_chart()
    }

    #[test]
    fn polar_first_variation_is_two_pi() {
        for r in [0.5, 2.0] {
            let fv = polar_variation(r);
            assert!((first_variation(&fv, 32).unwrap() - 2.0 * PI).abs() < 1e-12);
            let (d1, d2) = volume_profile_fd(&fv, 1e-3, 64).unwrap();
            assert!((d1 - 2.0 * PI).abs() < 1e-8 && d2.abs() < 1e-6);
        }
    }

    #[test]
    fn polar_second_variation_cancels_termwise() {
        let fv = polar_variation(1.5);
        let rep = second_variation_riemannian(&fv, 32).unwrap();
        let per_length = 2.0 * PI * 1.5;
        assert!((rep.terms["second_fundamental"] + per_length / 2.25).abs() < 1e-10);
        assert!((rep.terms["mean_curvature_squared"] - per_length / 2.25).abs() < 1e-10);
        assert!(rep.second_analytic.abs() < 1e-9);
        assert!(rep.agreement() < rep.default_tolerance());
        let sum: f64 = RIEMANNIAN_TERMS.iter().map(|t| rep.terms[*t]).sum();
        assert_eq!(sum, rep.second_analytic);
    }

    #[test]
    fn sphere_equator_second_variation() {
        let fv = FibreVariation::new(s2_latitude(), vec![PI / 2.0], DVector::from_vec(vec![1.0])).unwrap();
        assert!(first_variation(&fv, 32).unwrap().abs() < 1e-12);
        let rep = second_variation_riemannian(&fv, 32).unwrap();
        assert!((rep.second_analytic + 2.0 * PI).abs() < 1e-9);
        assert!((rep.second_fd + 2.0 * PI).abs() < 1e-4);
        let k = KahlerStructure::surface(fv.submersion.total.clone()).unwrap();
        let kr = second_variation_kahler(&fv, &k, 32).unwrap();
        assert!(kr.terms["hodge"].abs() < 1e-8);
        assert!((kr.terms["ricci"] + 2.0 * PI).abs() < 1e-9);
        assert!((kr.second_analytic - rep.second_analytic).abs() < 1e-5);
    }

    #[test]
    fn sphere_off_equator_matches_cosine_profile() {
        let theta = 1.0;
        let fv = FibreVariation::new(s2_latitude(), vec![theta], DVector::from_vec(vec![1.0])).unwrap();
        let rep = second_variation_riemannian(&fv, 32).unwrap();
        assert!((rep.second_analytic + 2.0 * PI * theta.sin()).abs() < 1e-9);
        assert!((rep.first - 2.0 * PI * theta.cos()).abs() < 1e-10);
        let k = KahlerStructure::surface(fv.submersion.total.clone()).unwrap();
        assert!(matches!(
            second_variation_kahler(&fv, &k, 32),
            Err(Error::FibreNotMinimal { .. })
        ));
    }

    #[test]
    fn flat_torus_g2_variation_vanishes() {
        let rs = crate::submersion::tests::flat_t7();
        let fv = FibreVariation::new(rs, vec![0.1, 0.2, 0.3], DVector::from_vec(vec![0.6, 0.0, 0.8])).unwrap();
        let g2 = G2Structure::on(fv.submersion.total.domain().clone());
        let rep = second_variation_g2(&fv, &g2, 8).unwrap();
        assert_eq!(rep.second_analytic, 0.0);
        assert!(rep.second_fd.abs() < 1e-6);
        // τ₂ with coefficients depending on the base coordinates only
        let tau = FormField::new(
            7,
            2,
            vec![
                (vec![3, 4], expr_field("sin(x1)", 7).unwrap()),
                (vec![5, 6], expr_field("-sin(x1) + cos(x2)", 7).unwrap()),
            ],
        )
        .unwrap();
        let g2 = g2.with_torsion(tau).unwrap();
        let rep = second_variation_g2(&fv, &g2, 8).unwrap();
        assert!(rep.terms["exact"].abs() < 1e-8);
        assert!(rep.terms["torsion"].abs() < 1e-12);
        let rr = second_variation_riemannian(&fv, 8).unwrap();
        assert!(rr.second_analytic.abs() < 1e-12);
    }

    #[test]
    fn coarse_variation_grid_is_rejected() {
        assert!(matches!(
            first_variation(&polar_variation(1.0), 4),
            Err(Error::GridTooCoarse { .. })
        ));
    }
}
