use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use super::drivers::{base_frame, total_sample, Worst};
use super::{CheckContext, CheckRecord, Profile, Scenario};
use crate::calibration::{omega_residual, KahlerStructure};
use crate::error::{Error, Result};
use crate::field::constant;
use crate::linalg;
use crate::manifold::curvature;
use crate::sampling::gaussian_vector;
use crate::submersion::{fd_hessian, fibre_grid, fibre_integral, RiemannianSubmersion};

/// Ricci form `ρ(X, Y) = Ric(JX, Y)`.
pub fn ricci_two_form(k: &KahlerStructure, p: &[f64], x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    let ric = curvature(&k.metric, p)?.ricci;
    let jx = k.j_at(p)? * x;
    Ok((jx.transpose() * ric * y)[(0, 0)])
}

pub(super) fn ricci_form_check(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let k = s.kahler()?;
    let mut rng = ctx.rng();
    let mut anti = Worst::default();
    let mut oracle = Worst::default();
    let surface = k.dim() == 2 && s.gauss_curvature.is_some();
    for _ in 0..20 {
        let p = total_sample(s, &mut rng);
        let x = gaussian_vector(&mut rng, k.dim());
        let y = gaussian_vector(&mut rng, k.dim());
        let g = k.metric.at(&p)?;
        let scale = linalg::norm(&g, &x) * linalg::norm(&g, &y);
        let a = ricci_two_form(k, &p, &x, &y)? + ricci_two_form(k, &p, &y, &x)?;
        anti.update(a.abs() / scale, &p);
        if let Some(kg) = &s.gauss_curvature {
            if surface {
                let jx = k.j_at(&p)? * &x;
                let want = kg.value(&p) * linalg::inner(&g, &x, &x);
                oracle.update((ricci_two_form(k, &p, &x, &jx)? - want).abs(), &p);
            }
        }
    }
    let mut out = vec![anti.record(&format!("{}.antisymmetric", ctx.name), "ricci_form", 1e-10)];
    if surface {
        out.push(oracle.record(&format!("{}.gauss_curvature", ctx.name), "ricci_form", 1e-8));
    }
    Ok(out)
}

/// Orbit-volume density from the complex determinant of the fibre frame:
/// `h_jk = g(v_j − iJv_j, v_k + iJv_k)`, complex-bilinear in both slots.
fn complex_gram(g: &DMatrix<f64>, j: &DMatrix<f64>, frame: &[DVector<f64>]) -> DMatrix<Complex64> {
    let k = frame.len();
    let jv: Vec<DVector<f64>> = frame.iter().map(|v| j * v).collect();
    DMatrix::from_fn(k, k, |a, b| {
        let re = linalg::inner(g, &frame[a], &frame[b]) + linalg::inner(g, &jv[a], &jv[b]);
        let im = linalg::inner(g, &frame[a], &jv[b]) - linalg::inner(g, &jv[a], &frame[b]);
        Complex64::new(re, im)
    })
}

fn fibre_frame(rs: &RiemannianSubmersion, b: &[f64], y: &[f64]) -> Vec<DVector<f64>> {
    let mut arg = b.to_vec();
    arg.extend_from_slice(y);
    let m = b.len();
    let duals: Vec<_> = rs.fibre_param.iter().map(|f| f.dual(&arg)).collect();
    (0..rs.fibre_dim())
        .map(|a| DVector::from_iterator(duals.len(), duals.iter().map(|d| d.grad[m + a])))
        .collect()
}

/// For a Lagrangian fibre the complex Gram matrix is `2g` and the fibre
/// volume is `∫ √det h / 2^{k/2}`. Records the three identities and the
/// Lagrangian hypothesis at `b`.
pub fn lagrangian_determinant_check(
    rs: &RiemannianSubmersion,
    k: &KahlerStructure,
    b: &[f64],
    grid: usize,
) -> Result<Vec<CheckRecord>> {
    if rs.fibre_dim() * 2 != rs.total_dim() {
        return Err(Error::Precondition("fibres are not half-dimensional".into()));
    }
    let nodes = fibre_grid(rs, &[grid])?;
    let cell: f64 = (0..rs.fibre_dim())
        .map(|a| rs.fibre_domain.period(a) / grid as f64)
        .product();
    let (mut lag, mut two_g, mut herm) = (0.0f64, 0.0f64, 0.0f64);
    let mut density = Vec::with_capacity(nodes.len());
    for y in &nodes {
        let p = rs.fibre_point(b, y);
        let frame = fibre_frame(rs, b, y);
        let g = rs.total.at(&p)?;
        let j = k.j_at(&p)?;
        lag = lag.max(omega_residual(k, &p, &frame)?);
        let h = complex_gram(&g, &j, &frame);
        let gram = DMatrix::from_fn(frame.len(), frame.len(), |a, c| {
            2.0 * linalg::inner(&g, &frame[a], &frame[c])
        });
        let scale = linalg::max_abs(&gram).max(1.0);
        two_g = two_g.max(
            h.iter()
                .zip(gram.iter())
                .map(|(z, r)| (z - Complex64::new(*r, 0.0)).norm())
                .fold(0.0, f64::max)
                / scale,
        );
        herm = herm.max((&h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale);
        let det = h.determinant();
        density.push(det.norm().sqrt() / 2f64.powf(frame.len() as f64 / 2.0));
    }
    let via_det = linalg::pairwise_sum(&density) * cell;
    let vol = fibre_integral(rs, &*constant(1.0, rs.total_dim()), b, &[grid])?;
    let witness = json!({ "b": b, "volume": vol, "determinant_volume": via_det });
    Ok(vec![
        CheckRecord::hypothesis(
            "lagrangian_determinant",
            "lagrangian",
            "lagrangian_determinant",
            lag,
            1e-8,
        ),
        CheckRecord::new(
            "lagrangian_determinant.h_equals_2g",
            "lagrangian_determinant",
            two_g,
            1e-10,
        ),
        CheckRecord::new(
            "lagrangian_determinant.hermitian",
            "lagrangian_determinant",
            herm,
            1e-12,
        ),
        CheckRecord::new(
            "lagrangian_determinant.volume",
            "lagrangian_determinant",
            (vol - via_det).abs() / vol.abs().max(1.0),
            1e-8,
        )
        .with_witness(witness),
    ])
}

pub(super) fn lagrangian_determinant(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    let k = s.kahler()?;
    let grid = ctx.fibre_grid(rs);
    let mut merged: Vec<CheckRecord> = Vec::new();
    for b in &s.probes {
        let recs = lagrangian_determinant_check(rs, k, b, grid)?;
        if merged.is_empty() {
            merged = recs;
            continue;
        }
        for (m, r) in merged.iter_mut().zip(recs) {
            if r.residual > m.residual || r.residual.is_nan() {
                *m = r;
            }
        }
    }
    Ok(merged)
}

/// A critical orbit of the orbit-volume function.
#[derive(Debug, Clone, Serialize)]
pub struct MinimalOrbit {
    pub b: f64,
    pub volume: f64,
    /// `Ric(X̃, X̃)` for the horizontal lift of a unit base vector.
    pub ricci: f64,
    /// `Hess(−log Vol)(X, X)`, central differences with Richardson.
    pub hess_neg_log_volume: f64,
    pub hess_volume: f64,
    pub scalar: f64,
    /// `ΔVol / Vol` on the base.
    pub laplacian_ratio: f64,
    /// "maximum", "minimum" or "degenerate" from the sign of `Ric`.
    pub kind: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct ToricAnalysis {
    pub orbits: Vec<MinimalOrbit>,
    /// `r' ≡ 0`: every orbit is minimal.
    pub plateau: bool,
    /// `max |Ric|` over the grid when `plateau`.
    pub plateau_ricci: Option<f64>,
    pub maximizer: f64,
    pub maximizer_interior: bool,
}

const ROOT_TOL: f64 = 1e-10;
const FD_STEP: f64 = 1e-3;

fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    while b - a > ROOT_TOL {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn lifted_ricci(rs: &RiemannianSubmersion, b: &[f64]) -> Result<(f64, f64)> {
    let y = vec![rs.fibre_domain.lower[0]; rs.fibre_dim()];
    let p = rs.fibre_point(b, &y);
    let x = base_frame(rs, b)?.remove(0);
    let w = rs.horizontal_lift(b, &x, &p)?;
    let c = curvature(&rs.total, &p)?;
    Ok(((w.transpose() * &c.ricci * &w)[(0, 0)], c.scalar))
}

/// Locate the minimal orbits of a surface of revolution and compare
/// `Ric(X̃, X̃)` with `Hess(−log Vol)(X, X)` there.
pub fn toric_volume_analysis(profile: &Profile, rs: &RiemannianSubmersion, grid: usize) -> Result<ToricAnalysis> {
    if rs.base_dim() != 1 {
        return Err(Error::Precondition("orbit volumes need a one-dimensional base".into()));
    }
    let n = grid.max(64);
    let (lo, hi) = (profile.lower, profile.upper);
    let xs: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    for &x in &xs {
        if !(profile.r(x) > 0.0) {
            return Err(Error::ProfileVanishes { at: x });
        }
    }
    let fibre_n = grid.max(32);
    let one = constant(1.0, rs.total_dim());
    let vol = |b: &[f64]| fibre_integral(rs, &*one, b, &[fibre_n]);

    let d: Vec<f64> = xs.iter().map(|&x| profile.dr(x)).collect();
    let plateau = d.iter().all(|v| v.abs() < 1e-12);
    let mut roots = Vec::new();
    if !plateau {
        for i in 0..n {
            if d[i] == 0.0 {
                roots.push(xs[i]);
            } else if d[i] * d[i + 1] < 0.0 {
                roots.push(bisect(&|x| profile.dr(x), xs[i], xs[i + 1]));
            }
        }
        if d[n] == 0.0 && !profile.periodic {
            roots.push(xs[n]);
        }
    }
    let margin = 2.0 * FD_STEP + 1e-9;
    let mut orbits = Vec::new();
    for b in roots {
        if !profile.periodic && (b - lo < margin || hi - b < margin) {
            continue;
        }
        let bv = [b];
        let (ricci, scalar) = lifted_ricci(rs, &bv)?;
        let g = rs.base.at(&bv)?[(0, 0)];
        let neg_log = |q: &[f64]| Ok(-vol(q)?.ln());
        let rich = |f: &dyn Fn(&[f64]) -> Result<f64>| -> Result<f64> {
            let h1 = fd_hessian(f, &rs.base, &bv, &[FD_STEP])?[(0, 0)];
            let h2 = fd_hessian(f, &rs.base, &bv, &[2.0 * FD_STEP])?[(0, 0)];
            Ok((4.0 * h1 - h2) / 3.0 / g)
        };
        let hess_neg_log_volume = rich(&neg_log)?;
        let hess_volume = rich(&vol)?;
        let volume = vol(&bv)?;
        let kind = if ricci > ROOT_TOL {
            "maximum"
        } else if ricci < -ROOT_TOL {
            "minimum"
        } else {
            "degenerate"
        };
        orbits.push(MinimalOrbit {
            b,
            volume,
            ricci,
            hess_neg_log_volume,
            hess_volume,
            scalar,
            laplacian_ratio: hess_volume / volume,
            kind,
        });
    }
    let plateau_ricci = if plateau {
        let mut worst = 0.0f64;
        for &x in xs.iter().step_by((n / 16).max(1)) {
            worst = worst.max(lifted_ricci(rs, &[x])?.0.abs());
        }
        Some(worst)
    } else {
        None
    };
    let (mut maximizer, mut best) = (xs[0], f64::NEG_INFINITY);
    for &x in &xs {
        let r = profile.r(x);
        if r > best {
            best = r;
            maximizer = x;
        }
    }
    let maximizer_interior = profile.periodic || (maximizer > lo && maximizer < hi);
    Ok(ToricAnalysis {
        orbits,
        plateau,
        plateau_ricci,
        maximizer,
        maximizer_interior,
    })
}

pub(super) fn toric_volume(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    let profile = s.profile()?;
    let a = toric_volume_analysis(profile, rs, ctx.grid)?;
    let name = &ctx.name;
    let mut out = vec![CheckRecord::new(format!("{name}.minimal_orbits"), "T8.1", 0.0, 0.0)
        .with_witness(serde_json::to_value(&a).map_err(|e| Error::Config(e.to_string()))?)];
    if let Some(r) = a.plateau_ricci {
        out.push(CheckRecord::new(format!("{name}.ricci_flat"), "T8.1", r, 1e-10));
    }
    for (i, o) in a.orbits.iter().enumerate() {
        let tag = |what: &str| super::drivers::indexed(&format!("{name}.{what}"), i, a.orbits.len());
        let w = json!({ "b": o.b, "ricci": o.ricci, "hess_neg_log_volume": o.hess_neg_log_volume });
        out.push(
            CheckRecord::new(
                tag("ricci_identity"),
                "T8.1",
                (o.ricci - o.hess_neg_log_volume).abs(),
                1e-5,
            )
            .with_witness(w),
        );
        out.push(CheckRecord::new(
            tag("scalar_identity"),
            "T8.1",
            (o.scalar + 2.0 * o.laplacian_ratio).abs(),
            1e-5,
        ));
        let margin = match o.kind {
            "maximum" => -o.hess_volume,
            "minimum" => o.hess_volume,
            _ => 0.0,
        };
        out.push(
            CheckRecord::new(tag("classification"), "C8.2", (-margin).max(0.0), 0.0)
                .with_witness(json!({ "kind": o.kind, "margin": margin })),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{build_scenario, run_scenario, Outcome, ScenarioConfig};

    #[test]
    fn latitude_equator_is_a_maximum() {
        let s = build_scenario(&ScenarioConfig::for_scenario("s2_latitude")).unwrap();
        let a = toric_volume_analysis(s.profile.as_ref().unwrap(), s.submersion.as_ref().unwrap(), 64).unwrap();
        assert_eq!(a.orbits.len(), 1);
        let o = &a.orbits[0];
        assert!((o.b - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
        assert!((o.ricci - 1.0).abs() < 1e-9);
        assert!((o.hess_neg_log_volume - 1.0).abs() < 1e-5);
        assert_eq!(o.kind, "maximum");
        assert!((o.volume - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn catenoid_neck_is_a_minimum() {
        let r = run_scenario(&ScenarioConfig::for_scenario("rev_surface").with_checks(&["toric_volume"])).unwrap();
        assert_eq!(r.outcome(), Outcome::Pass, "{}", r.to_json());
        let w = r
            .record("toric_volume.classification")
            .unwrap()
            .witness
            .clone()
            .unwrap();
        assert_eq!(w["kind"], "minimum");
    }

    #[test]
    fn ricci_form_and_determinant_checks() {
        for id in ["s2_latitude", "flat_t2", "flat_c2_torus"] {
            let r =
                run_scenario(&ScenarioConfig::for_scenario(id).with_checks(&["ricci_form", "lagrangian_determinant"]))
                    .unwrap();
            assert_eq!(r.outcome(), Outcome::Pass, "{id}: {}", r.to_json());
        }
    }

    #[test]
    fn complex_gram_detects_non_lagrangian_frames() {
        let g = DMatrix::identity(2, 2);
        let j = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let frame = vec![linalg::unit(2, 0)];
        let h = complex_gram(&g, &j, &frame);
        assert_eq!(h[(0, 0)], Complex64::new(2.0, 0.0));
        let g4 = DMatrix::identity(4, 4);
        let mut j4 = DMatrix::zeros(4, 4);
        j4[(2, 0)] = 1.0;
        j4[(0, 2)] = -1.0;
        j4[(3, 1)] = 1.0;
        j4[(1, 3)] = -1.0;
        let h = complex_gram(&g4, &j4, &[linalg::unit(4, 0), linalg::unit(4, 2)]);
        assert!((h[(0, 1)].im - 2.0).abs() < 1e-15 || (h[(0, 1)].im + 2.0).abs() < 1e-15);
    }
}
