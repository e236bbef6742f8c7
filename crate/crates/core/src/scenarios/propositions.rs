//! Numerical checks of the potential-theory statements relating functions on
//! the total space to functions on the base. Each check records its
//! hypotheses as `<check>.hypothesis.<what>` and its conclusion separately.
//! Implications whose antecedent fails at every sample are recorded as
//! vacuous with residual 0.

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use super::drivers::{base_frame, base_samples, min_eigenvalue, search_options, total_sample, Worst};
use super::{CheckContext, CheckRecord, Scenario};
use crate::calibration::{
    associative_minimum, coassociative_residual, g2_psh_defect, kahler_psh_defect, levi_form, levi_minimum,
    omega_residual, KahlerStructure,
};
use crate::error::{Error, Result};
use crate::field::{expr_field, Field, ScalarField};
use crate::linalg;
use crate::manifold::{christoffel, curvature, geodesic, hessian, laplacian, MetricField, MIN_GEODESIC_STEPS};
use crate::submersion::{
    base_convexity_check, fd_hessian, fibre_geometry, fibre_integral, fibre_quadrature, fibre_samples, fibre_supremum,
    haar_pushdown, ConvexityMode, RiemannianSubmersion,
};
use crate::variation::{
    second_variation_g2_with, second_variation_kahler_with, second_variation_riemannian_with, FibreVariation,
};

/// Tolerance on flags such as minimality and total geodesy.
const FLAG_TOL: f64 = 1e-7;
/// Sign tolerance for pointwise convexity and PSH tests.
const SIGN_TOL: f64 = 1e-8;
/// Tolerance on conclusions that go through finite differences.
const FD_TOL: f64 = 1e-6;
const FD_STEP: f64 = 1e-3;
const LINE_STEP: f64 = 1e-2;

fn hyp(ctx: &CheckContext, what: &str, tag: &str, residual: f64, tol: f64) -> CheckRecord {
    CheckRecord::hypothesis(&ctx.name, what, tag, residual, tol)
}

fn rec(ctx: &CheckContext, what: &str, tag: &str, residual: f64, tol: f64) -> CheckRecord {
    CheckRecord::new(format!("{}.{what}", ctx.name), tag, residual, tol)
}

/// `antecedent ⇒ conclusion ≥ −tol`, evaluated over samples.
#[derive(Default)]
struct Implication {
    held: usize,
    total: usize,
    worst: Worst,
}

impl Implication {
    fn add(&mut self, antecedent: bool, conclusion: f64, at: &[f64]) {
        self.total += 1;
        if antecedent {
            self.held += 1;
            self.worst.update((-conclusion).max(0.0), at);
        }
    }

    fn record(&self, ctx: &CheckContext, what: &str, tag: &str, tol: f64) -> CheckRecord {
        rec(ctx, what, tag, self.worst.value, tol).with_witness(json!({
            "antecedent_held": self.held,
            "samples": self.total,
            "vacuous": self.held == 0,
            "at": self.worst.at,
        }))
    }
}

/// `a ≥ −band ⇔ b ≥ −band`; a mismatch costs the smaller distance to the
/// boundary.
fn mismatch(a: f64, b: f64, band: f64) -> f64 {
    if (a >= -band) != (b >= -band) {
        a.abs().min(b.abs())
    } else {
        0.0
    }
}

/// Probes followed by a spread of base samples.
fn eval_points(s: &Scenario) -> Vec<Vec<f64>> {
    let mut pts = s.probes.clone();
    pts.extend(base_samples(s, 8));
    pts
}

fn fibre_points(rs: &RiemannianSubmersion, b: &[f64], count: usize) -> Vec<Vec<f64>> {
    fibre_samples(&rs.fibre_domain, count)
        .iter()
        .map(|y| rs.fibre_point(b, y))
        .collect()
}

/// Largest mean-curvature and second-fundamental-form norms on the fibre.
fn fibre_flags(rs: &RiemannianSubmersion, b: &[f64], count: usize) -> Result<(f64, f64)> {
    let (mut h, mut ii) = (0.0f64, 0.0f64);
    for y in fibre_samples(&rs.fibre_domain, count) {
        let g = fibre_geometry(rs, b, &y)?.geometry;
        h = h.max(g.mean_curvature_norm());
        ii = ii.max(g.second_fundamental_norm());
    }
    Ok((h, ii))
}

fn max_gradient(metric: &MetricField, f: &dyn ScalarField, pts: &[Vec<f64>]) -> Result<f64> {
    let mut worst = 0.0f64;
    for p in pts {
        let grad = crate::manifold::gradient(metric, f, p)?;
        worst = worst.max(linalg::norm(&metric.at(p)?, &grad));
    }
    Ok(worst)
}

/// Residual of "totally geodesic or inside the critical locus of `f`".
fn geodesic_or_critical(rs: &RiemannianSubmersion, f: &dyn ScalarField, b: &[f64]) -> Result<f64> {
    let (_, ii) = fibre_flags(rs, b, 8)?;
    Ok(ii.min(max_gradient(&rs.total, f, &fibre_points(rs, b, 8))?))
}

fn lagrangian_residual(rs: &RiemannianSubmersion, k: &KahlerStructure, b: &[f64]) -> Result<f64> {
    if 2 * rs.fibre_dim() != rs.total_dim() {
        return Ok(f64::INFINITY);
    }
    let mut worst = 0.0f64;
    for y in fibre_samples(&rs.fibre_domain, 8) {
        let g = fibre_geometry(rs, b, &y)?.geometry;
        worst = worst.max(omega_residual(k, g.point.as_slice(), &g.tangent_frame())?);
    }
    Ok(worst)
}

fn coassociative_fibre(s: &Scenario, b: &[f64]) -> Result<f64> {
    let rs = s.submersion()?;
    let g2 = s.g2()?;
    let mut worst = 0.0f64;
    for y in fibre_samples(&rs.fibre_domain, 4) {
        worst = worst.max(coassociative_residual(&super::drivers::fibre_plane(rs, b, &y)?, g2)?);
    }
    Ok(worst)
}

/// Largest eigenvalue of the Ricci tensor in an orthonormal frame, over the
/// fibre.
fn max_ricci(rs: &RiemannianSubmersion, b: &[f64]) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for p in fibre_points(rs, b, 4) {
        let c = curvature(&rs.total, &p)?;
        let ev = linalg::sym_eigenvalues(&linalg::in_frame(&c.ricci, &linalg::coordinate_frame(&c.metric)));
        worst = worst.max(*ev.last().expect("non-empty"));
    }
    Ok(worst)
}

/// Largest sectional curvature over coordinate-frame planes on the fibre.
fn max_sectional(rs: &RiemannianSubmersion, b: &[f64]) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for p in fibre_points(rs, b, 4) {
        let c = curvature(&rs.total, &p)?;
        let e = linalg::coordinate_frame(&c.metric);
        for i in 0..e.len() {
            for j in i + 1..e.len() {
                worst = worst.max(c.sectional(&e[i], &e[j]));
            }
        }
    }
    Ok(worst)
}

/// Richardson-extrapolated central-difference Hessian.
fn fd_hessian_rich(f: &dyn Fn(&[f64]) -> Result<f64>, metric: &MetricField, p: &[f64], h: f64) -> Result<DMatrix<f64>> {
    let d = p.len();
    let h1 = fd_hessian(f, metric, p, &vec![h; d])?;
    let h2 = fd_hessian(f, metric, p, &vec![2.0 * h; d])?;
    Ok((h1 * 4.0 - h2) / 3.0)
}

/// `d²/dt² F(γ(t))` at `t = 0` along the base geodesic with `γ'(0) = x`.
fn along_geodesic(f: &dyn Fn(&[f64]) -> Result<f64>, base: &MetricField, b: &[f64], x: &DVector<f64>) -> Result<f64> {
    let at = |t: f64| -> Result<f64> {
        let v: Vec<f64> = x.iter().map(|c| c * t.signum()).collect();
        let path = geodesic(base, b, &v, t.abs(), MIN_GEODESIC_STEPS)?;
        f(path.end().0.as_slice())
    };
    let f0 = f(b)?;
    let d2 = |h: f64| -> Result<f64> { Ok((at(h)? + at(-h)? - 2.0 * f0) / (h * h)) };
    Ok((4.0 * d2(LINE_STEP)? - d2(2.0 * LINE_STEP)?) / 3.0)
}

/// Smallest eigenvalue of `Hess f` over sampled fibre points.
fn fibre_min_hessian(rs: &RiemannianSubmersion, f: &dyn ScalarField, b: &[f64], count: usize) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for p in fibre_points(rs, b, count) {
        worst = worst.min(min_eigenvalue(&hessian(&rs.total, f, &p)?, &rs.total.at(&p)?));
    }
    Ok(worst)
}

fn fibre_min_laplacian(rs: &RiemannianSubmersion, f: &dyn ScalarField, b: &[f64], count: usize) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for p in fibre_points(rs, b, count) {
        worst = worst.min(laplacian(&rs.total, f, &p)?);
    }
    Ok(worst)
}

fn fibre_min_levi(
    rs: &RiemannianSubmersion,
    k: &KahlerStructure,
    f: &dyn ScalarField,
    b: &[f64],
    ctx: &CheckContext,
) -> Result<f64> {
    let opts = search_options(ctx, 256);
    let mut worst = f64::INFINITY;
    for p in fibre_points(rs, b, 4) {
        worst = worst.min(kahler_psh_defect(k, f, &p, &opts)?.defect);
    }
    Ok(worst)
}

fn base_min_hessian(rs: &RiemannianSubmersion, f: &dyn ScalarField, b: &[f64]) -> Result<f64> {
    Ok(min_eigenvalue(&hessian(&rs.base, f, b)?, &rs.base.at(b)?))
}

fn fd_min_hessian(rs: &RiemannianSubmersion, f: &dyn ScalarField, b: &[f64]) -> Result<f64> {
    let h = fd_hessian_rich(&|q| Ok(f.value(q)), &rs.base, b, FD_STEP)?;
    Ok(min_eigenvalue(&h, &rs.base.at(b)?))
}

/// Pullbacks of `f = π*F`.
fn invariant(s: &Scenario) -> Result<(&RiemannianSubmersion, &Field, Field)> {
    let rs = s.submersion()?;
    let big_f = s.base_function()?;
    let f = rs.pullback(big_f)?;
    Ok((rs, big_f, f))
}

/// Qualifying samples for a per-fibre hypothesis.
struct Qualified {
    points: Vec<Vec<f64>>,
    best: f64,
}

fn qualify(pts: &[Vec<f64>], tol: f64, residual: &dyn Fn(&[f64]) -> Result<f64>) -> Result<Qualified> {
    let mut q = Qualified {
        points: Vec::new(),
        best: f64::INFINITY,
    };
    for b in pts {
        let r = residual(b)?;
        q.best = q.best.min(r);
        if r <= tol {
            q.points.push(b.clone());
        }
    }
    Ok(q)
}

fn qualified_record(ctx: &CheckContext, what: &str, tag: &str, q: &Qualified, tol: f64) -> CheckRecord {
    hyp(ctx, what, tag, q.best, tol).with_witness(json!({ "qualifying": q.points }))
}

pub(super) fn p3_1(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let (rs, big_f, f) = invariant(s)?;
    let pts = eval_points(s);
    let mut out = Vec::new();

    let mut part1 = Implication::default();
    for b in &pts {
        let convex_above = fibre_min_hessian(rs, &*f, b, 8)? >= -SIGN_TOL;
        part1.add(convex_above, base_min_hessian(rs, &**big_f, b)?, b);
    }
    out.push(part1.record(ctx, "part1", "P3.1", SIGN_TOL));

    let q2 = qualify(&pts, FLAG_TOL, &|b| geodesic_or_critical(rs, &*f, b))?;
    out.push(qualified_record(
        ctx,
        "totally_geodesic_or_critical",
        "P3.1",
        &q2,
        FLAG_TOL,
    ));
    let mut transfer = Worst::default();
    for b in &q2.points {
        let hb = hessian(&rs.base, &**big_f, b)?;
        for p in fibre_points(rs, b, 8) {
            let d = rs.differential(&p);
            let diff = hessian(&rs.total, &*f, &p)? - d.transpose() * &hb * &d;
            let e = linalg::coordinate_frame(&rs.total.at(&p)?);
            transfer.update(linalg::max_abs(&linalg::in_frame(&diff, &e)), &p);
        }
    }
    out.push(transfer.record(&format!("{}.part2", ctx.name), "P3.1", FD_TOL));

    let q3 = qualify(&pts, FLAG_TOL, &|b| Ok(fibre_flags(rs, b, 8)?.0))?;
    out.push(qualified_record(ctx, "minimal", "P3.1", &q3, FLAG_TOL));
    let mut lap = Worst::default();
    for b in &q3.points {
        let lb = laplacian(&rs.base, &**big_f, b)?;
        for p in fibre_points(rs, b, 8) {
            lap.update((laplacian(&rs.total, &*f, &p)? - lb).abs(), &p);
        }
    }
    out.push(lap.record(&format!("{}.part3", ctx.name), "P3.1", FD_TOL));
    Ok(out)
}

/// Base functions whose pullbacks probe both directions of the
/// convex-iff-PSH equivalence on circle quotients.
const T3_1_FAMILY: [(&str, &str); 5] = [
    ("t2", "x^2"),
    ("neg_t2", "-x^2"),
    ("exp", "exp(x)"),
    ("cubic", "x^3"),
    ("cosh_minus_t2", "cosh(x) - x^2"),
];

pub(super) fn t3_1(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    let k = s.kahler()?;
    let mut out = vec![
        hyp(
            ctx,
            "orbit_chart",
            "T3.1",
            if rs.orbit_chart { 0.0 } else { f64::INFINITY },
            0.0,
        ),
        hyp(
            ctx,
            "abelian_orbits",
            "T3.1",
            if rs.fibre_dim() == 1 && rs.base_dim() == 1 {
                0.0
            } else {
                f64::INFINITY
            },
            0.0,
        ),
    ];
    let mut family: Vec<(String, Field)> = vec![("scenario".into(), s.base_function()?.clone())];
    for (label, text) in T3_1_FAMILY {
        family.push((label.into(), expr_field(text, rs.base_dim())?));
    }
    let mut worst = Worst::default();
    let mut summary = Vec::new();
    for (label, big_f) in &family {
        let f = rs.pullback(big_f)?;
        let (mut psh, mut convex) = (0usize, 0usize);
        for b in eval_points(s) {
            let d = fibre_min_levi(rs, k, &*f, &b, ctx)?;
            let l = base_min_hessian(rs, &**big_f, &b)?;
            psh += usize::from(d >= -FD_TOL);
            convex += usize::from(l >= -FD_TOL);
            worst.update(mismatch(d, l, FD_TOL), &b);
        }
        summary.push(json!({ "function": label, "psh": psh, "convex": convex }));
    }
    out.push(rec(ctx, "part1", "T3.1", worst.value, FD_TOL).with_witness(json!({ "at": worst.at, "family": summary })));
    Ok(out)
}

pub(super) fn p5_1(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    let k = s.kahler()?;
    let pts = eval_points(s);
    let n = rs.total_dim();
    let q = qualify(&pts, FLAG_TOL, &|b| lagrangian_residual(rs, k, b))?;
    let mut out = vec![qualified_record(ctx, "lagrangian", "P5.1", &q, FLAG_TOL)];

    // part 1 holds for any function: use the scenario function and a generic one
    let generic: String = (1..=n)
        .map(|i| format!("x{i}^2*x{}/{i} + sin(x{i})", i % n + 1))
        .collect::<Vec<_>>()
        .join(" + ");
    let fns = [s.function.clone(), expr_field(&generic, n)?];
    let mut trace = Worst::default();
    for b in &q.points {
        for y in fibre_samples(&rs.fibre_domain, 4) {
            let g = fibre_geometry(rs, b, &y)?.geometry;
            let p = g.point.as_slice();
            for f in &fns {
                let lap = laplacian(&k.metric, &**f, p)?;
                let sum: f64 = g
                    .tangent_frame()
                    .iter()
                    .map(|e| levi_form(k, &**f, p, e))
                    .sum::<Result<f64>>()?;
                trace.update((lap - sum).abs() / lap.abs().max(1.0), p);
            }
        }
    }
    out.push(trace.record(&format!("{}.part1", ctx.name), "P5.1", SIGN_TOL));

    // part 2 on invariant functions
    let mut family: Vec<Field> = vec![rs.pullback(s.base_function()?)?];
    let m = rs.base_dim();
    let saddle: String = (1..=m)
        .map(|i| {
            if i == 1 {
                "x1^2".to_string()
            } else {
                format!(" - x{i}^2/2")
            }
        })
        .collect();
    family.push(rs.pullback(&expr_field(&saddle, m)?)?);
    let mut equiv = Worst::default();
    let mut hyp_const = 0.0f64;
    let mut hyp_geo = f64::INFINITY;
    for f in &family {
        let q2 = qualify(&q.points, FLAG_TOL, &|b| geodesic_or_critical(rs, &**f, b))?;
        hyp_geo = hyp_geo.min(q2.best);
        for b in &q2.points {
            let pts = fibre_points(rs, b, 8);
            let v0 = f.value(&pts[0]);
            hyp_const = hyp_const.max(pts.iter().map(|p| (f.value(p) - v0).abs()).fold(0.0, f64::max));
            for p in pts.iter().take(4) {
                let d = kahler_psh_defect(k, &**f, p, &search_options(ctx, 256))?.defect;
                let l = min_eigenvalue(&hessian(&rs.total, &**f, p)?, &rs.total.at(p)?);
                equiv.update(mismatch(d, l, SIGN_TOL), p);
            }
        }
    }
    out.push(hyp(ctx, "constant_on_fibre", "P5.1", hyp_const, 1e-10));
    out.push(hyp(ctx, "totally_geodesic_or_critical", "P5.1", hyp_geo, FLAG_TOL));
    out.push(equiv.record(&format!("{}.part2", ctx.name), "P5.1", SIGN_TOL));
    Ok(out)
}

pub(super) fn p5_2(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let (rs, big_f, f) = invariant(s)?;
    let k = s.kahler()?;
    let pts = eval_points(s);
    let q = qualify(&pts, FLAG_TOL, &|b| {
        Ok(lagrangian_residual(rs, k, b)?.max(geodesic_or_critical(rs, &*f, b)?))
    })?;
    let mut out = vec![qualified_record(
        ctx,
        "lagrangian_and_geodesic_or_critical",
        "P5.2",
        &q,
        FLAG_TOL,
    )];
    let mut identity = Worst::default();
    let mut equiv = Worst::default();
    for b in &q.points {
        let hb = hessian(&rs.base, &**big_f, b)?;
        for x in base_frame(rs, b)? {
            let want = (x.transpose() * &hb * &x)[(0, 0)];
            for p in fibre_points(rs, b, 4) {
                let lift = rs.horizontal_lift(b, &x, &p)?;
                identity.update((levi_form(k, &*f, &p, &lift)? - want).abs(), &p);
            }
        }
        let d = fibre_min_levi(rs, k, &*f, b, ctx)?;
        let l = fd_min_hessian(rs, &**big_f, b)?;
        equiv.update(mismatch(d, l, FD_TOL), b);
    }
    out.push(identity.record(&format!("{}.levi_identity", ctx.name), "P5.2", FD_TOL));
    out.push(equiv.record(&format!("{}.part1", ctx.name), "P5.2", FD_TOL));

    let q2 = qualify(&pts, FLAG_TOL, &|b| Ok(fibre_flags(rs, b, 8)?.0))?;
    out.push(qualified_record(ctx, "minimal", "P5.2", &q2, FLAG_TOL));
    let mut part2 = Implication::default();
    for b in &q2.points {
        let psh = fibre_min_levi(rs, k, &*f, b, ctx)? >= -SIGN_TOL;
        part2.add(psh, laplacian(&rs.base, &**big_f, b)?, b);
    }
    out.push(part2.record(ctx, "part2", "P5.2", SIGN_TOL));
    Ok(out)
}

fn lattice(lo: &[f64], hi: &[f64], grid: usize) -> Vec<Vec<f64>> {
    let d = lo.len();
    (0..grid.pow(d as u32))
        .map(|mut idx| {
            let mut p = vec![0.0; d];
            for a in (0..d).rev() {
                let k = idx % grid;
                idx /= grid;
                p[a] = lo[a] + (hi[a] - lo[a]) * k as f64 / (grid - 1) as f64;
            }
            p
        })
        .collect()
}

fn gradient_norm(g: &MetricField, f: &dyn ScalarField, b: &[f64]) -> Result<f64> {
    let grad = crate::manifold::gradient(g, f, b)?;
    Ok(linalg::norm(&g.at(b)?, &grad))
}

/// Critical points of `F` on the sampling region: lattice minima of `|∇F|`
/// refined by Newton's method.
fn critical_points(s: &Scenario, big_f: &dyn ScalarField, grid: usize) -> Result<Vec<Vec<f64>>> {
    let rs = s.submersion()?;
    let (lo, hi) = &s.region;
    let d = lo.len();
    let grid = if d == 1 { grid.max(8) } else { grid.clamp(4, 12) };
    let nodes = lattice(lo, hi, grid);
    let norms: Vec<f64> = nodes
        .iter()
        .map(|b| gradient_norm(&rs.base, big_f, b))
        .collect::<Result<_>>()?;
    let index = |mut i: usize| {
        let mut c = vec![0usize; d];
        for a in (0..d).rev() {
            c[a] = i % grid;
            i /= grid;
        }
        c
    };
    let mut found: Vec<Vec<f64>> = Vec::new();
    for (i, b) in nodes.iter().enumerate() {
        let c = index(i);
        let mut is_min = true;
        for a in 0..d {
            for delta in [-1i64, 1] {
                let ca = c[a] as i64 + delta;
                if ca < 0 || ca >= grid as i64 {
                    continue;
                }
                let stride = grid.pow((d - 1 - a) as u32);
                let j = (i as i64 + delta * stride as i64) as usize;
                if norms[j] < norms[i] {
                    is_min = false;
                }
            }
        }
        if !is_min {
            continue;
        }
        let mut x = DVector::from_column_slice(b);
        for _ in 0..50 {
            let jet = big_f.jet(x.as_slice());
            let step = match jet.hessian().lu().solve(&jet.gradient()) {
                Some(v) => v,
                None => break,
            };
            x -= step;
            if !x.iter().all(|v| v.is_finite()) {
                break;
            }
            if gradient_norm(&rs.base, big_f, x.as_slice()).map_or(false, |g| g < 1e-12) {
                break;
            }
        }
        let inside = x.iter().enumerate().all(|(a, &v)| v >= lo[a] && v <= hi[a]);
        if !inside || gradient_norm(&rs.base, big_f, x.as_slice())? >= 1e-6 {
            continue;
        }
        if found
            .iter()
            .all(|p| p.iter().zip(x.iter()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max) > 1e-6)
        {
            found.push(x.as_slice().to_vec());
        }
    }
    Ok(found)
}

pub(super) fn c5_1(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let (rs, big_f, f) = invariant(s)?;
    let k = s.kahler()?;
    let pts = eval_points(s);
    let mut lag = 0.0f64;
    let mut strict = f64::INFINITY;
    for b in &pts {
        lag = lag.max(lagrangian_residual(rs, k, b)?);
        strict = strict.min(fibre_min_levi(rs, k, &*f, b, ctx)?);
    }
    let mut out = vec![
        hyp(ctx, "lagrangian", "C5.1", lag, FLAG_TOL),
        hyp(ctx, "strict_psh", "C5.1", (SIGN_TOL - strict).max(0.0), 0.0).with_witness(json!({ "min_levi": strict })),
    ];
    let crit = critical_points(s, &**big_f, ctx.grid)?;
    let mut worst = Worst::default();
    let mut listed = Vec::new();
    for b in &crit {
        let h = fd_hessian_rich(&|q| Ok(big_f.value(q)), &rs.base, b, FD_STEP)?;
        let l = min_eigenvalue(&h, &rs.base.at(b)?);
        worst.update((-l).max(0.0), b);
        listed.push(json!({ "point": b, "min_eigenvalue": l, "local_minimum": l > SIGN_TOL }));
    }
    out.push(
        rec(ctx, "local_minima", "C5.1", worst.value, SIGN_TOL)
            .with_witness(json!({ "critical_points": listed, "vacuous": crit.is_empty() })),
    );
    Ok(out)
}

pub(super) fn p5_4(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let (rs, big_f, f) = invariant(s)?;
    let g2 = s.g2()?;
    let pts = base_samples(s, 20);
    let mut coassoc = 0.0f64;
    let mut geo = 0.0f64;
    let mut equiv = Worst::default();
    let mut part2 = Implication::default();
    let opts = search_options(ctx, 512);
    let mut profile = Vec::new();
    for b in &pts {
        coassoc = coassoc.max(coassociative_fibre(s, b)?);
        geo = geo.max(geodesic_or_critical(rs, &*f, b)?);
        let mut d = f64::INFINITY;
        for p in fibre_points(rs, b, 2) {
            d = d.min(g2_psh_defect(g2, &*f, &p, &opts)?.defect);
        }
        let l = fd_min_hessian(rs, &**big_f, b)?;
        equiv.update(mismatch(d, l, FD_TOL), b);
        part2.add(d >= -SIGN_TOL, laplacian(&rs.base, &**big_f, b)?, b);
        profile.push(json!({ "b": b, "defect": d, "min_eigenvalue": l }));
    }
    Ok(vec![
        hyp(ctx, "coassociative", "P5.4", coassoc, FLAG_TOL),
        hyp(ctx, "totally_geodesic_or_critical", "P5.4", geo, FLAG_TOL),
        rec(ctx, "part1", "P5.4", equiv.value, FD_TOL).with_witness(json!({ "at": equiv.at, "samples": profile })),
        part2.record(ctx, "part2", "P5.4", SIGN_TOL),
    ])
}

pub(super) fn c6_1(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    let grid = ctx.variation_grid(rs);
    let mut out = Vec::new();
    let mut cases = Vec::new();
    for b in &s.probes {
        for x in base_frame(rs, b)? {
            cases.push(FibreVariation::new(rs.clone(), b.clone(), x)?);
        }
    }
    let (mut sect, mut ric, mut ii, mut h) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0f64, 0.0f64);
    for b in &s.probes {
        sect = sect.max(max_sectional(rs, b)?);
        ric = ric.max(max_ricci(rs, b)?);
        let (hb, iib) = fibre_flags(rs, b, 8)?;
        h = h.max(hb);
        ii = ii.max(iib);
    }
    let conclusion = |what: &str, values: &[f64]| {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        rec(ctx, what, "C6.1", (-min).max(0.0), SIGN_TOL).with_witness(json!({ "second_variation": values }))
    };

    out.push(hyp(ctx, "part1.nonpositive_curvature", "C6.1", sect.max(0.0), 1e-10));
    out.push(hyp(ctx, "part1.totally_geodesic", "C6.1", ii, FLAG_TOL));
    let v: Vec<f64> = cases
        .iter()
        .map(|c| Ok(second_variation_riemannian_with(c, grid, None)?.second_analytic))
        .collect::<Result<_>>()?;
    out.push(conclusion("part1", &v));

    if let Some(k) = &s.kahler {
        let mut lag = 0.0f64;
        for b in &s.probes {
            lag = lag.max(lagrangian_residual(rs, k, b)?);
        }
        out.push(hyp(ctx, "part2.nonpositive_ricci", "C6.1", ric.max(0.0), 1e-10));
        out.push(hyp(ctx, "part2.minimal", "C6.1", h, FLAG_TOL));
        out.push(hyp(ctx, "part2.lagrangian", "C6.1", lag, FLAG_TOL));
        if lag <= FLAG_TOL && h <= FLAG_TOL {
            let v: Vec<f64> = cases
                .iter()
                .map(|c| Ok(second_variation_kahler_with(c, k, grid, None)?.second_analytic))
                .collect::<Result<_>>()?;
            out.push(conclusion("part2", &v));
        }
    }
    if let Some(g2) = &s.g2 {
        let mut co = 0.0f64;
        for b in &s.probes {
            co = co.max(coassociative_fibre(s, b)?);
        }
        out.push(hyp(ctx, "part3.nonpositive_ricci", "C6.1", ric.max(0.0), 1e-10));
        out.push(hyp(ctx, "part3.coassociative", "C6.1", co, FLAG_TOL));
        out.push(hyp(ctx, "part3.totally_geodesic", "C6.1", ii, FLAG_TOL));
        if co <= FLAG_TOL {
            let v: Vec<f64> = cases
                .iter()
                .map(|c| Ok(second_variation_g2_with(c, g2, grid, None)?.second_analytic))
                .collect::<Result<_>>()?;
            out.push(conclusion("part3", &v));
        }
    }
    Ok(out)
}

/// `Σ_a |(∇_{e_a} X̃)^⊥|²` over an orthonormal fibre frame, with the lift
/// differentiated along the fibre by central differences.
fn lift_normal_derivative(rs: &RiemannianSubmersion, b: &[f64], x: &DVector<f64>, y: &[f64]) -> Result<f64> {
    const H: f64 = 1e-5;
    let geo = fibre_geometry(rs, b, y)?.geometry;
    let p = geo.point.as_slice().to_vec();
    let lift = rs.horizontal_lift(b, x, &p)?;
    let gamma = christoffel(&rs.total, &p)?;
    let k = geo.k();
    let mut normals = Vec::with_capacity(k);
    for a in 0..k {
        let shifted = |s: f64| {
            let mut ys = y.to_vec();
            ys[a] += s;
            rs.horizontal_lift(b, x, &rs.fibre_point(b, &ys))
        };
        let d = (shifted(H)? - shifted(-H)?) / (2.0 * H);
        let nabla = d + gamma.contract(&geo.tangent.column(a).into_owned(), &lift);
        normals.push(geo.normal(&nabla));
    }
    let mut sum = 0.0;
    for a in 0..k {
        for c in 0..k {
            sum += geo.induced_inverse[(a, c)] * linalg::inner(&geo.metric, &normals[a], &normals[c]);
        }
    }
    Ok(sum)
}

fn fibre_nonnegative(rs: &RiemannianSubmersion, f: &dyn ScalarField, b: &[f64], grid: usize) -> Result<f64> {
    let mut min = f64::INFINITY;
    for y in crate::submersion::fibre_grid(rs, &[grid])? {
        min = min.min(f.value(&rs.fibre_point(b, &y)));
    }
    Ok(min)
}

/// Fibre-integral pushdown with its Hessian along each base direction and
/// its Laplacian.
struct IntegralPushdown {
    hess: Vec<f64>,
    laplacian: f64,
}

fn integral_pushdown(rs: &RiemannianSubmersion, f: &Field, b: &[f64], grid: usize) -> Result<IntegralPushdown> {
    let big_f = |q: &[f64]| fibre_integral(rs, &**f, q, &[grid]);
    let hess: Vec<f64> = base_frame(rs, b)?
        .iter()
        .map(|x| along_geodesic(&big_f, &rs.base, b, x))
        .collect::<Result<_>>()?;
    let laplacian = hess.iter().sum();
    Ok(IntegralPushdown { hess, laplacian })
}

/// Pointwise convexity and subharmonicity of `f` on the fibre grid.
fn fibre_signs(rs: &RiemannianSubmersion, f: &dyn ScalarField, b: &[f64], count: usize) -> Result<(bool, bool)> {
    Ok((
        fibre_min_hessian(rs, f, b, count)? >= -SIGN_TOL,
        fibre_min_laplacian(rs, f, b, count)? >= -SIGN_TOL,
    ))
}

pub(super) fn p7_1(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    let f = s.function.clone();
    let grid = ctx.fibre_grid(rs);
    let mut out = Vec::new();
    let mut part1_hyp = Worst::default();
    let mut identity1 = Worst::default();
    let mut identity2 = Worst::default();
    let mut identity3 = Worst::default();
    let mut c1 = Implication::default();
    let mut s1 = Implication::default();
    let mut c2 = Implication::default();
    let mut s3 = Implication::default();

    // constant volume and minimality are global; sample the region
    let one = crate::field::constant(1.0, rs.total_dim());
    let samples = eval_points(s);
    let vols: Vec<f64> = samples
        .iter()
        .map(|b| fibre_integral(rs, &*one, b, &[grid]))
        .collect::<Result<_>>()?;
    let v0 = vols[0];
    let vol_spread = vols.iter().map(|v| (v - v0).abs() / v0.abs()).fold(0.0, f64::max);
    let mut minimal = 0.0f64;
    for b in &samples {
        minimal = minimal.max(fibre_flags(rs, b, 8)?.0);
    }

    for b in &s.probes {
        let push = integral_pushdown(rs, &f, b, grid)?;
        let hess_min = push.hess.iter().copied().fold(f64::INFINITY, f64::min);
        let (convex, sub) = fibre_signs(rs, &*f, b, 16)?;
        let sect = max_sectional(rs, b)?;
        let (_, ii) = fibre_flags(rs, b, 8)?;
        let nonneg = fibre_nonnegative(rs, &*f, b, grid)?;
        let h1 = sect.max(0.0).max(ii).max((-nonneg).max(0.0));
        part1_hyp.update(h1, b);
        if h1 <= FLAG_TOL {
            for (x, hb) in base_frame(rs, b)?.iter().zip(&push.hess) {
                let integrand = |y: &[f64], p: &[f64]| -> Result<f64> {
                    let lift = rs.horizontal_lift(b, x, p)?;
                    let hm = hessian(&rs.total, &*f, p)?;
                    let c = curvature(&rs.total, p)?;
                    let geo = fibre_geometry(rs, b, y)?.geometry;
                    let curv: f64 = geo
                        .tangent_frame()
                        .iter()
                        .map(|e| linalg::inner(&geo.metric, &c.apply(e, &lift, &lift), e))
                        .sum();
                    let normal = lift_normal_derivative(rs, b, x, y)?;
                    Ok((lift.transpose() * hm * &lift)[(0, 0)] + f.value(p) * (normal - curv))
                };
                let want = fibre_quadrature(rs, b, &[grid], &integrand)?;
                identity1.update((hb - want).abs(), b);
            }
            c1.add(convex, hess_min, b);
            s1.add(sub, push.laplacian, b);
        }
        if vol_spread <= 1e-8 {
            for (x, hb) in base_frame(rs, b)?.iter().zip(&push.hess) {
                let want = fibre_quadrature(rs, b, &[grid], &|_, p| {
                    let lift = rs.horizontal_lift(b, x, p)?;
                    Ok((lift.transpose() * hessian(&rs.total, &*f, p)? * &lift)[(0, 0)])
                })?;
                identity2.update((hb - want).abs(), b);
            }
            c2.add(convex, hess_min, b);
        }
        if minimal <= FLAG_TOL {
            let want = fibre_quadrature(rs, b, &[grid], &|_, p| laplacian(&rs.total, &*f, p))?;
            identity3.update((push.laplacian - want).abs(), b);
            s3.add(sub, push.laplacian, b);
        }
    }
    out.push(hyp(ctx, "part1", "P7.1", part1_hyp.value, FLAG_TOL).with_witness(json!({ "at": part1_hyp.at })));
    if part1_hyp.value <= FLAG_TOL {
        out.push(identity1.record(&format!("{}.part1.identity", ctx.name), "P7.1", FD_TOL));
        out.push(c1.record(ctx, "part1.convex", "P7.1", FD_TOL));
        out.push(s1.record(ctx, "part1.subharmonic", "P7.1", FD_TOL));
    }
    out.push(hyp(ctx, "part2.constant_volume", "P7.1", vol_spread, 1e-8));
    if vol_spread <= 1e-8 {
        out.push(identity2.record(&format!("{}.part2.identity", ctx.name), "P7.1", FD_TOL));
        out.push(c2.record(ctx, "part2.convex", "P7.1", FD_TOL));
    }
    out.push(hyp(ctx, "part3.minimal", "P7.1", minimal, FLAG_TOL));
    if minimal <= FLAG_TOL {
        out.push(identity3.record(&format!("{}.part3.identity", ctx.name), "P7.1", FD_TOL));
        out.push(s3.record(ctx, "part3.subharmonic", "P7.1", FD_TOL));
    }
    Ok(out)
}

pub(super) fn p7_2(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    let k = s.kahler()?;
    let f = s.function.clone();
    let grid = ctx.fibre_grid(rs);
    let (mut ric, mut h, mut lag, mut neg) = (f64::NEG_INFINITY, 0.0f64, 0.0f64, 0.0f64);
    let mut convex = Implication::default();
    let mut sub = Implication::default();
    for b in &s.probes {
        ric = ric.max(max_ricci(rs, b)?);
        h = h.max(fibre_flags(rs, b, 8)?.0);
        lag = lag.max(lagrangian_residual(rs, k, b)?);
        neg = neg.max((-fibre_nonnegative(rs, &*f, b, grid)?).max(0.0));
    }
    let mut out = vec![
        hyp(ctx, "nonpositive_ricci", "P7.2", ric.max(0.0), 1e-10),
        hyp(ctx, "minimal", "P7.2", h, FLAG_TOL),
        hyp(ctx, "lagrangian", "P7.2", lag, FLAG_TOL),
        hyp(ctx, "nonnegative", "P7.2", neg, 0.0),
    ];
    if out.iter().all(|r| r.pass) {
        for b in &s.probes {
            let push = integral_pushdown(rs, &f, b, grid)?;
            let (c, sh) = fibre_signs(rs, &*f, b, 16)?;
            convex.add(c, push.hess.iter().copied().fold(f64::INFINITY, f64::min), b);
            sub.add(sh, push.laplacian, b);
        }
        out.push(convex.record(ctx, "convex", "P7.2", FD_TOL));
        out.push(sub.record(ctx, "subharmonic", "P7.2", FD_TOL));
    }
    Ok(out)
}

pub(super) fn p7_3(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    s.g2()?;
    let f = s.function.clone();
    let grid = ctx.fibre_grid(rs);
    let (mut ric, mut ii, mut co, mut neg) = (f64::NEG_INFINITY, 0.0f64, 0.0f64, 0.0f64);
    for b in &s.probes {
        ric = ric.max(max_ricci(rs, b)?);
        ii = ii.max(fibre_flags(rs, b, 8)?.1);
        co = co.max(coassociative_fibre(s, b)?);
        neg = neg.max((-fibre_nonnegative(rs, &*f, b, grid)?).max(0.0));
    }
    let mut out = vec![
        hyp(ctx, "nonpositive_ricci", "P7.3", ric.max(0.0), 1e-10),
        hyp(ctx, "totally_geodesic", "P7.3", ii, FLAG_TOL),
        hyp(ctx, "coassociative", "P7.3", co, FLAG_TOL),
        hyp(ctx, "nonnegative", "P7.3", neg, 0.0),
    ];
    if !out.iter().all(|r| r.pass) {
        return Ok(out);
    }
    let mut identity = Worst::default();
    let mut convex = Implication::default();
    let mut sub = Implication::default();
    let mut constant_everywhere = true;
    for b in &s.probes {
        let pts = fibre_points(rs, b, 16);
        let v0 = f.value(&pts[0]);
        let constant = pts.iter().all(|p| (f.value(p) - v0).abs() <= 1e-12);
        constant_everywhere &= constant;
        let push = integral_pushdown(rs, &f, b, grid)?;
        if constant {
            for (x, hb) in base_frame(rs, b)?.iter().zip(&push.hess) {
                let want = fibre_quadrature(rs, b, &[grid], &|_, p| {
                    let lift = rs.horizontal_lift(b, x, p)?;
                    let hm = hessian(&rs.total, &*f, p)?;
                    let ric = curvature(&rs.total, p)?.ricci;
                    Ok((lift.transpose() * (hm - ric * v0) * &lift)[(0, 0)])
                })?;
                identity.update((hb - want).abs(), b);
            }
        }
        let (c, sh) = fibre_signs(rs, &*f, b, 16)?;
        convex.add(c, push.hess.iter().copied().fold(f64::INFINITY, f64::min), b);
        sub.add(sh && constant, push.laplacian, b);
    }
    if constant_everywhere {
        out.push(identity.record(&format!("{}.identity", ctx.name), "P7.3", FD_TOL));
    }
    out.push(convex.record(ctx, "convex", "P7.3", FD_TOL));
    out.push(sub.record(ctx, "subharmonic", "P7.3", FD_TOL));
    Ok(out)
}

pub(super) fn p7_4(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    if !rs.orbit_chart {
        return Err(Error::NotOrbitChart);
    }
    let f = s.function.clone();
    let n = ctx.fibre_grid(rs);
    let mut rng = ctx.rng();

    // f convex (PSH) on M, tested on the probe fibres and random points
    let mut pts: Vec<Vec<f64>> = s.probes.iter().flat_map(|b| fibre_points(rs, b, 8)).collect();
    pts.extend((0..32).map(|_| total_sample(s, &mut rng)));
    let mut convex_min = f64::INFINITY;
    let mut psh_min = f64::INFINITY;
    for p in &pts {
        convex_min = convex_min.min(min_eigenvalue(&hessian(&rs.total, &*f, p)?, &rs.total.at(p)?));
        if let Some(k) = &s.kahler {
            psh_min = psh_min.min(kahler_psh_defect(k, &*f, p, &search_options(ctx, 256))?.defect);
        }
    }
    let g2_min = match &s.g2 {
        Some(g2) => {
            let mut m = f64::INFINITY;
            for p in &pts {
                m = m.min(g2_psh_defect(g2, &*f, p, &search_options(ctx, 256))?.defect);
            }
            Some(m)
        }
        None => None,
    };

    let pulled = |p: &[f64]| haar_pushdown(rs, &*f, &rs.project(p), &[n]);
    let mut part1 = Implication::default();
    let mut part2 = Implication::default();
    let mut part3 = Implication::default();
    let mut invariance = Worst::default();
    let big_f = s.base_function()?;
    let reproduced = rs.pullback(big_f)?;
    for b in &s.probes {
        for p in fibre_points(rs, b, 2) {
            let h = fd_hessian_rich(&pulled, &rs.total, &p, FD_STEP)?;
            part1.add(convex_min >= -SIGN_TOL, min_eigenvalue(&h, &rs.total.at(&p)?), &p);
            if let Some(k) = &s.kahler {
                let d = levi_minimum(k, &h, &p, &search_options(ctx, 256))?.defect;
                part2.add(psh_min >= -SIGN_TOL, d, &p);
            }
            if let (Some(g2), Some(m)) = (&s.g2, g2_min) {
                let d = associative_minimum(g2, &h, &p, &search_options(ctx, 256))?.defect;
                part3.add(m >= -SIGN_TOL, d, &p);
            }
        }
        let h = haar_pushdown(rs, &*reproduced, b, &[n])?;
        invariance.update((h - big_f.value(b)).abs() / big_f.value(b).abs().max(1.0), b);
    }
    let mut out = vec![
        part1.record(ctx, "haar.part1", "P7.4", FD_TOL),
        invariance.record(&format!("{}.haar.invariance", ctx.name), "P7.4", 1e-10),
    ];
    if s.kahler.is_some() {
        out.push(part2.record(ctx, "haar.part2", "P7.4", FD_TOL));
    }
    if s.g2.is_some() {
        out.push(part3.record(ctx, "haar.part3", "P7.4", FD_TOL));
    }

    // supremum pushdown: convexity of π*F restricts to convexity of F on
    // the base, tested by midpoints on the sampling region
    let sup = |b: &[f64]| fibre_supremum(rs, &*f, b, &[n], 60);
    let grid = if rs.base_dim() == 1 {
        ctx.grid
    } else {
        ctx.grid.clamp(4, 8)
    };
    let r = base_convexity_check(
        &sup,
        &rs.base,
        &s.region.0,
        &s.region.1,
        grid,
        ConvexityMode::Midpoint,
        FD_TOL,
    )?;
    let antecedent = convex_min >= -SIGN_TOL;
    let residual = if antecedent { (-r.margin).max(0.0) } else { 0.0 };
    out.push(rec(ctx, "sup.part1", "P7.4", residual, FD_TOL).with_witness(json!({
        "vacuous": !antecedent,
        "margin": r.margin,
        "at": r.witness,
    })));
    out.push(rec(ctx, "inputs", "P7.4", 0.0, 0.0).with_witness(json!({
        "min_hessian": convex_min,
        "min_levi": if psh_min.is_finite() { Value::from(psh_min) } else { Value::Null },
    })));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use crate::scenarios::{run_scenario, Outcome, Report, ScenarioConfig};

    fn run(id: &str, checks: &[&str]) -> Report {
        run_scenario(&ScenarioConfig::for_scenario(id).with_checks(checks)).unwrap()
    }

    #[test]
    fn cylinder_pluripotential_checks() {
        let r = run("cylinder", &["P3.1", "T3.1", "P5.2", "C5.1"]);
        assert_eq!(r.outcome(), Outcome::Pass, "{}", r.to_json());
        let w = r.record("C5.1.local_minima").unwrap().witness.clone().unwrap();
        let pts = w["critical_points"].as_array().unwrap();
        assert_eq!(pts.len(), 1);
        assert!(pts[0]["point"][0].as_f64().unwrap().abs() < 1e-8);
        assert!((pts[0]["min_eigenvalue"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn flat_cn_lagrangian_checks() {
        let r = run("flat_cn", &["P5.1", "P5.2", "C5.1"]);
        assert_eq!(r.outcome(), Outcome::Pass, "{}", r.to_json());
    }

    #[test]
    fn torus_integral_checks() {
        let r = run("flat_t2", &["P7.1", "P7.2", "C6.1"]);
        assert_eq!(r.outcome(), Outcome::Pass, "{}", r.to_json());
    }

    #[test]
    fn haar_and_sup_pushdowns() {
        let r = run("cylinder", &["P7.4"]);
        assert_eq!(r.outcome(), Outcome::Pass, "{}", r.to_json());
        assert_eq!(
            r.record("P7.4.haar.part1").unwrap().witness.as_ref().unwrap()["vacuous"],
            false
        );
    }
}
