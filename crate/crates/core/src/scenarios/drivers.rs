use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde_json::{json, Value};

use super::{CheckContext, CheckRecord, Scenario};
use crate::calibration::{
    coassociative_residual, kahler_psh_defect, levi_form, levi_form_coordinate, p_plane_psh_defect, Plane,
    SearchOptions,
};
use crate::error::{Error, Result};
use crate::field::{expr_field, Field};
use crate::linalg;
use crate::manifold::{hessian, laplacian, restricted_laplacian, submanifold_geometry, Domain, MetricField};
use crate::sampling::{gaussian_vector, CheckRng, Kronecker};
use crate::submersion::{
    base_convexity_check, fibre_geometry, fibre_integral, fibre_samples, fibre_supremum, haar_pushdown,
    hessian_transfer_residual, horizontal_geodesic_check, oneill_residual, ConvexityMode, RiemannianSubmersion,
};
use crate::variation::{
    first_variation, second_variation_g2, second_variation_kahler, second_variation_riemannian, volume_profile_fd,
    FibreVariation, VariationReport,
};

/// Evenly spaced midpoints in one dimension, a Kronecker sequence otherwise.
pub(super) fn base_samples(s: &Scenario, count: usize) -> Vec<Vec<f64>> {
    let (lo, hi) = &s.region;
    if lo.len() == 1 {
        return (0..count)
            .map(|k| vec![lo[0] + (k as f64 + 0.5) / count as f64 * (hi[0] - lo[0])])
            .collect();
    }
    let seq = Kronecker::new(lo.len(), 0);
    (0..count)
        .map(|k| {
            seq.point(k)
                .iter()
                .enumerate()
                .map(|(a, u)| lo[a] + u * (hi[a] - lo[a]))
                .collect()
        })
        .collect()
}

/// Orthonormal base frame at `b`.
pub(super) fn base_frame(rs: &RiemannianSubmersion, b: &[f64]) -> Result<Vec<DVector<f64>>> {
    Ok(linalg::coordinate_frame(&rs.base.at(b)?))
}

fn uniform_in(rng: &mut CheckRng, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    lo.iter()
        .zip(hi)
        .map(|(&l, &u)| {
            let (l, u) = if l.is_finite() && u.is_finite() {
                (l, u)
            } else {
                (-1.0, 1.0)
            };
            l + rng.random::<f64>() * (u - l)
        })
        .collect()
}

/// A random point of the total space above the sampling region, or in the
/// region itself when the scenario has no submersion.
pub(super) fn total_sample(s: &Scenario, rng: &mut CheckRng) -> Vec<f64> {
    match &s.submersion {
        Some(rs) => {
            let b = uniform_in(rng, &s.region.0, &s.region.1);
            let y = uniform_in(rng, &rs.fibre_domain.lower, &rs.fibre_domain.upper);
            rs.fibre_point(&b, &y)
        }
        None => uniform_in(rng, &s.region.0, &s.region.1),
    }
}

/// Records `name` for one case, `name.i` for several.
pub(super) fn indexed(name: &str, i: usize, count: usize) -> String {
    if count == 1 {
        name.to_string()
    } else {
        format!("{name}.{i}")
    }
}

/// Largest value with its location.
#[derive(Debug, Clone, Default)]
pub(super) struct Worst {
    pub value: f64,
    pub at: Vec<f64>,
}

impl Worst {
    pub fn update(&mut self, value: f64, at: &[f64]) {
        if self.at.is_empty() || value > self.value || (value.is_nan() && !self.value.is_nan()) {
            self.value = value;
            self.at = at.to_vec();
        }
    }

    pub fn record(&self, name: &str, tag: &str, tol: f64) -> CheckRecord {
        CheckRecord::new(name, tag, self.value, tol).with_witness(json!({ "at": self.at }))
    }
}

pub(super) fn projection_section(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    let ys = fibre_samples(&rs.fibre_domain, 32);
    let mut worst = Worst::default();
    for b in base_samples(s, 20) {
        worst.update(rs.section_residual(&b, &ys), &b);
    }
    Ok(vec![worst.record(&ctx.name, "submersion", 1e-10)])
}

pub(super) fn lift_isometry(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    let mut rng = ctx.rng();
    let mut worst = Worst::default();
    for _ in 0..100 {
        let b = uniform_in(&mut rng, &s.region.0, &s.region.1);
        let y = uniform_in(&mut rng, &rs.fibre_domain.lower, &rs.fibre_domain.upper);
        let p = rs.fibre_point(&b, &y);
        let x = gaussian_vector(&mut rng, rs.base_dim());
        let w = rs.horizontal_lift(&b, &x, &p)?;
        let scale = linalg::norm(&rs.base.at(&b)?, &x);
        let iso = rs.isometry_residual(&b, &x, &p)? / scale;
        let push = (rs.differential(&p) * &w - &x).amax() / x.amax();
        worst.update(iso.max(push), &p);
    }
    Ok(vec![worst.record(&ctx.name, "submersion", 1e-8)])
}

pub(super) fn split(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    let mut rng = ctx.rng();
    let mut worst = Worst::default();
    for _ in 0..100 {
        let p = total_sample(s, &mut rng);
        let v = gaussian_vector(&mut rng, rs.total_dim());
        let (vert, hor) = rs.split(&p, &v)?;
        let g = rs.total.at(&p)?;
        let vv = linalg::inner(&g, &v, &v);
        let kernel = (rs.differential(&p) * &vert).amax() / v.amax();
        let orth = linalg::inner(&g, &vert, &hor).abs() / vv;
        worst.update(kernel.max(orth), &p);
    }
    Ok(vec![worst.record(&ctx.name, "submersion", 1e-10)])
}

pub(super) fn fibre_mean_curvature(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    let oracle = s
        .mean_curvature
        .as_ref()
        .ok_or_else(|| Error::Precondition("no closed-form mean curvature for this scenario".into()))?;
    let mut worst = Worst::default();
    let mut values = Vec::new();
    for b in base_samples(s, 10) {
        let want = oracle.value(&b);
        for y in fibre_samples(&rs.fibre_domain, 4) {
            let got = fibre_geometry(rs, &b, &y)?.geometry.mean_curvature_norm();
            worst.update((got - want).abs(), &b);
        }
        values.push(json!({ "b": b, "mean_curvature": want }));
    }
    Ok(vec![CheckRecord::new(&ctx.name, "submersion", worst.value, 1e-8)
        .with_witness(json!({ "at": worst.at, "profile": values }))])
}

pub(super) fn hessian_transfer(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    let f = s.base_function()?;
    let mut worst = Worst::default();
    for b in base_samples(s, 20) {
        for x in base_frame(rs, &b)? {
            worst.update(hessian_transfer_residual(rs, f, &b, &x, 32)?, &b);
        }
    }
    Ok(vec![worst.record(&ctx.name, "P2.2", 1e-6)])
}

/// `Δ_Σ f = tr_TΣ Hess_M f + df(H)` on fibres.
pub(super) fn restricted_laplacian_check(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    let f = &s.function;
    let mut worst = Worst::default();
    for b in &s.probes {
        let fibre = rs.fibre(b);
        for y in fibre_samples(&rs.fibre_domain, 8) {
            let (intrinsic, ambient) = restricted_laplacian(&fibre, &**f, &y)?;
            let geo = submanifold_geometry(&fibre, &y)?;
            let df = DVector::from_vec(f.dual(geo.point.as_slice()).grad);
            let dfh = df.dot(&geo.mean_curvature);
            worst.update((intrinsic - ambient - dfh).abs(), geo.point.as_slice());
        }
    }
    Ok(vec![worst.record(&ctx.name, "P2.1", 1e-6)])
}

pub(super) fn oneill(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    let mut worst = Worst::default();
    for b in base_samples(s, 10) {
        for y in fibre_samples(&rs.fibre_domain, 4) {
            let p = rs.fibre_point(&b, &y);
            worst.update(oneill_residual(rs, &p, 1e-4)?, &p);
        }
    }
    Ok(vec![worst.record(&ctx.name, "L2.1", 1e-6)])
}

pub(super) fn horizontal_geodesic(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    let mut worst = Worst::default();
    let width = s
        .region
        .0
        .iter()
        .zip(&s.region.1)
        .map(|(l, u)| u - l)
        .fold(f64::INFINITY, f64::min);
    let time = (0.25 * width).min(0.5);
    for b in &s.probes {
        let y = fibre_samples(&rs.fibre_domain, 1).remove(0);
        let p = rs.fibre_point(b, &y);
        for x in base_frame(rs, b)? {
            let r = horizontal_geodesic_check(rs, &p, &x, time, 400)?;
            worst.update(r.max_vertical.max(r.max_projection_error), b);
        }
    }
    Ok(vec![worst.record(&ctx.name, "L2.1", 1e-6)])
}

/// Spectral convergence of the periodic trapezoidal rule: the integral at
/// the working grid against a finer grid.
pub(super) fn fibre_integral_convergence(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    let n = ctx.fibre_grid(rs);
    let fine = if rs.fibre_dim() <= 2 { 2 * n } else { n + 8 };
    let mut worst = Worst::default();
    let mut values = Vec::new();
    for b in &s.probes {
        let coarse = fibre_integral(rs, &*s.function, b, &[n])?;
        let exact = fibre_integral(rs, &*s.function, b, &[fine])?;
        worst.update((exact - coarse).abs() / exact.abs().max(1.0), b);
        values.push(json!({ "b": b, "integral": exact }));
    }
    Ok(vec![CheckRecord::new(&ctx.name, "quadrature", worst.value, 1e-10)
        .with_witness(json!({ "at": worst.at, "integrals": values }))])
}

/// Haar averaging reproduces invariant functions, and on isometric orbits it
/// is the fibre integral divided by the orbit volume.
pub(super) fn haar(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    let n = ctx.fibre_grid(rs);
    let big_f = s.base_function()?;
    let pulled = rs.pullback(big_f)?;
    let one = crate::field::constant(1.0, rs.total_dim());
    let mut reproduce = Worst::default();
    let mut normalized = Worst::default();
    for b in &s.probes {
        let h = haar_pushdown(rs, &*pulled, b, &[n])?;
        reproduce.update((h - big_f.value(b)).abs() / big_f.value(b).abs().max(1.0), b);
        let mean = haar_pushdown(rs, &*s.function, b, &[n])?;
        let ratio = fibre_integral(rs, &*s.function, b, &[n])? / fibre_integral(rs, &*one, b, &[n])?;
        normalized.update((mean - ratio).abs() / ratio.abs().max(1.0), b);
    }
    Ok(vec![
        reproduce.record(&format!("{}.reproduces_invariant", ctx.name), "P7.4", 1e-10),
        normalized.record(&format!("{}.normalized_integral", ctx.name), "quadrature", 1e-10),
    ])
}

/// The radius function on the polar plane: vertical Hessian `1/r` against a
/// vanishing base Hessian.
pub(super) fn radius_example(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    if s.id != "polar" {
        return Err(Error::Precondition(
            "the radius example lives on the polar scenario".into(),
        ));
    }
    let rs = s.submersion()?;
    let r_total = expr_field("r", 2)?;
    let r_base = expr_field("x", 1)?;
    let mut vertical = Worst::default();
    let mut base = Worst::default();
    let mut profile = Vec::new();
    for b in base_samples(s, 8) {
        let p = [b[0], 0.3];
        let v = DVector::from_vec(vec![0.0, 1.0 / b[0]]);
        let hm = hessian(&rs.total, &*r_total, &p)?;
        let hv = (v.transpose() * &hm * &v)[(0, 0)];
        vertical.update((hv - 1.0 / b[0]).abs(), &b);
        let hb = hessian(&rs.base, &*r_base, &b)?[(0, 0)];
        base.update(hb.abs(), &b);
        profile.push(json!({ "r": b[0], "vertical_hessian": hv, "base_hessian": hb }));
    }
    Ok(vec![
        CheckRecord::new(
            format!("{}.vertical_hessian", ctx.name),
            "radius_example",
            vertical.value,
            1e-10,
        )
        .with_witness(json!({ "profile": profile })),
        base.record(&format!("{}.base_hessian", ctx.name), "radius_example", 1e-12),
    ])
}

/// Variations along every orthonormal base direction at every probe.
fn variations(s: &Scenario) -> Result<Vec<FibreVariation>> {
    let rs = s.submersion()?;
    let mut out = Vec::new();
    for b in &s.probes {
        for x in base_frame(rs, b)? {
            out.push(FibreVariation::new(rs.clone(), b.clone(), x)?);
        }
    }
    Ok(out)
}

fn variation_witness(v: &FibreVariation, r: &VariationReport) -> Value {
    json!({
        "b": v.base_point,
        "direction": v.direction.as_slice(),
        "first": r.first,
        "total": r.second_analytic,
        "fd": r.second_fd,
        "fd_richardson": r.fd_richardson,
        "terms": r.terms,
    })
}

pub(super) fn first_variation_check(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    let grid = ctx.variation_grid(rs);
    let vs = variations(s)?;
    let mut out = Vec::new();
    for (i, v) in vs.iter().enumerate() {
        let a = first_variation(v, grid)?;
        let (fd, _) = volume_profile_fd(v, 1e-3, grid)?;
        out.push(
            CheckRecord::new(indexed(&ctx.name, i, vs.len()), "first_variation", (a - fd).abs(), 1e-6)
                .with_witness(json!({ "b": v.base_point, "first": a, "fd": fd })),
        );
    }
    Ok(out)
}

fn second_variation_records(
    s: &Scenario,
    ctx: &CheckContext,
    tag: &str,
    run: &dyn Fn(&FibreVariation, usize) -> Result<VariationReport>,
) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    let grid = ctx.variation_grid(rs);
    let vs = variations(s)?;
    let mut out = Vec::new();
    for (i, v) in vs.iter().enumerate() {
        let r = run(v, grid)?;
        out.push(
            CheckRecord::new(
                indexed(&ctx.name, i, vs.len()),
                tag,
                r.agreement(),
                r.default_tolerance(),
            )
            .with_witness(variation_witness(v, &r)),
        );
        if let Some(exact) = r.terms.get("exact") {
            out.push(
                CheckRecord::new(
                    indexed(&format!("{}.exact_term", ctx.name), i, vs.len()),
                    tag,
                    exact.abs(),
                    1e-8,
                )
                .with_witness(json!({ "b": v.base_point, "exact": exact })),
            );
        }
    }
    Ok(out)
}

pub(super) fn second_variation_check(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    second_variation_records(s, ctx, "second_variation", &|v, g| second_variation_riemannian(v, g))
}

pub(super) fn kahler_variation_check(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let k = s.kahler()?;
    second_variation_records(s, ctx, "kahler_variation", &|v, g| second_variation_kahler(v, k, g))
}

pub(super) fn g2_variation_check(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let g2 = s.g2()?;
    second_variation_records(s, ctx, "g2_variation", &|v, g| second_variation_g2(v, g2, g))
}

pub(super) fn fibre_plane(rs: &RiemannianSubmersion, b: &[f64], y: &[f64]) -> Result<Plane> {
    let geo = fibre_geometry(rs, b, y)?.geometry;
    let cols: Vec<DVector<f64>> = (0..geo.k()).map(|a| geo.tangent.column(a).into_owned()).collect();
    Plane::from_span(geo.point.as_slice().to_vec(), &cols, &geo.metric)
}

pub(super) fn coassociative_fibres(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    let g2 = s.g2()?;
    let mut worst = Worst::default();
    for b in base_samples(s, 10) {
        for y in fibre_samples(&rs.fibre_domain, 4) {
            worst.update(coassociative_residual(&fibre_plane(rs, &b, &y)?, g2)?, &b);
        }
    }
    Ok(vec![worst.record(&ctx.name, "coassociative", 1e-8)])
}

/// Test functions for the circle-means check, written in the Cartesian
/// coordinates of `ℂ ∖ 0`.
pub const HADAMARD_FUNCTIONS: [(&str, &str); 5] = [
    ("re_z", "x"),
    ("re_z2", "x^2 - y^2"),
    ("log_abs_z", "log(x^2 + y^2)/2"),
    ("abs_z2", "x^2 + y^2"),
    ("neg_re_z", "-x"),
];

const HADAMARD_TOL: f64 = 1e-8;

/// Circle suprema and circle integrals of a subharmonic `f` on an annulus,
/// tested for midpoint convexity in `t = log|z|`.
///
/// `rs` must map `ℂ ∖ 0` (Cartesian chart) onto a flat `t`-line with circle
/// fibres, as the cylinder scenario does.
pub fn hadamard_check(
    rs: &RiemannianSubmersion,
    label: &str,
    f: &Field,
    t_range: (f64, f64),
    grid: usize,
    fibre_grid: usize,
) -> Result<Vec<CheckRecord>> {
    if rs.base_dim() != 1 || rs.fibre_dim() != 1 || rs.total_dim() != 2 {
        return Err(Error::Precondition(
            "needs a circle fibration of a planar domain".into(),
        ));
    }
    let (lo, hi) = t_range;
    let mut min_lap = f64::INFINITY;
    let mut at = Vec::new();
    for k in 0..16 {
        let t = lo + (hi - lo) * k as f64 / 15.0;
        for y in fibre_samples(&rs.fibre_domain, 16) {
            let p = rs.fibre_point(&[t], &y);
            let l = laplacian(&rs.total, &**f, &p)?;
            if l < min_lap {
                min_lap = l;
                at = p;
            }
        }
    }
    let mut out = vec![CheckRecord::new(
        format!("hadamard.{label}.hypothesis.subharmonic"),
        "hadamard",
        (-min_lap).max(0.0),
        HADAMARD_TOL,
    )
    .with_witness(json!({ "min_laplacian": min_lap, "at": at }))];
    if !out[0].pass {
        return Ok(out);
    }
    let sup = |b: &[f64]| fibre_supremum(rs, &**f, b, &[fibre_grid], 60);
    let int = |b: &[f64]| fibre_integral(rs, &**f, b, &[fibre_grid]);
    for (kind, pushdown) in [
        ("sup", &sup as &(dyn Fn(&[f64]) -> Result<f64> + Sync)),
        ("integral", &int),
    ] {
        let r = base_convexity_check(
            pushdown,
            &rs.base,
            &[lo],
            &[hi],
            grid,
            ConvexityMode::Midpoint,
            HADAMARD_TOL,
        )?;
        let samples: Vec<Value> = [lo, 0.5 * (lo + hi), hi]
            .iter()
            .map(|&t| Ok(json!({ "t": t, "value": pushdown(&[t])? })))
            .collect::<Result<_>>()?;
        out.push(
            CheckRecord::new(
                format!("hadamard.{label}.{kind}"),
                "hadamard",
                (-r.margin).max(0.0),
                HADAMARD_TOL,
            )
            .with_witness(json!({ "margin": r.margin, "at": r.witness, "segments": r.checked, "values": samples })),
        );
    }
    Ok(out)
}

pub(super) fn hadamard(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let rs = s.submersion()?;
    let mut out = Vec::new();
    for (label, text) in HADAMARD_FUNCTIONS {
        let f = expr_field(text, 2)?;
        out.extend(hadamard_check(
            rs,
            label,
            &f,
            (s.region.0[0], s.region.1[0]),
            ctx.grid,
            ctx.fibre_grid(rs),
        )?);
    }
    Ok(out)
}

/// Submanifolds of flat space with closed-form squared distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SquareDistanceCase {
    OriginR2,
    AxisR3,
    UnitCircleR2,
}

impl SquareDistanceCase {
    pub const ALL: [SquareDistanceCase; 3] = [
        SquareDistanceCase::OriginR2,
        SquareDistanceCase::AxisR3,
        SquareDistanceCase::UnitCircleR2,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SquareDistanceCase::OriginR2 => "origin_r2",
            SquareDistanceCase::AxisR3 => "z_axis_r3",
            SquareDistanceCase::UnitCircleR2 => "unit_circle_r2",
        }
    }

    fn distance_squared(self) -> (&'static str, usize) {
        match self {
            SquareDistanceCase::OriginR2 => ("x^2 + y^2", 2),
            SquareDistanceCase::AxisR3 => ("x^2 + y^2", 3),
            SquareDistanceCase::UnitCircleR2 => ("(sqrt(x^2 + y^2) - 1)^2", 2),
        }
    }

    /// Points of `Σ` with their unit tangent vectors.
    fn on_sigma(self) -> Vec<(Vec<f64>, Vec<DVector<f64>>)> {
        match self {
            SquareDistanceCase::OriginR2 => vec![(vec![0.0, 0.0], vec![])],
            SquareDistanceCase::AxisR3 => [-1.0, 0.0, 0.5, 2.0]
                .iter()
                .map(|&z| (vec![0.0, 0.0, z], vec![linalg::unit(3, 2)]))
                .collect(),
            SquareDistanceCase::UnitCircleR2 => (0..8)
                .map(|k| {
                    let a = k as f64 * std::f64::consts::FRAC_PI_4;
                    (vec![a.cos(), a.sin()], vec![DVector::from_vec(vec![-a.sin(), a.cos()])])
                })
                .collect(),
        }
    }

    /// Points off `Σ` with the direction tangent to the nearby level set.
    fn off_sigma(self) -> Vec<(Vec<f64>, Option<DVector<f64>>)> {
        match self {
            SquareDistanceCase::OriginR2 => vec![(vec![0.5, 0.3], None), (vec![-1.0, 2.0], None)],
            SquareDistanceCase::AxisR3 => vec![
                (vec![0.5, 0.0, 0.0], Some(linalg::unit(3, 1))),
                (
                    vec![1.0, 1.0, -0.5],
                    Some(DVector::from_vec(vec![-1.0, 1.0, 0.0]) / 2f64.sqrt()),
                ),
            ],
            SquareDistanceCase::UnitCircleR2 => [0.5, 0.9, 1.1, 1.5]
                .iter()
                .map(|&r| (vec![r, 0.0], Some(linalg::unit(2, 1))))
                .collect(),
        }
    }
}

/// On `Σ`: `Hess(d²) ⪰ 0` with the tangent directions in its kernel. Off `Σ`
/// the eigenvalues are reported only.
pub fn square_distance_check(case: SquareDistanceCase) -> Result<CheckRecord> {
    let (text, n) = case.distance_squared();
    let f = expr_field(text, n)?;
    let g = MetricField::euclidean(Domain::unbounded(n));
    let mut residual = 0.0f64;
    let mut on = Vec::new();
    for (p, tangents) in case.on_sigma() {
        let h = hessian(&g, &*f, &p)?;
        let ev = linalg::sym_eigenvalues(&h);
        residual = residual.max(-ev[0]);
        for t in &tangents {
            residual = residual.max((&h * t).amax());
        }
        on.push(json!({ "point": p, "eigenvalues": ev }));
    }
    let mut off = Vec::new();
    for (p, t) in case.off_sigma() {
        let h = hessian(&g, &*f, &p)?;
        let tangential = t.map(|t| (t.transpose() * &h * &t)[(0, 0)]);
        off.push(json!({ "point": p, "eigenvalues": linalg::sym_eigenvalues(&h), "tangential": tangential }));
    }
    Ok(CheckRecord::new(
        format!("square_distance.{}", case.label()),
        "square_distance",
        residual,
        1e-8,
    )
    .with_witness(json!({ "on_sigma": on, "off_sigma": off })))
}

pub(super) fn square_distance(_s: &Scenario, _ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    SquareDistanceCase::ALL
        .iter()
        .map(|&c| square_distance_check(c))
        .collect()
}

pub(super) fn levi_form_check(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let k = s.kahler()?;
    if !k.has_constant_j() {
        return Err(Error::Precondition(
            "the coordinate Levi form needs a constant complex structure".into(),
        ));
    }
    let mut rng = ctx.rng();
    let mut worst = Worst::default();
    for _ in 0..20 {
        let p = total_sample(s, &mut rng);
        let x = gaussian_vector(&mut rng, k.dim());
        let a = levi_form(k, &*s.function, &p, &x)?;
        let b = levi_form_coordinate(k, &*s.function, &p, &x)?;
        worst.update((a - b).abs() / a.abs().max(1.0), &p);
    }
    Ok(vec![worst.record(&ctx.name, "levi_form", 1e-10)])
}

pub(super) fn search_options(ctx: &CheckContext, samples: usize) -> SearchOptions {
    SearchOptions {
        samples,
        seed: ctx.seed,
        ..SearchOptions::default()
    }
}

/// A function that is plurisubharmonic but not convex: Kähler defect and
/// Laplacian are non-negative while the smallest Hessian eigenvalue is not.
pub(super) fn hyperbola(s: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let k = s.kahler()?;
    let f = &s.function;
    let mut rng = ctx.rng();
    let opts = search_options(ctx, 256);
    let (mut defect, mut lap, mut convex) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..10 {
        let p = total_sample(s, &mut rng);
        defect = defect.min(kahler_psh_defect(k, &**f, &p, &opts)?.defect);
        lap = lap.min(laplacian(&s.metric, &**f, &p)?);
        convex = convex.max(p_plane_psh_defect(&s.metric, &**f, &p, 1)?);
    }
    let name = &ctx.name;
    Ok(vec![
        CheckRecord::new(format!("{name}.psh"), "hyperbola", (-defect).max(0.0), 1e-8)
            .with_witness(json!({ "kahler_defect": defect })),
        CheckRecord::new(format!("{name}.laplacian"), "hyperbola", (-lap).max(0.0), 1e-8)
            .with_witness(json!({ "laplacian": lap })),
        CheckRecord::new(format!("{name}.not_convex"), "hyperbola", convex.max(0.0), 0.0)
            .with_witness(json!({ "one_plane_defect": convex })),
    ])
}

/// Smallest eigenvalue of a symmetric matrix in an orthonormal frame of `g`.
pub(super) fn min_eigenvalue(h: &DMatrix<f64>, g: &DMatrix<f64>) -> f64 {
    linalg::sym_eigenvalues(&linalg::in_frame(h, &linalg::coordinate_frame(g)))[0]
}
