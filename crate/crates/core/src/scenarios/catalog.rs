use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{DomainConfig, GeometryConfig, ProfileConfig, ScenarioConfig};
use crate::calibration::{G2Structure, KahlerStructure};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::{expr_field, from_expr, Field};
use crate::manifold::{Domain, MetricField};
use crate::submersion::RiemannianSubmersion;

pub const SCENARIO_IDS: [&str; 9] = [
    "polar",
    "cylinder",
    "s2_latitude",
    "rev_surface",
    "flat_cn",
    "flat_t2",
    "flat_c2_torus",
    "t7_coassoc",
    "hyperbola_psh",
];

pub fn describe_scenario(id: &str) -> Option<&'static str> {
    Some(match id {
        "polar" => "flat plane in polar coordinates (r, theta) over the radius; fibres are circles",
        "cylinder" => "C minus the origin with the flat cylinder metric |dz|^2/|z|^2 over t = log|z|",
        "s2_latitude" => "unit sphere (theta, phi) over the polar angle; fibres are latitude circles",
        "rev_surface" => "surface of revolution from a profile r(.), arc-length or graph form (default catenoid)",
        "flat_cn" => "flat C^n over the real parts; fibres are the Lagrangian planes Re z = const",
        "flat_t2" => "flat torus T^2 over its first circle; fibres are Lagrangian circles",
        "flat_c2_torus" => "flat C^2 over (|z1|, |z2|); fibres are Lagrangian T^2 orbits",
        "t7_coassoc" => "flat T^7 over T^3 (x1..x3); fibres are coassociative T^4",
        "hyperbola_psh" => "flat C with f = 2x^2 - y^2, plurisubharmonic but not convex",
        _ => return None,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMode {
    /// `ds² + r(s)² dφ²`.
    #[default]
    ArcLength,
    /// `(1 + r'(z)²) dz² + r(z)² dφ²`.
    Graph,
}

/// An S¹-invariant surface metric given by a profile `r` of the first
/// coordinate `x`.
#[derive(Debug, Clone)]
pub struct Profile {
    pub radius: Expr,
    pub mode: ProfileMode,
    pub lower: f64,
    pub upper: f64,
    pub periodic: bool,
}

impl Profile {
    pub fn new(radius: &str, mode: ProfileMode, lower: f64, upper: f64, periodic: bool) -> Result<Self> {
        let radius = Expr::parse(radius)?;
        if radius.required_arity() > 1 {
            return Err(Error::Config("profile may only depend on x".into()));
        }
        if !(lower < upper) {
            return Err(Error::Config(format!("profile interval [{lower}, {upper}] is empty")));
        }
        Ok(Profile {
            radius,
            mode,
            lower,
            upper,
            periodic,
        })
    }

    pub fn derivative(&self) -> Expr {
        self.radius.derivative(0)
    }

    pub fn second_derivative(&self) -> Expr {
        self.radius.derivative(0).derivative(0)
    }

    pub fn r(&self, x: f64) -> f64 {
        self.radius.value(&[x])
    }

    pub fn dr(&self, x: f64) -> f64 {
        self.derivative().value(&[x])
    }

    /// Coefficient of `dx²` as an expression in `x`.
    fn base_coefficient(&self) -> Result<Expr> {
        match self.mode {
            ProfileMode::ArcLength => Ok(Expr::num(1.0)),
            ProfileMode::Graph => Expr::parse(&format!("1 + ({})^2", self.derivative())),
        }
    }

    pub fn base_metric(&self) -> Result<MetricField> {
        let mut dom = Domain::new(vec![self.lower], vec![self.upper]);
        if self.periodic {
            dom = dom.with_periodic(0);
        }
        match self.mode {
            ProfileMode::ArcLength => Ok(MetricField::euclidean(dom)),
            ProfileMode::Graph => MetricField::new(vec![from_expr(self.base_coefficient()?, 1)?], dom),
        }
    }

    pub fn total_metric(&self) -> Result<MetricField> {
        let mut dom = Domain::new(vec![self.lower, 0.0], vec![self.upper, 2.0 * PI]).with_periodic(1);
        if self.periodic {
            dom = dom.with_periodic(0);
        }
        let r2 = Expr::parse(&format!("({})^2", self.radius))?;
        MetricField::new(
            vec![
                from_expr(self.base_coefficient()?, 2)?,
                crate::field::constant(0.0, 2),
                crate::field::constant(0.0, 2),
                from_expr(r2, 2)?,
            ],
            dom,
        )
    }

    /// Gauss curvature `−r''/r` (arc length) or `−r''/(r(1+r'²)²)` (graph).
    pub fn gauss_curvature(&self) -> Result<Expr> {
        let (r, d, dd) = (&self.radius, self.derivative(), self.second_derivative());
        Expr::parse(&match self.mode {
            ProfileMode::ArcLength => format!("-({dd})/({r})"),
            ProfileMode::Graph => format!("-({dd})/(({r})*(1 + ({d})^2)^2)"),
        })
    }

    /// Geodesic curvature `|r'|/r` of the orbits, divided by `√(1+r'²)` in
    /// graph form.
    pub fn orbit_curvature(&self) -> Result<Expr> {
        let (r, d) = (&self.radius, self.derivative());
        Expr::parse(&match self.mode {
            ProfileMode::ArcLength => format!("sqrt(({d})^2)/({r})"),
            ProfileMode::Graph => format!("sqrt(({d})^2)/(({r})*sqrt(1 + ({d})^2))"),
        })
    }
}

/// A model geometry with its test functions.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub metric: MetricField,
    pub submersion: Option<RiemannianSubmersion>,
    pub kahler: Option<KahlerStructure>,
    pub g2: Option<G2Structure>,
    /// Test function on the total space.
    pub function: Field,
    /// Function on the base for invariant-function checks.
    pub base_function: Option<Field>,
    /// Box of base points that checks sample (total-space box when there is
    /// no submersion).
    pub region: (Vec<f64>, Vec<f64>),
    /// Base points where statements are evaluated.
    pub probes: Vec<Vec<f64>>,
    pub profile: Option<Profile>,
    /// Closed-form `|H|` of the fibre over `b`.
    pub mean_curvature: Option<Field>,
    /// Closed-form Gauss curvature for surfaces.
    pub gauss_curvature: Option<Field>,
    pub default_checks: Vec<&'static str>,
}

impl Scenario {
    pub fn submersion(&self) -> Result<&RiemannianSubmersion> {
        self.submersion
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("scenario {} has no submersion", self.id)))
    }

    pub fn kahler(&self) -> Result<&KahlerStructure> {
        self.kahler
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("scenario {} has no Kähler structure", self.id)))
    }

    pub fn g2(&self) -> Result<&G2Structure> {
        self.g2
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("scenario {} has no G2 structure", self.id)))
    }

    pub fn base_function(&self) -> Result<&Field> {
        self.base_function
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("scenario {} has no base function", self.id)))
    }

    pub fn profile(&self) -> Result<&Profile> {
        self.profile
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("scenario {} has no revolution profile", self.id)))
    }
}

fn fields(exprs: &[&str], arity: usize) -> Result<Vec<Field>> {
    exprs.iter().map(|e| expr_field(e, arity)).collect()
}

const SUBMERSION_CHECKS: [&str; 6] = [
    "projection_section",
    "lift_isometry",
    "split",
    "hessian_transfer",
    "oneill",
    "fibre_mean_curvature",
];

fn with_common(extra: &[&'static str]) -> Vec<&'static str> {
    SUBMERSION_CHECKS.iter().chain(extra).copied().collect()
}

pub fn build_scenario(cfg: &ScenarioConfig) -> Result<Scenario> {
    if cfg.scenario.is_some() && cfg.geometry.is_some() {
        return Err(Error::Config(
            "give either a scenario id or an inline geometry, not both".into(),
        ));
    }
    if cfg.profile.is_some() && cfg.scenario.as_deref() != Some("rev_surface") {
        return Err(Error::Config("a profile is only accepted by rev_surface".into()));
    }
    if cfg.dim.is_some() && cfg.scenario.as_deref() != Some("flat_cn") {
        return Err(Error::Config("dim is only accepted by flat_cn".into()));
    }
    let mut s = match (&cfg.scenario, &cfg.geometry) {
        (None, None) => return Err(Error::Config("config needs a scenario id or a geometry".into())),
        (None, Some(g)) => custom(g)?,
        (Some(id), _) => match id.as_str() {
            "polar" => polar()?,
            "cylinder" => cylinder()?,
            "s2_latitude" => s2_latitude()?,
            "rev_surface" => rev_surface(cfg.profile.as_ref())?,
            "flat_cn" => flat_cn(cfg.dim.unwrap_or(2))?,
            "flat_t2" => flat_t2()?,
            "flat_c2_torus" => flat_c2_torus()?,
            "t7_coassoc" => t7_coassoc()?,
            "hyperbola_psh" => hyperbola_psh()?,
            other => return Err(Error::UnknownScenario(other.to_string())),
        },
    };
    if let Some(text) = &cfg.function {
        s.function = expr_field(text, s.metric.dim())?;
    }
    if let Some(text) = &cfg.base_function {
        let m = s.submersion()?.base_dim();
        s.base_function = Some(expr_field(text, m)?);
    }
    Ok(s)
}

fn polar() -> Result<Scenario> {
    let dom = Domain::new(vec![0.05, 0.0], vec![50.0, 2.0 * PI]).with_periodic(1);
    let total = MetricField::diagonal(&["1", "r^2"], dom)?;
    let base = MetricField::euclidean(Domain::new(vec![0.05], vec![50.0]));
    let rs = RiemannianSubmersion::new(
        total.clone(),
        base,
        fields(&["r"], 2)?,
        fields(&["x1", "x2"], 2)?,
        Domain::new(vec![0.0], vec![2.0 * PI]).with_periodic(0),
    )?
    .with_orbit_chart();
    Ok(Scenario {
        id: "polar".into(),
        kahler: Some(KahlerStructure::surface(total.clone())?),
        metric: total,
        submersion: Some(rs),
        g2: None,
        function: expr_field("(r*cos(theta))^2", 2)?,
        base_function: Some(expr_field("log(x)", 1)?),
        region: (vec![0.5], vec![3.0]),
        probes: vec![vec![1.0], vec![2.0]],
        profile: None,
        mean_curvature: Some(expr_field("1/x", 1)?),
        gauss_curvature: Some(expr_field("0", 2)?),
        default_checks: with_common(&[
            "horizontal_geodesic",
            "restricted_laplacian",
            "fibre_integral",
            "haar",
            "radius_example",
            "first_variation",
            "second_variation",
        ]),
    })
}

fn cylinder() -> Result<Scenario> {
    let dom = Domain::new(vec![-20.0, -20.0], vec![20.0, 20.0]);
    let total = MetricField::diagonal(&["1/(x^2 + y^2)", "1/(x^2 + y^2)"], dom)?;
    let base = MetricField::euclidean(Domain::new(vec![-2.9], vec![2.9]));
    let rs = RiemannianSubmersion::new(
        total.clone(),
        base,
        fields(&["log(x^2 + y^2)/2"], 2)?,
        fields(&["exp(x1)*cos(x2)", "exp(x1)*sin(x2)"], 2)?,
        Domain::new(vec![0.0], vec![2.0 * PI]).with_periodic(0),
    )?
    .with_orbit_chart();
    Ok(Scenario {
        id: "cylinder".into(),
        kahler: Some(KahlerStructure::surface(total.clone())?),
        metric: total,
        submersion: Some(rs),
        g2: None,
        function: expr_field("log(x^2 + y^2)^2/4", 2)?,
        base_function: Some(expr_field("x^2", 1)?),
        region: (vec![-1.0], vec![1.0]),
        probes: vec![vec![-0.5], vec![0.0], vec![0.7]],
        profile: None,
        mean_curvature: Some(expr_field("0", 1)?),
        gauss_curvature: Some(expr_field("0", 2)?),
        default_checks: with_common(&[
            "horizontal_geodesic",
            "hadamard",
            "second_variation",
            "P3.1",
            "T3.1",
            "P5.2",
            "C5.1",
            "P7.4",
        ]),
    })
}

fn s2_latitude() -> Result<Scenario> {
    let (lo, hi) = (0.05, PI - 0.05);
    let dom = Domain::new(vec![lo, 0.0], vec![hi, 2.0 * PI]).with_periodic(1);
    let total = MetricField::diagonal(&["1", "sin(x)^2"], dom)?;
    let base = MetricField::euclidean(Domain::new(vec![lo], vec![hi]));
    let rs = RiemannianSubmersion::new(
        total.clone(),
        base,
        fields(&["x"], 2)?,
        fields(&["x1", "x2"], 2)?,
        Domain::new(vec![0.0], vec![2.0 * PI]).with_periodic(0),
    )?
    .with_orbit_chart();
    Ok(Scenario {
        id: "s2_latitude".into(),
        kahler: Some(KahlerStructure::surface(total.clone())?),
        metric: total,
        submersion: Some(rs),
        g2: None,
        function: expr_field("2 + sin(x)*cos(y)", 2)?,
        base_function: Some(expr_field("cos(x)", 1)?),
        region: (vec![0.3], vec![PI - 0.3]),
        probes: vec![vec![PI / 2.0]],
        profile: Some(Profile::new("sin(x)", ProfileMode::ArcLength, lo, hi, false)?),
        mean_curvature: Some(expr_field("sqrt(cos(x)^2)/sin(x)", 1)?),
        gauss_curvature: Some(expr_field("1", 2)?),
        default_checks: with_common(&[
            "horizontal_geodesic",
            "first_variation",
            "second_variation",
            "kahler_variation",
            "toric_volume",
            "lagrangian_determinant",
            "ricci_form",
            "P3.1",
        ]),
    })
}

fn rev_surface(cfg: Option<&ProfileConfig>) -> Result<Scenario> {
    let profile = match cfg {
        Some(p) => Profile::new(&p.radius, p.mode, p.lower, p.upper, p.periodic)?,
        None => Profile::new("cosh(x)", ProfileMode::Graph, -1.0, 1.0, false)?,
    };
    let total = profile.total_metric()?;
    let base = profile.base_metric()?;
    let fibre = Domain::new(vec![0.0], vec![2.0 * PI]).with_periodic(0);
    let rs = RiemannianSubmersion::new(
        total.clone(),
        base,
        fields(&["x"], 2)?,
        fields(&["x1", "x2"], 2)?,
        fibre,
    )?
    .with_orbit_chart();
    let width = profile.upper - profile.lower;
    let (lo, hi) = if profile.periodic {
        (profile.lower, profile.upper)
    } else {
        (profile.lower + 0.05 * width, profile.upper - 0.05 * width)
    };
    Ok(Scenario {
        id: "rev_surface".into(),
        kahler: Some(KahlerStructure::surface(total.clone())?),
        metric: total,
        submersion: Some(rs),
        g2: None,
        function: expr_field("2 + cos(y)", 2)?,
        base_function: Some(from_expr(profile.radius.clone(), 1)?),
        region: (vec![lo], vec![hi]),
        probes: vec![vec![0.5 * (lo + hi)]],
        mean_curvature: Some(from_expr(profile.orbit_curvature()?, 1)?),
        gauss_curvature: Some(from_expr(profile.gauss_curvature()?, 2)?),
        profile: Some(profile),
        default_checks: with_common(&["toric_volume", "second_variation", "ricci_form"]),
    })
}

fn flat_cn(n: usize) -> Result<Scenario> {
    if n == 0 || n > 4 {
        return Err(Error::Config(format!(
            "flat_cn supports complex dimension 1..=4, got {n}"
        )));
    }
    let dom = Domain::new(vec![-5.0; 2 * n], vec![5.0; 2 * n]);
    let total = MetricField::euclidean(dom.clone());
    let base = MetricField::euclidean(Domain::new(vec![-5.0; n], vec![5.0; n]));
    let projection: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let param: Vec<String> = (1..=2 * n).map(|i| format!("x{i}")).collect();
    fn refs(v: &[String]) -> Vec<&str> {
        v.iter().map(|s| s.as_str()).collect()
    }
    let rs = RiemannianSubmersion::new(
        total.clone(),
        base,
        fields(&refs(&projection), 2 * n)?,
        fields(&refs(&param), 2 * n)?,
        Domain::new(vec![-3.0; n], vec![3.0; n]),
    )?;
    let square: Vec<String> = (1..=n).map(|i| format!("x{i}^2")).collect();
    let square = square.join(" + ");
    let probes = vec![(0..n).map(|i| if i % 2 == 0 { 0.3 } else { -0.2 }).collect()];
    Ok(Scenario {
        id: "flat_cn".into(),
        kahler: Some(KahlerStructure::flat_on(dom)),
        metric: total,
        submersion: Some(rs),
        g2: None,
        function: expr_field(&square, 2 * n)?,
        base_function: Some(expr_field(&square, n)?),
        region: (vec![-1.0; n], vec![1.0; n]),
        probes,
        profile: None,
        mean_curvature: Some(expr_field("0", n)?),
        gauss_curvature: if n == 1 { Some(expr_field("0", 2)?) } else { None },
        default_checks: with_common(&[
            "horizontal_geodesic",
            "levi_form",
            "square_distance",
            "ricci_form",
            "P3.1",
            "P5.1",
            "P5.2",
            "C5.1",
        ]),
    })
}

fn flat_t2() -> Result<Scenario> {
    let dom = Domain::new(vec![0.0, 0.0], vec![2.0 * PI, 2.0 * PI])
        .with_periodic(0)
        .with_periodic(1);
    let total = MetricField::euclidean(dom.clone());
    let base = MetricField::euclidean(Domain::new(vec![0.0], vec![2.0 * PI]).with_periodic(0));
    let rs = RiemannianSubmersion::new(
        total.clone(),
        base,
        fields(&["x"], 2)?,
        fields(&["x1", "x2"], 2)?,
        Domain::new(vec![0.0], vec![2.0 * PI]).with_periodic(0),
    )?
    .with_orbit_chart();
    Ok(Scenario {
        id: "flat_t2".into(),
        kahler: Some(KahlerStructure::flat_on(dom)),
        metric: total,
        submersion: Some(rs),
        g2: None,
        function: expr_field("2 + cos(x)*cos(y)", 2)?,
        base_function: Some(expr_field("cos(x)", 1)?),
        region: (vec![0.0], vec![2.0 * PI]),
        probes: vec![vec![0.4], vec![2.0]],
        profile: Some(Profile::new("1", ProfileMode::ArcLength, 0.0, 2.0 * PI, true)?),
        mean_curvature: Some(expr_field("0", 1)?),
        gauss_curvature: Some(expr_field("0", 2)?),
        default_checks: with_common(&[
            "fibre_integral",
            "first_variation",
            "second_variation",
            "kahler_variation",
            "lagrangian_determinant",
            "toric_volume",
            "ricci_form",
            "C6.1",
            "P7.1",
            "P7.2",
        ]),
    })
}

fn flat_c2_torus() -> Result<Scenario> {
    // coordinates (Re z1, Re z2, Im z1, Im z2) so that J is the flat structure
    let dom = Domain::new(vec![-10.0; 4], vec![10.0; 4]);
    let total = MetricField::euclidean(dom.clone());
    let base = MetricField::euclidean(Domain::new(vec![0.05, 0.05], vec![5.0, 5.0]));
    let rs = RiemannianSubmersion::new(
        total.clone(),
        base,
        fields(&["sqrt(x1^2 + x3^2)", "sqrt(x2^2 + x4^2)"], 4)?,
        fields(&["x1*cos(x3)", "x2*cos(x4)", "x1*sin(x3)", "x2*sin(x4)"], 4)?,
        Domain::new(vec![0.0, 0.0], vec![2.0 * PI, 2.0 * PI])
            .with_periodic(0)
            .with_periodic(1),
    )?
    .with_orbit_chart();
    Ok(Scenario {
        id: "flat_c2_torus".into(),
        kahler: Some(KahlerStructure::flat_on(dom)),
        metric: total,
        submersion: Some(rs),
        g2: None,
        function: expr_field("x1^2 + x2^2 + x3^2 + x4^2 + x1", 4)?,
        base_function: Some(expr_field("x1^2 + x2^2", 2)?),
        region: (vec![0.5, 0.5], vec![2.0, 2.0]),
        probes: vec![vec![1.0, 1.5]],
        profile: None,
        mean_curvature: Some(expr_field("sqrt(1/x1^2 + 1/x2^2)", 2)?),
        gauss_curvature: None,
        default_checks: with_common(&[
            "horizontal_geodesic",
            "fibre_integral",
            "haar",
            "lagrangian_determinant",
            "ricci_form",
            "P7.4",
        ]),
    })
}

fn t7_coassoc() -> Result<Scenario> {
    let mut dom = Domain::new(vec![0.0; 7], vec![2.0 * PI; 7]);
    for a in 0..7 {
        dom = dom.with_periodic(a);
    }
    let total = MetricField::euclidean(dom.clone());
    let mut base_dom = Domain::new(vec![0.0; 3], vec![2.0 * PI; 3]);
    let mut fibre_dom = Domain::new(vec![0.0; 4], vec![2.0 * PI; 4]);
    for a in 0..3 {
        base_dom = base_dom.with_periodic(a);
    }
    for a in 0..4 {
        fibre_dom = fibre_dom.with_periodic(a);
    }
    let rs = RiemannianSubmersion::new(
        total.clone(),
        MetricField::euclidean(base_dom),
        fields(&["x1", "x2", "x3"], 7)?,
        fields(&["x1", "x2", "x3", "x4", "x5", "x6", "x7"], 7)?,
        fibre_dom,
    )?
    .with_orbit_chart();
    Ok(Scenario {
        id: "t7_coassoc".into(),
        g2: Some(G2Structure::on(dom)),
        metric: total,
        submersion: Some(rs),
        kahler: None,
        function: expr_field("cos(x1) + 2", 7)?,
        base_function: Some(expr_field("cos(x1) + 2", 3)?),
        region: (vec![0.0; 3], vec![2.0 * PI; 3]),
        probes: vec![vec![0.3, 0.2, 0.1]],
        profile: None,
        mean_curvature: Some(expr_field("0", 3)?),
        gauss_curvature: None,
        default_checks: with_common(&["coassociative_fibres", "g2_variation", "P5.4", "C6.1", "P7.3"]),
    })
}

fn hyperbola_psh() -> Result<Scenario> {
    let dom = Domain::new(vec![-5.0, -5.0], vec![5.0, 5.0]);
    let total = MetricField::euclidean(dom.clone());
    Ok(Scenario {
        id: "hyperbola_psh".into(),
        kahler: Some(KahlerStructure::flat_on(dom)),
        metric: total,
        submersion: None,
        g2: None,
        function: expr_field("2*x^2 - y^2", 2)?,
        base_function: None,
        region: (vec![-1.0, -1.0], vec![1.0, 1.0]),
        probes: vec![vec![0.5, 0.5]],
        profile: None,
        mean_curvature: None,
        gauss_curvature: Some(expr_field("0", 2)?),
        default_checks: vec!["hyperbola", "levi_form", "ricci_form"],
    })
}

fn domain(cfg: &DomainConfig, what: &str) -> Result<Domain> {
    let n = cfg.lower.len();
    if cfg.upper.len() != n || (!cfg.periodic.is_empty() && cfg.periodic.len() != n) {
        return Err(Error::Config(format!(
            "{what}: lower, upper and periodic lengths differ"
        )));
    }
    if cfg.lower.iter().zip(&cfg.upper).any(|(l, u)| !(l < u)) {
        return Err(Error::Config(format!(
            "{what}: every lower bound must be below its upper bound"
        )));
    }
    let mut d = Domain::new(cfg.lower.clone(), cfg.upper.clone());
    for (a, &p) in cfg.periodic.iter().enumerate() {
        if p {
            d = d.with_periodic(a);
        }
    }
    Ok(d)
}

fn metric(rows: &[Vec<String>], dom: Domain, what: &str) -> Result<MetricField> {
    let n = dom.dim();
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!(
            "{what}: expected a {n}x{n} matrix of expressions"
        )));
    }
    let entries = rows
        .iter()
        .flatten()
        .map(|e| expr_field(e, n))
        .collect::<Result<Vec<_>>>()?;
    MetricField::new(entries, dom)
}

fn custom(g: &GeometryConfig) -> Result<Scenario> {
    let total_dom = domain(&g.total_domain, "total_domain")?;
    let base_dom = domain(&g.base_domain, "base_domain")?;
    let fibre_dom = domain(&g.fibre_domain, "fibre_domain")?;
    let n = total_dom.dim();
    let m = base_dom.dim();
    let total = metric(&g.total_metric, total_dom.clone(), "total_metric")?;
    let base = metric(&g.base_metric, base_dom.clone(), "base_metric")?;
    let projection = g
        .projection
        .iter()
        .map(|e| expr_field(e, n))
        .collect::<Result<Vec<_>>>()?;
    let param = g
        .fibre_param
        .iter()
        .map(|e| expr_field(e, n))
        .collect::<Result<Vec<_>>>()?;
    let mut rs = RiemannianSubmersion::new(total.clone(), base, projection, param, fibre_dom)?;
    if g.orbit_chart {
        rs = rs.with_orbit_chart();
    }
    let kahler = match g.kahler.as_deref() {
        None => None,
        Some("flat") => Some(KahlerStructure::with_constant_j(total.clone(), flat_j(n)?)?),
        Some("surface") => Some(KahlerStructure::surface(total.clone())?),
        Some(other) => return Err(Error::Config(format!("unknown Kähler structure {other:?}"))),
    };
    let g2 = if g.g2 {
        if n != 7 || !total.is_euclidean() {
            return Err(Error::Config("a G2 structure needs a flat 7-dimensional chart".into()));
        }
        Some(G2Structure::on(total_dom))
    } else {
        None
    };
    let region = match &g.base_region {
        Some(r) => {
            let d = domain(r, "base_region")?;
            (d.lower, d.upper)
        }
        None => (base_dom.lower.clone(), base_dom.upper.clone()),
    };
    if region.0.len() != m || region.0.iter().chain(&region.1).any(|v| !v.is_finite()) {
        return Err(Error::Config(
            "base_region must be a finite box in base coordinates".into(),
        ));
    }
    let probes = if g.probes.is_empty() {
        vec![region.0.iter().zip(&region.1).map(|(l, u)| 0.5 * (l + u)).collect()]
    } else {
        g.probes.clone()
    };
    if probes.iter().any(|p| p.len() != m) {
        return Err(Error::Config(format!("probes must have {m} coordinates")));
    }
    Ok(Scenario {
        id: "custom".into(),
        metric: total,
        submersion: Some(rs),
        kahler,
        g2,
        function: crate::field::constant(1.0, n),
        base_function: None,
        region,
        probes,
        profile: None,
        mean_curvature: None,
        gauss_curvature: None,
        default_checks: vec!["projection_section", "lift_isometry", "split", "oneill"],
    })
}

fn flat_j(n: usize) -> Result<nalgebra::DMatrix<f64>> {
    if n % 2 != 0 {
        return Err(Error::Config("a flat complex structure needs even dimension".into()));
    }
    let h = n / 2;
    let mut j = nalgebra::DMatrix::zeros(n, n);
    for a in 0..h {
        j[(a + h, a)] = 1.0;
        j[(a, a + h)] = -1.0;
    }
    Ok(j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_catalog_id_builds() {
        for id in SCENARIO_IDS {
            let s = build_scenario(&ScenarioConfig::for_scenario(id)).unwrap();
            assert_eq!(s.id, id);
            assert!(describe_scenario(id).is_some());
            if let Some(rs) = &s.submersion {
                for b in &s.probes {
                    assert_eq!(b.len(), rs.base_dim());
                }
            }
        }
    }

    #[test]
    fn catenoid_profile_curvature() {
        let s = build_scenario(&ScenarioConfig::for_scenario("rev_surface")).unwrap();
        let k = s.gauss_curvature.unwrap();
        let z: f64 = 0.4;
        assert!((k.value(&[z, 1.0]) + 1.0 / z.cosh().powi(4)).abs() < 1e-12);
    }

    #[test]
    fn profile_only_for_rev_surface() {
        let mut cfg = ScenarioConfig::for_scenario("polar");
        cfg.profile = Some(ProfileConfig {
            radius: "sin(x)".into(),
            mode: ProfileMode::ArcLength,
            lower: 0.1,
            upper: 3.0,
            periodic: false,
        });
        assert!(matches!(build_scenario(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn inline_geometry_matches_polar() {
        let json = r#"{
            "geometry": {
                "total_metric": [["1", "0"], ["0", "x^2"]],
                "total_domain": {"lower": [0.1, 0], "upper": [10, 6.283185307179586], "periodic": [false, true]},
                "base_metric": [["1"]],
                "base_domain": {"lower": [0.1], "upper": [10]},
                "projection": ["x1"],
                "fibre_param": ["x1", "x2"],
                "fibre_domain": {"lower": [0], "upper": [6.283185307179586], "periodic": [true]},
                "orbit_chart": true,
                "base_region": {"lower": [0.5], "upper": [3]}
            },
            "function": "x1^2"
        }"#;
        let cfg = ScenarioConfig::from_json(json).unwrap();
        let s = build_scenario(&cfg).unwrap();
        assert_eq!(s.id, "custom");
        assert_eq!(s.probes, vec![vec![1.75]]);
    }
}
