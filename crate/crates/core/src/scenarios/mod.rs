//! Scenario catalog, JSON configuration, check drivers and reports.
//!
//! A scenario is an explicit model geometry (metric, optional submersion,
//! optional Kähler or G2 structure, a test function). A check produces one or
//! more [`CheckRecord`]s; a record passes iff its residual is at most its
//! tolerance. Records named `<check>.hypothesis.<what>` describe hypotheses
//! of the statement under test; when one of them fails the run is reported
//! as hypothesis-violated rather than as a failed conclusion.

mod catalog;
mod drivers;
mod propositions;
mod toric;

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::sampling::{check_rng, CheckRng};
use crate::submersion::{RiemannianSubmersion, MIN_FIBRE_GRID};
use crate::variation::MIN_VARIATION_GRID;

pub use catalog::{build_scenario, describe_scenario, Profile, ProfileMode, Scenario, SCENARIO_IDS};
pub use drivers::{hadamard_check, square_distance_check, HADAMARD_FUNCTIONS};
pub use toric::{lagrangian_determinant_check, ricci_two_form, toric_volume_analysis, MinimalOrbit, ToricAnalysis};

/// Values the `paper_tag` field of a record may take.
pub const KNOWN_TAGS: [&str; 31] = [
    "P2.1",
    "L2.1",
    "P2.2",
    "P3.1",
    "T3.1",
    "P5.1",
    "P5.2",
    "C5.1",
    "P5.4",
    "C6.1",
    "P7.1",
    "P7.2",
    "P7.3",
    "P7.4",
    "T8.1",
    "C8.2",
    "submersion",
    "quadrature",
    "radius_example",
    "hadamard",
    "levi_form",
    "square_distance",
    "hyperbola",
    "first_variation",
    "second_variation",
    "kahler_variation",
    "g2_variation",
    "coassociative",
    "lagrangian_determinant",
    "ricci_form",
    "preconditions",
];

/// Check names with the tag of their main records.
pub const CHECKS: [(&str, &str); 34] = [
    ("projection_section", "submersion"),
    ("lift_isometry", "submersion"),
    ("split", "submersion"),
    ("fibre_mean_curvature", "submersion"),
    ("hessian_transfer", "P2.2"),
    ("restricted_laplacian", "P2.1"),
    ("oneill", "L2.1"),
    ("horizontal_geodesic", "L2.1"),
    ("fibre_integral", "quadrature"),
    ("haar", "P7.4"),
    ("radius_example", "radius_example"),
    ("first_variation", "first_variation"),
    ("second_variation", "second_variation"),
    ("kahler_variation", "kahler_variation"),
    ("g2_variation", "g2_variation"),
    ("coassociative_fibres", "coassociative"),
    ("hadamard", "hadamard"),
    ("square_distance", "square_distance"),
    ("levi_form", "levi_form"),
    ("hyperbola", "hyperbola"),
    ("ricci_form", "ricci_form"),
    ("lagrangian_determinant", "lagrangian_determinant"),
    ("toric_volume", "T8.1"),
    ("P3.1", "P3.1"),
    ("T3.1", "T3.1"),
    ("P5.1", "P5.1"),
    ("P5.2", "P5.2"),
    ("C5.1", "C5.1"),
    ("P5.4", "P5.4"),
    ("C6.1", "C6.1"),
    ("P7.1", "P7.1"),
    ("P7.2", "P7.2"),
    ("P7.3", "P7.3"),
    ("P7.4", "P7.4"),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

fn check_tag(name: &str) -> Option<&'static str> {
    CHECKS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub const DEFAULT_GRID: usize = 64;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default)]
    pub periodic: Vec<bool>,
}

/// Inline geometry: every entry is an expression in `x1..xn`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// Row-major `n × n` metric entries.
    pub total_metric: Vec<Vec<String>>,
    pub total_domain: DomainConfig,
    pub base_metric: Vec<Vec<String>>,
    pub base_domain: DomainConfig,
    /// `m` expressions in the total coordinates.
    pub projection: Vec<String>,
    /// `n` expressions in the base coordinates followed by fibre parameters.
    pub fibre_param: Vec<String>,
    pub fibre_domain: DomainConfig,
    #[serde(default)]
    pub orbit_chart: bool,
    /// `"flat"` (constant `J` on `ℂⁿ` coordinates) or `"surface"`.
    #[serde(default)]
    pub kahler: Option<String>,
    #[serde(default)]
    pub g2: bool,
    /// Box of base points the checks sample; defaults to the base domain.
    #[serde(default)]
    pub base_region: Option<DomainConfig>,
    #[serde(default)]
    pub probes: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub radius: String,
    #[serde(default)]
    pub mode: ProfileMode,
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub periodic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub scenario: Option<String>,
    #[serde(default)]
    pub geometry: Option<GeometryConfig>,
    /// Test function on the total space.
    #[serde(default)]
    pub function: Option<String>,
    /// Function on the base for invariant-function checks.
    #[serde(default)]
    pub base_function: Option<String>,
    #[serde(default)]
    pub profile: Option<ProfileConfig>,
    /// Complex dimension for `flat_cn`.
    #[serde(default)]
    pub dim: Option<usize>,
    /// Empty means the scenario's default list.
    #[serde(default)]
    pub checks: Vec<String>,
    /// Replaces the tolerance of every conclusion record.
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Per-check replacement, keyed by check name.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

impl ScenarioConfig {
    pub fn for_scenario(id: &str) -> Self {
        ScenarioConfig {
            scenario: Some(id.to_string()),
            geometry: None,
            function: None,
            base_function: None,
            profile: None,
            dim: None,
            checks: Vec::new(),
            tolerance: None,
            tolerances: BTreeMap::new(),
            grid: DEFAULT_GRID,
            seed: 0,
        }
    }

    pub fn with_checks(mut self, checks: &[&str]) -> Self {
        self.checks = checks.iter().map(|c| c.to_string()).collect();
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    fn scenario_id(&self) -> &str {
        self.scenario.as_deref().unwrap_or("custom")
    }
}

/// JSON has no infinities: non-finite values are written as the strings
/// `"inf"`, `"-inf"` and `"nan"`.
mod extended_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub paper_tag: String,
    #[serde(with = "extended_float")]
    pub residual: f64,
    #[serde(with = "extended_float")]
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Value>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, tag: &str, residual: f64, tolerance: f64) -> Self {
        CheckRecord {
            name: name.into(),
            paper_tag: tag.to_string(),
            residual,
            tolerance,
            pass: residual <= tolerance,
            witness: None,
        }
    }

    pub fn hypothesis(check: &str, what: &str, tag: &str, residual: f64, tolerance: f64) -> Self {
        CheckRecord::new(format!("{check}.hypothesis.{what}"), tag, residual, tolerance)
    }

    pub fn with_witness(mut self, witness: Value) -> Self {
        self.witness = Some(witness);
        self
    }

    pub fn is_hypothesis(&self) -> bool {
        self.name.contains(".hypothesis.")
    }

    fn set_tolerance(&mut self, tolerance: f64) {
        self.tolerance = tolerance;
        self.pass = self.residual <= tolerance;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    HypothesisViolated,
}

impl Outcome {
    /// Process exit status: 0 pass, 1 failed check, 3 hypothesis violated.
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::HypothesisViolated => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub grid: usize,
    pub checks: Vec<CheckRecord>,
    pub wall_ms: u64,
}

impl Report {
    pub fn outcome(&self) -> Outcome {
        if self.checks.iter().any(|c| c.is_hypothesis() && !c.pass) {
            Outcome::HypothesisViolated
        } else if self.checks.iter().any(|c| !c.pass) {
            Outcome::Fail
        } else {
            Outcome::Pass
        }
    }

    pub fn record(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values serialize")
    }
}

/// Per-check execution context.
#[derive(Debug, Clone)]
pub struct CheckContext {
    pub name: String,
    pub seed: u64,
    pub grid: usize,
}

impl CheckContext {
    pub fn rng(&self) -> CheckRng {
        check_rng(self.seed, &self.name)
    }

    /// Points per fibre axis for quadrature.
    pub fn fibre_grid(&self, rs: &RiemannianSubmersion) -> usize {
        match rs.fibre_dim() {
            1 => self.grid.max(MIN_FIBRE_GRID),
            2 => self.grid.clamp(MIN_FIBRE_GRID, 64),
            _ => MIN_FIBRE_GRID,
        }
    }

    /// Points per fibre axis for variation integrals.
    pub fn variation_grid(&self, rs: &RiemannianSubmersion) -> usize {
        match rs.fibre_dim() {
            1 => self.grid.max(MIN_VARIATION_GRID),
            2 => self.grid.clamp(MIN_VARIATION_GRID, 32),
            _ => MIN_VARIATION_GRID,
        }
    }
}

fn run_check(scenario: &Scenario, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
    let s = scenario;
    match ctx.name.as_str() {
        "projection_section" => drivers::projection_section(s, ctx),
        "lift_isometry" => drivers::lift_isometry(s, ctx),
        "split" => drivers::split(s, ctx),
        "fibre_mean_curvature" => drivers::fibre_mean_curvature(s, ctx),
        "hessian_transfer" => drivers::hessian_transfer(s, ctx),
        "restricted_laplacian" => drivers::restricted_laplacian_check(s, ctx),
        "oneill" => drivers::oneill(s, ctx),
        "horizontal_geodesic" => drivers::horizontal_geodesic(s, ctx),
        "fibre_integral" => drivers::fibre_integral_convergence(s, ctx),
        "haar" => drivers::haar(s, ctx),
        "radius_example" => drivers::radius_example(s, ctx),
        "first_variation" => drivers::first_variation_check(s, ctx),
        "second_variation" => drivers::second_variation_check(s, ctx),
        "kahler_variation" => drivers::kahler_variation_check(s, ctx),
        "g2_variation" => drivers::g2_variation_check(s, ctx),
        "coassociative_fibres" => drivers::coassociative_fibres(s, ctx),
        "hadamard" => drivers::hadamard(s, ctx),
        "square_distance" => drivers::square_distance(s, ctx),
        "levi_form" => drivers::levi_form_check(s, ctx),
        "hyperbola" => drivers::hyperbola(s, ctx),
        "ricci_form" => toric::ricci_form_check(s, ctx),
        "lagrangian_determinant" => toric::lagrangian_determinant(s, ctx),
        "toric_volume" => toric::toric_volume(s, ctx),
        "P3.1" => propositions::p3_1(s, ctx),
        "T3.1" => propositions::t3_1(s, ctx),
        "P5.1" => propositions::p5_1(s, ctx),
        "P5.2" => propositions::p5_2(s, ctx),
        "C5.1" => propositions::c5_1(s, ctx),
        "P5.4" => propositions::p5_4(s, ctx),
        "C6.1" => propositions::c6_1(s, ctx),
        "P7.1" => propositions::p7_1(s, ctx),
        "P7.2" => propositions::p7_2(s, ctx),
        "P7.3" => propositions::p7_3(s, ctx),
        "P7.4" => propositions::p7_4(s, ctx),
        other => Err(Error::UnknownCheck {
            scenario: s.id.clone(),
            check: other.to_string(),
        }),
    }
}

/// Runs one check; numerical preconditions that fail inside the check
/// (open fibre, non-minimal fibre, missing structure, ...) become a failed
/// hypothesis record carrying the error message.
fn execute(scenario: &Scenario, ctx: &CheckContext) -> Vec<CheckRecord> {
    match run_check(scenario, ctx) {
        Ok(records) => records,
        Err(e) => vec![
            CheckRecord::hypothesis(&ctx.name, "preconditions", "preconditions", f64::INFINITY, 0.0)
                .with_witness(Value::String(e.to_string())),
        ],
    }
}

/// Builds the scenario, runs the requested checks and assembles the report.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Report> {
    let start = Instant::now();
    let scenario = build_scenario(cfg)?;
    let names: Vec<String> = if cfg.checks.is_empty() {
        scenario.default_checks.iter().map(|c| c.to_string()).collect()
    } else {
        cfg.checks.clone()
    };
    for name in &names {
        if check_tag(name).is_none() {
            return Err(Error::UnknownCheck {
                scenario: scenario.id.clone(),
                check: name.clone(),
            });
        }
    }
    for (name, tol) in &cfg.tolerances {
        if check_tag(name).is_none() {
            return Err(Error::UnknownCheck {
                scenario: scenario.id.clone(),
                check: name.clone(),
            });
        }
        if !(*tol >= 0.0) {
            return Err(Error::Config(format!("tolerance for {name} must be non-negative")));
        }
    }
    if let Some(t) = cfg.tolerance {
        if !(t >= 0.0) {
            return Err(Error::Config("tolerance must be non-negative".into()));
        }
    }
    let results: Vec<Vec<CheckRecord>> = names
        .par_iter()
        .map(|name| {
            let ctx = CheckContext {
                name: name.clone(),
                seed: cfg.seed,
                grid: cfg.grid,
            };
            let mut records = execute(&scenario, &ctx);
            let tol = cfg.tolerances.get(name).copied().or(cfg.tolerance);
            if let Some(t) = tol {
                records
                    .iter_mut()
                    .filter(|r| !r.is_hypothesis())
                    .for_each(|r| r.set_tolerance(t));
            }
            records
        })
        .collect();
    Ok(Report {
        scenario: cfg.scenario_id().to_string(),
        seed: cfg.seed,
        grid: cfg.grid,
        checks: results.into_iter().flatten().collect(),
        wall_ms: start.elapsed().as_millis() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_check_tag_is_enumerated() {
        for (_, tag) in CHECKS.iter() {
            assert!(KNOWN_TAGS.contains(tag), "{tag}");
        }
    }

    #[test]
    fn unknown_scenario_and_check() {
        let r = run_scenario(&ScenarioConfig::for_scenario("nope"));
        assert!(matches!(r, Err(Error::UnknownScenario(_))));
        let r = run_scenario(&ScenarioConfig::for_scenario("polar").with_checks(&["bogus"]));
        assert!(matches!(r, Err(Error::UnknownCheck { .. })));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(ScenarioConfig::from_json(r#"{"scenario": "polar", "colour": 3}"#).is_err());
        let cfg = ScenarioConfig::from_json(r#"{"scenario": "polar", "checks": ["split"]}"#).unwrap();
        assert_eq!(cfg.grid, DEFAULT_GRID);
    }

    #[test]
    fn polar_hessian_transfer_passes() {
        let r = run_scenario(&ScenarioConfig::for_scenario("polar").with_checks(&["hessian_transfer"])).unwrap();
        assert_eq!(r.outcome(), Outcome::Pass, "{}", r.to_json());
    }

    #[test]
    fn tightened_tolerance_keeps_residuals() {
        let cfg = ScenarioConfig::for_scenario("polar").with_checks(&["hessian_transfer", "oneill"]);
        let loose = run_scenario(&cfg).unwrap();
        let mut tight = cfg.clone();
        tight.tolerance = Some(1e-15);
        let tight = run_scenario(&tight).unwrap();
        for (a, b) in loose.checks.iter().zip(&tight.checks) {
            assert_eq!(a.residual, b.residual);
            assert_eq!(b.pass, b.residual <= 1e-15);
        }
    }

    #[test]
    fn failing_precondition_is_a_hypothesis_record() {
        let r = run_scenario(&ScenarioConfig::for_scenario("flat_cn").with_checks(&["fibre_integral"])).unwrap();
        assert_eq!(r.outcome(), Outcome::HypothesisViolated);
        assert_eq!(r.checks[0].name, "fibre_integral.hypothesis.preconditions");
        let text = r.to_json();
        assert!(text.contains("\"residual\": \"inf\""), "{text}");
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back.checks[0].residual, f64::INFINITY);
    }
}
