use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Partial trajectory returned when a geodesic leaves its chart.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialPath {
    pub points: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown identifier `{name}` at line {line}, column {column}")]
    UnknownIdentifier { name: String, line: usize, column: usize },
    #[error("expression text exceeds {limit} bytes")]
    ExpressionTooLong { limit: usize },
    #[error("expression uses variable x{index} but the field has arity {arity}")]
    VariableOutOfRange { index: usize, arity: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point {point:?} lies outside the chart domain")]
    OutOfDomain { point: Vec<f64> },
    #[error("point {point:?} is within {step} of the chart boundary")]
    NearBoundary { point: Vec<f64>, step: f64 },
    #[error("metric is degenerate at {point:?}")]
    DegenerateMetric { point: Vec<f64> },
    #[error("geodesic left the chart after {} steps", .0.points.len().saturating_sub(1))]
    LeftChart(Box<PartialPath>),
    #[error("differential has rank below {expected} at {point:?}")]
    RankDeficient { expected: usize, point: Vec<f64> },

    #[error("form degree {degree} does not match plane dimension {plane_dim}")]
    DegreeMismatch { degree: usize, plane_dim: usize },
    #[error("frame is not orthonormal (Gram residual {residual:e})")]
    NotOrthonormal { residual: f64 },

    #[error("fibre domain axis {axis} is not periodic; fibre pushdowns need compact fibres")]
    NonCompactFibre { axis: usize },
    #[error("grid too coarse: {got} points per axis, need at least {min}")]
    GridTooCoarse { got: usize, min: usize },
    #[error("fibres are not torus orbits with angle coordinates")]
    NotOrbitChart,
    #[error("variation field is not horizontal (vertical part {vertical:e})")]
    NotHorizontal { vertical: f64 },
    #[error("fibre is not Lagrangian (omega residual {residual:e})")]
    FibreNotLagrangian { residual: f64 },
    #[error("fibre is not minimal (|H| = {mean_curvature:e})")]
    FibreNotMinimal { mean_curvature: f64 },
    #[error("fibre is not coassociative (phi residual {residual:e})")]
    FibreNotCoassociative { residual: f64 },
    #[error("orbit profile vanishes at {at}; the circle action is not free there")]
    ProfileVanishes { at: f64 },
    #[error("midpoint convexity needs affine base coordinates (Christoffel residual {residual:e})")]
    CurvedBaseCoordinates { residual: f64 },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("unknown check `{check}` for scenario `{scenario}`")]
    UnknownCheck { scenario: String, check: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
}
