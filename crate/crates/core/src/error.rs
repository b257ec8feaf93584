use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("chart mismatch: expected chart {expected}, got {found}")]
    ChartMismatch { expected: String, found: String },
    #[error("duplicate coordinate name `{0}`")]
    DuplicateCoordinate(String),
    #[error("chart must have at least one coordinate")]
    EmptyChart,
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("total degree {degree} exceeds the chart cap {cap}")]
    DegreeOverflow { degree: u32, cap: u32 },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("form degree {degree} invalid here (chart dimension {dim})")]
    BadDegree { degree: usize, dim: usize },
    #[error("distribution has corank {corank} at the point, expected corank 1")]
    NotCorankOne { corank: usize },
    #[error("k = {0} must be odd (k = 2l+1)")]
    EvenK(usize),
    #[error("forms are pointwise dependent at a sample point")]
    DependentForms,
    #[error("no polynomial annihilator basis found on this chart")]
    NoSymbolicAnnihilator,
    #[error("family violates stability hypotheses at (t, p): {0}")]
    HypothesisViolation(String),
    #[error("coefficient depends on a variable being projected out")]
    ResidualDependence,
    #[error("linear solve failed: {0}")]
    SolveFailure(String),
    #[error("trajectory left the chart box at t = {0}")]
    ChartExit(f64),
    #[error("{0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
