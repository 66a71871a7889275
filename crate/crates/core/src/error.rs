use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("measure has zero total mass")]
    ZeroMass,
    #[error("not a sub-measure: weight at {point} exceeds the available weight")]
    NotSubmeasure { point: String },
    #[error("mass mismatch: {0}")]
    MassMismatch(String),
    #[error("barycenters differ: {left} vs {right}")]
    MeanMismatch { left: String, right: String },
    #[error("point {0} lies outside [0, 1]")]
    PointOutOfRange(String),
    #[error("negative weight {weight} at {point}")]
    NegativeWeight { point: String, weight: String },
    #[error("kernel has no transition for point {point}")]
    MissingTransition { point: String },
    #[error("invalid kernel row at {point}: {reason}")]
    InvalidTransition { point: String, reason: String },
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
    #[error("signal precision {0} outside [1/2, 1]")]
    InvalidPrecision(String),
    #[error("support point {point} is not on the grid")]
    OffGridSupport { point: String },
    #[error("requested mass {requested} exceeds the greedy mass {max}")]
    MassTooLarge { requested: String, max: String },
    #[error("LP would need {vars} variables, cap is {cap}")]
    HorizonTooLarge { vars: usize, cap: usize },
    #[error("LP infeasible for a well-formed spec: {0}")]
    InfeasibleSpec(String),
    #[error("tolerance not reached within {periods} periods")]
    ToleranceUnachievable { periods: usize },
    #[error("incentive constraint violated in period {period}: {kind}")]
    IcViolation { period: usize, kind: IcViolationKind },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcViolationKind {
    /// Stopped mean below the adoption threshold.
    MeanBelowThreshold,
    /// Eliminated measure not contained in the residual flow.
    ExceedsResidual,
    /// Plan length differs from the horizon.
    Dimension,
}

impl std::fmt::Display for IcViolationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            IcViolationKind::MeanBelowThreshold => "stopped mean below threshold",
            IcViolationKind::ExceedsResidual => "eliminated mass exceeds residual flow",
            IcViolationKind::Dimension => "plan length does not match horizon",
        };
        f.write_str(s)
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
