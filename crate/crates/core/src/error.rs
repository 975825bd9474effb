use thiserror::Error;

/// Errors produced by the renorming toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenormError {
    /// A numeric argument is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The input does not satisfy the hypothesis of a probe. This is not a
    /// verification failure.
    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),

    /// An invariant that must hold for valid inputs was broken. Usually
    /// signals a norm oracle that is not a norm.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("unbounded or degenerate body: {0}")]
    DegenerateBody(String),

    #[error("stabilization beyond budget: needs stage {needed}, budget is {budget}")]
    StabilizationBeyondBudget { needed: usize, budget: usize },

    #[error("cascade build failed at stage {stage}: {inequality}")]
    Build { stage: usize, inequality: String },

    #[error("insufficient stages for tau = {tau}: no admissible stage within budget {budget}")]
    InsufficientStages { tau: f64, budget: usize },

    #[error("radius {radius} not reachable within budget {budget}: needs eta below {required_eta:e}")]
    RadiusUnreachable {
        radius: f64,
        budget: usize,
        required_eta: f64,
    },

    #[error("slice possibly empty: {0}")]
    SlicePossiblyEmpty(String),

    #[error("near-norming vector not found at step {step}: best pairing {best} below {required}")]
    NearNormingNotFound { step: usize, best: f64, required: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, RenormError>;

impl From<serde_json::Error> for RenormError {
    fn from(e: serde_json::Error) -> Self {
        RenormError::Config(e.to_string())
    }
}

impl From<std::io::Error> for RenormError {
    fn from(e: std::io::Error) -> Self {
        RenormError::Io(e.to_string())
    }
}

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(RenormError::Parameter(msg.into()))
}
