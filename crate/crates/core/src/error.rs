use thiserror::Error;

/// Coarse error classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    NotApplicable,
    Infeasible,
    Verification,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("index {index} outside 1..={horizon}")]
    HorizonExceeded { index: u64, horizon: u64 },

    #[error("insufficient horizon: {0}")]
    InsufficientHorizon(String),

    #[error("invalid interval [{lo}, {hi}]: need 1 < lo < hi < inf")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("start index {start_index}: k = {term} must exceed {threshold}")]
    InvalidStart {
        start_index: u64,
        term: u64,
        threshold: f64,
    },

    #[error("lambda = {lambda} outside [{lo}, {hi}]")]
    OutsideInterval { lambda: f64, lo: f64, hi: f64 },

    #[error("magnitude overflow: log-magnitude {log_magnitude} exceeds {threshold}")]
    Overflow { log_magnitude: f64, threshold: f64 },

    #[error("magnitude underflow: log-magnitude {log_magnitude} is below the normal f64 range")]
    Underflow { log_magnitude: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("no closed-form tail bound for {0}")]
    MissingTailBound(String),

    #[error("constructed vector fails the grid check: error {error} >= {accuracy} at lambda = {lambda}")]
    ConstructionInvariantViolated {
        lambda: f64,
        error: f64,
        accuracy: f64,
    },

    #[error("stage {stage} infeasible: margin guard underflows (blocked by condition {blocking})")]
    StageInfeasible { stage: usize, blocking: usize },

    #[error("invariant violated: {0}")]
    InvariantViolated(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidSequence(_)
            | Error::InvalidInterval { .. }
            | Error::InvalidParameter(_)
            | Error::InvalidStart { .. }
            | Error::OutsideInterval { .. } => ErrorClass::Validation,
            Error::NotApplicable(_) | Error::MissingTailBound(_) => ErrorClass::NotApplicable,
            Error::HorizonExceeded { .. }
            | Error::InsufficientHorizon(_)
            | Error::Overflow { .. }
            | Error::Underflow { .. }
            | Error::StageInfeasible { .. } => ErrorClass::Infeasible,
            Error::ConstructionInvariantViolated { .. } | Error::InvariantViolated(_) => {
                ErrorClass::Verification
            }
        }
    }

    /// Short machine-readable tag.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::InvalidSequence(_) => "invalid_sequence",
            Error::HorizonExceeded { .. } => "horizon_exceeded",
            Error::InsufficientHorizon(_) => "insufficient_horizon",
            Error::InvalidInterval { .. } => "invalid_interval",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::InvalidStart { .. } => "invalid_start",
            Error::OutsideInterval { .. } => "outside_interval",
            Error::Overflow { .. } => "overflow",
            Error::Underflow { .. } => "underflow",
            Error::NotApplicable(_) => "not_applicable",
            Error::MissingTailBound(_) => "missing_tail_bound",
            Error::ConstructionInvariantViolated { .. } => "construction_invariant_violated",
            Error::StageInfeasible { .. } => "stage_infeasible",
            Error::InvariantViolated(_) => "invariant_violated",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
