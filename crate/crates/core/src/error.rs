use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty domain")]
    EmptyDomain,

    #[error("invalid exponent {0}")]
    InvalidExponent(f64),

    #[error("grid too coarse for |x|, refine h_ξ (phase step {phase_step:.3e} rad per cell, limit {limit})")]
    GridTooCoarse { phase_step: f64, limit: f64 },

    #[error("ragged grid: expected {expected} values, found {found}")]
    RaggedGrid { expected: usize, found: usize },

    #[error("exact rescaling identity only for parabola")]
    RescaleNeedsParabola,

    #[error("exact check needs disjoint caps")]
    OverlappingCaps,

    #[error("pigeonhole packets first: packet norms spread by factor {spread:.3} > 2")]
    UnequalPackets { spread: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("random refinement failed after {attempts} attempts: {diagnostics}")]
    RefinementFailed { attempts: usize, diagnostics: String },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
