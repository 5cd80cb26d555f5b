use thiserror::Error;

/// Errors produced by the geometry, flow and oracle routines.
#[derive(Debug, Error)]
pub enum GeonError {
    #[error("radial coordinate must be non-negative, got s = {0}")]
    NegativeRadius(f64),

    #[error("q = {q} is outside the tabulated range [0, {q_max}); extend the profile table")]
    OutOfRange { q: f64, q_max: f64 },

    #[error("singular axis: {0}")]
    SingularAxis(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("flow left its validity region at t = {t}: {reason}")]
    FlowDomain { t: f64, reason: String },

    #[error("non-finite state at t = {t} after {retries} step halvings")]
    NonFinite { t: f64, retries: u32 },

    #[error("fit window: {0}")]
    FitWindow(String),

    #[error("oracle probe: {0}")]
    Probe(String),

    #[error("format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GeonError>;
