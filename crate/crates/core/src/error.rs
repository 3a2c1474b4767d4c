use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate vortex configuration: {0}")]
    DegenerateConfig(String),

    #[error(
        "pairing invalid: vortex {index} moved by {displacement:e}, more than the separation {rho:e}"
    )]
    PairingInvalid {
        index: usize,
        displacement: f64,
        rho: f64,
    },

    #[error("point ({x}, {y}) lies outside the open unit disk")]
    OutsideDomain { x: f64, y: f64 },

    #[error("grid node {node} coincides with vortex {vortex}")]
    NodeOnVortex { node: usize, vortex: usize },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("fields live on different grids ({0} vs {1})")]
    GridMismatch(String, String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("malformed {kind}: {message}")]
    Format { kind: &'static str, message: String },

    #[error("{path}: {message}")]
    ConfigParse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(kind: &'static str, message: impl Into<String>) -> Self {
        Error::Format {
            kind,
            message: message.into(),
        }
    }
}
