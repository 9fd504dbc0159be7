use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("operation requires a symmetric grid (x_min = -x_max), got [{x_min}, {x_max})")]
    AsymmetricGrid { x_min: f64, x_max: f64 },

    #[error("state does not fit the grid: {0}")]
    StateOffGrid(String),

    #[error("invalid state preset: {0}")]
    InvalidPreset(String),

    #[error("cannot normalize a state with zero norm")]
    ZeroNorm,

    #[error("meter outcome at x_m = {outcome} has probability density {density:e}, too small to condition on")]
    ZeroProbabilityOutcome { outcome: f64, density: f64 },

    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("Fock truncation inadequate: {0}")]
    Truncation(String),

    #[error("configuration errors:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{path}: {source}")]
    InConfig {
        path: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io { .. } => 4,
            Error::InConfig { source, .. } => source.exit_code(),
            _ => 3,
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
