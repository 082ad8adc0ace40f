use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty grid: {0}")]
    EmptyGrid(String),

    /// The landscape grid could not resolve a barrier (saddle on or beyond the box boundary).
    #[error("critical depth unresolved: {0}")]
    Unresolved(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// A modelling assumption required by the requested operation does not hold.
    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("CFL condition violated: dt = {dt:e} exceeds stable limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::DimensionMismatch { .. } | Error::EmptyGrid(_) => 2,
            Error::Assumption(_) => 3,
            Error::Unresolved(_) | Error::Cfl { .. } | Error::Numerical(_) | Error::Io(_) => 4,
        }
    }
}
