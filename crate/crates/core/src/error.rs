use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite car-following input ({what}); simulation state is corrupted")]
    NonFinite { what: &'static str },

    #[error("invalid parameters for {model}: {reason}")]
    InvalidParams { model: &'static str, reason: String },

    #[error("no equilibrium exists at speed {speed} (model maximum {max_speed})")]
    NoEquilibrium { speed: f64, max_speed: f64 },

    #[error("vehicle overlaps its leader (gap {gap} m)")]
    Collision { gap: f64 },

    #[error("leader change without an old leader or merge context")]
    MissingLeaderContext,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no convergence within {horizon} s")]
    NoConvergence { horizon: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("breakdown already occurs at zero mainline inflow")]
    DegenerateConfig,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("all candidates infeasible")]
    AllInfeasible,

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
