use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-positive total depth {depth} at cell ({i}, {j})")]
    NonPositiveDepth { i: usize, j: usize, depth: f64 },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("time step {dt} violates the CFL limit; largest stable dt is {max_dt}")]
    Cfl { dt: f64, max_dt: f64 },

    #[error("halo of {available} cells is smaller than the required {required}")]
    Halo { required: usize, available: usize },

    #[error("launch rejected: {0}")]
    LaunchRejected(String),

    #[error("invalid block configuration: {0}")]
    Block(String),

    #[error("{0}")]
    State(String),

    #[error("stage {0} out of range 0..=6")]
    Stage(usize),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty trace")]
    EmptyTrace,

    #[error("measurement inconsistency: {0}")]
    Measurement(String),

    #[error("config: {0}")]
    Config(String),

    #[error("unknown device preset '{0}'")]
    UnknownDevice(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
