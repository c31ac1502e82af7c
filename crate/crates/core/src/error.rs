use std::path::PathBuf;

/// Errors produced by the library and the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid constellation spec: {0}")]
    InvalidSpec(String),
    #[error("constellation grid has zero energy")]
    AllZeroGrid,
    #[error("modulation order {q} exceeds grid size {grid}")]
    QTooLarge { q: usize, grid: usize },
    #[error("level {level} out of range for modulation order {q}")]
    LevelOutOfRange { level: usize, q: usize },
    #[error("covariance matrix is not positive semidefinite")]
    NotPsd,
    #[error("pilot covariance matrix is singular")]
    SingularXi,
    #[error("type I transmit coefficient needs a nonzero channel estimate")]
    ZeroChannelPhase,
    #[error("combined constellation would have {m} points, cap is {cap}")]
    TooManyPoints { m: u128, cap: usize },
    #[error("minimum distance must be positive, got {0}")]
    NonpositiveDistance(f64),
    #[error("received sample amplified by {sample}, constellation by {constellation}")]
    AmplificationMismatch { sample: f64, constellation: f64 },
    #[error("no votes to aggregate")]
    NoVotes,
    #[error("function range is degenerate (f_min = f_max = {0})")]
    DegenerateRange(f64),
    #[error("analog log-domain processing needs positive inputs, got {0}")]
    NonpositiveInput(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// Process exit code used by the CLI: 2 for configuration problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidSpec(_) | Error::QTooLarge { .. } => 2,
            _ => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
