use thiserror::Error;

/// Everything that can go wrong while configuring or driving a simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvacError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("patch ({x}, {y}) lies outside the {width}x{height} grid")]
    OutOfGrid {
        x: i32,
        y: i32,
        width: usize,
        height: usize,
    },

    #[error("density must be non-negative, got {0}")]
    NegativeDensity(f64),

    #[error("competitor count {0} exceeds the supported maximum")]
    CompetitorCountTooLarge(usize),

    #[error("no agents remain; the run is already complete")]
    RunComplete,

    #[error("run stalled at tick {tick} with {remaining} agents remaining")]
    Stalled { tick: u64, remaining: usize },

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("plan parse error on line {line}: {message}")]
    PlanParse { line: usize, message: String },

    #[error("results table error: {0}")]
    Results(String),

    #[error("empty group: {0}")]
    EmptyGroup(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for EvacError {
    fn from(e: std::io::Error) -> Self {
        EvacError::Io(e.to_string())
    }
}

impl From<csv::Error> for EvacError {
    fn from(e: csv::Error) -> Self {
        EvacError::Results(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, EvacError>;
