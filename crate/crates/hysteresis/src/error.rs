use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("node index {index} out of range for a grid with {steps} steps")]
    NodeOutOfRange { index: usize, steps: usize },

    #[error("paths live on different grids")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{paths} fitting paths are fewer than 10x the basis dimension {dimension}")]
    InsufficientPaths { paths: usize, dimension: usize },

    #[error("ill-conditioned regression at node {node}: condition number {condition:.3e}")]
    IllConditioned { node: usize, condition: f64 },

    #[error("node {0} was not prepared by the conditioner")]
    NodeNotPrepared(usize),

    #[error("near-singular denominator 1 + d2h = {value:.3e} at node {node}")]
    SingularDenominator { node: usize, value: f64 },

    #[error("fixed point did not converge after {iterations} iterations (last update {last:.3e})")]
    NoConvergence {
        iterations: usize,
        last: f64,
        trace: Vec<f64>,
    },

    #[error("csv: {0}")]
    Csv(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
