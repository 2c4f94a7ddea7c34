use thiserror::Error;

/// Errors raised by mesh construction, assembly and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("block {block} (element {element}) is not positive definite")]
    BlockNotSpd { block: usize, element: usize },

    #[error("factorisation failed: {0}")]
    Factorisation(String),

    #[error("solver did not converge at time step {step}: residual {residual:e} after {iterations} iterations")]
    StepNotConverged {
        step: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
