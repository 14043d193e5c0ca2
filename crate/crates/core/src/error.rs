use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NlsError {
    #[error("inadmissible parameters: {0}")]
    Params(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("zero field where a nonzero field is required")]
    ZeroField,
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("rescaled support does not fit the grid (lost fraction {0:.3e})")]
    SupportOverflow(f64),
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("scaling root outside representable range")]
    ScalingRange,
    #[error("shooting failed: {0}")]
    Shooting(String),
    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, NlsError>;
