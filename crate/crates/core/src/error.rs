use thiserror::Error;

/// Failure while reading netlist text.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown value suffix in `{token}`")]
    UnknownSuffix { line: usize, token: String },
    #[error("line {line}: value of `{element}` must be positive, got {value}")]
    NonPositive { line: usize, element: String, value: f64 },
    #[error("line {line}: duplicate element name `{name}`")]
    Duplicate { line: usize, name: String },
}

/// Errors raised by the analysis pipelines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("invalid netlist: {0}")]
    InvalidNetlist(String),

    #[error("singular system at {freq_hz} Hz: {hint}")]
    Singular { freq_hz: f64, hint: String },

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("design infeasible: {0}")]
    Infeasible(String),

    #[error("Q extraction failed: {0}")]
    Extraction(String),

    #[error("output error: {0}")]
    Output(String),
}

pub type Result<T> = std::result::Result<T, Error>;
