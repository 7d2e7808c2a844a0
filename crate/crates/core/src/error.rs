use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed model or spec: bad indices, shape mismatch, wrong dimensions.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("chain is not irreducible; unreachable states: {unreachable:?}")]
    Reducible { unreachable: Vec<usize> },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("negative v entry {value:e} at state {state}, coordinate {coord}")]
    Negative {
        state: usize,
        coord: usize,
        value: f64,
    },

    /// Parameters outside the domain where the formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown experiment `{name}`; valid kinds: {}", valid.join(", "))]
    UnknownExperiment { name: String, valid: Vec<String> },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Structural(_) => "structural",
            Error::Reducible { .. } => "reducible",
            Error::Numerical(_) => "numerical",
            Error::Negative { .. } => "negative",
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::UnknownExperiment { .. } => "unknown-experiment",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
