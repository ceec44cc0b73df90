use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input row. `line` is 1-based and counts the header.
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {found} rows, at least {required} required")]
    InsufficientData { found: usize, required: usize },

    #[error("configuration error: {0}")]
    Config(String),

    /// The input carries no usable structure (e.g. constant curvature, no knee).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("phase {phase} is degenerate: {len} samples, at least {required} required")]
    DegeneratePhase {
        phase: u8,
        len: usize,
        required: usize,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Domain(_) => "domain",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::Config(_) => "config",
            Error::Degenerate(_) => "degenerate_input",
            Error::DegeneratePhase { .. } => "degenerate_phase",
            Error::Contract(_) => "contract",
            Error::Io(_) => "io",
        }
    }
}
