use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    Malformed(String),

    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("invalid string: {0}")]
    InvalidString(String),

    #[error("branch at prefix '{prefix}' sums to {sum}, expected 1")]
    Normalization { prefix: String, sum: f64 },

    #[error("branch at prefix '{prefix}' has invalid probability {value}")]
    InvalidProbability { prefix: String, value: f64 },

    #[error("prefix '{0}' is reachable with positive probability but has no branch")]
    UndefinedPrefix(String),

    #[error("prefix '{0}' has a branch but its parent prefix is not defined")]
    UnreachablePrefix(String),

    #[error("paths through prefix '{prefix}' cannot terminate within max_len {max_len}")]
    NonTermination { prefix: String, max_len: usize },

    #[error("no branch defined for prefix '{0}'")]
    MissingBranch(String),

    #[error("prompt '{0}' is terminal")]
    TerminalPrompt(String),

    #[error("'{string}' does not extend prompt '{prompt}'")]
    NotExtension { string: String, prompt: String },

    #[error("'{0}' is not a terminal string")]
    NotTerminal(String),

    #[error("trajectory set exceeds the enumeration limit of {limit}; use a sampling-based estimator")]
    NotEnumerable { limit: usize },

    #[error("invalid intervention: {0}")]
    InvalidIntervention(String),

    #[error("invalid structure '{name}': {reason}")]
    InvalidStructure { name: String, reason: String },

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("structure '{structure}' has no table entry for '{string}' and no default")]
    TabulatedMiss { structure: String, string: String },

    #[error("callback for structure '{structure}' failed: {reason}")]
    Callback { structure: String, reason: String },

    #[error("structure '{structure}' returned compliance {value} outside [0, 1]")]
    ComplianceRange { structure: String, value: f64 },

    #[error("empty vector")]
    EmptyVector,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate core: all components are zero, normalization undefined")]
    DegenerateCore,

    #[error("degenerate prompt: {0}")]
    DegeneratePrompt(String),

    #[error("vector is not normalized: {0}")]
    NotNormalized(String),

    #[error("invalid escort parameters: {0}")]
    InvalidEscort(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("alphabet mismatch between models")]
    AlphabetMismatch,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Regex(#[from] regex::Error),
}

impl Error {
    /// Errors caused by unreadable or unparsable inputs rather than by
    /// well-formed inputs that fail validation.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Json(_) | Error::Malformed(_))
    }
}
