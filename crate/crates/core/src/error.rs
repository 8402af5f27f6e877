use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates a type invariant. `field` is the dotted
    /// path of the offending key.
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("failed to parse scenario: {0}")]
    Parse(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("empty trace")]
    EmptyTrace,

    #[error("illegal protocol event {event} in state {state}")]
    IllegalTransition { state: String, event: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Prefix the field path, used when validation descends into nested
    /// config sections.
    pub fn within(self, prefix: &str) -> Self {
        match self {
            Error::Invalid { field, reason } => Error::Invalid {
                field: format!("{prefix}.{field}"),
                reason,
            },
            other => other,
        }
    }
}
