use thiserror::Error;

#[derive(Debug, Error)]
pub enum TppError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("session {session_id}: {reason}")]
    Session { session_id: String, reason: String },

    #[error("invalid parameters for {family}: {reason}")]
    InvalidParams { family: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "simulation exceeded {max_events} events (branching factor {branching_factor}); \
         the process is likely explosive"
    )]
    Explosion {
        max_events: usize,
        branching_factor: String,
    },

    #[error("sampler failure: {0}")]
    Sampler(String),

    #[error("parse error at {location}: {reason}")]
    Parse { location: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl TppError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        TppError::InvalidInput(msg.into())
    }

    pub(crate) fn session(session_id: &str, reason: impl Into<String>) -> Self {
        TppError::Session {
            session_id: session_id.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, TppError>;
