use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid sizes, indices or settings supplied by the caller.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input outside an operation's domain (empty batch, out-of-range feature, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Federated message or aggregation contract violated.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("objective returned non-finite value {value} at parameters {params:?}")]
    NonFinite { value: f64, params: Vec<f64> },

    #[error("client {client}, round {round}: {source}")]
    Client {
        client: String,
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    /// Artifact or feature file written under an incompatible version.
    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by user input rather than a fault in the pipeline.
    pub fn is_user_error(&self) -> bool {
        match self {
            Error::Config(_) | Error::Parse(_) | Error::Schema(_) | Error::Domain(_) => true,
            Error::Io(e) => matches!(
                e.kind(),
                std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied
            ),
            Error::Client { source, .. } => source.is_user_error(),
            Error::Protocol(_) | Error::NonFinite { .. } => false,
        }
    }

    pub(crate) fn for_client(self, client: &str, round: usize) -> Error {
        Error::Client {
            client: client.to_string(),
            round,
            source: Box::new(self),
        }
    }
}
