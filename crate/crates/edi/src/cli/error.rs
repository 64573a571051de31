use edi_service::ClientError;
use thiserror::Error;

/// Process exit statuses. Stable across releases.
pub mod exit {
    pub const OK: i32 = 0;
    pub const LOCAL: i32 = 2;
    pub const DENIED: i32 = 3;
    pub const REJECTED: i32 = 4;
    pub const VERIFICATION: i32 = 5;
    pub const NETWORK: i32 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input, missing keys or maps, translation failures, I/O.
    #[error("{0}")]
    Local(String),

    /// Authentication failed or the session may not do this.
    #[error("{0}")]
    Denied(String),

    /// The VAN refused the message (screening, duplicate control).
    #[error("rejected: {0}")]
    Rejected(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("{0}")]
    Network(String),
}

impl CliError {
    pub fn local(e: impl std::fmt::Display) -> Self {
        Self::Local(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Local(_) => exit::LOCAL,
            Self::Denied(_) => exit::DENIED,
            Self::Rejected(_) => exit::REJECTED,
            Self::Verification(_) => exit::VERIFICATION,
            Self::Network(_) => exit::NETWORK,
        }
    }
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        let text = e.to_string();
        match e {
            ClientError::Api { status, .. } => match status {
                401 | 403 => Self::Denied(text),
                409 | 422 => Self::Rejected(text),
                500.. => Self::Network(text),
                _ => Self::Local(text),
            },
            ClientError::NoSession => Self::Denied(text),
            ClientError::Network(_) | ClientError::Protocol(_) => Self::Network(text),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Local(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
