use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: row {row}: {msg}")]
    Parse { path: String, row: u64, msg: String },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Parse { .. } => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub(crate) fn parse(path: &str, row: u64, msg: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.to_string(),
            row,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(context: &str, err: std::io::Error) -> Self {
        CliError::Runtime(format!("{context}: {err}"))
    }
}

impl From<ppos_core::Error> for CliError {
    fn from(err: ppos_core::Error) -> Self {
        use ppos_core::Error as E;
        match err {
            E::NonFiniteEstimate { .. } | E::InvalidComparison { .. } => {
                CliError::Runtime(err.to_string())
            }
            _ => CliError::Config(err.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
