use std::io;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("malformed state dump: {0}")]
    Format(String),
    #[error(transparent)]
    Core(#[from] vqsim_core::Error),
    #[error("usage: {0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verification(String),
}
