use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] relinfo::Error),

    /// Malformed input file content, located by line and column.
    #[error("{file}: line {line}, column {column}: {message}")]
    Input {
        file: String,
        line: u64,
        column: String,
        message: String,
    },

    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },

    #[error("cannot write {path}: {message}")]
    Write { path: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl CliError {
    /// 2 for validation failures, 3 for numerical or estimation failures,
    /// 1 when the report cannot be written.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if !e.is_validation() => 3,
            CliError::Write { .. } => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
