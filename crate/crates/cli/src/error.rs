use std::path::Path;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// Malformed input file; `row` is the 1-based line in the file.
    #[error("{path}, line {row}: {message}")]
    Parse { path: String, row: usize, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Analysis(#[from] anoht::Error),
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Config(_) => "config",
            CliError::Analysis(_) => "analysis",
            CliError::Json(_) => "serialization",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Analysis(_) => 1,
            _ => 2,
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Report<'a> {
            kind: &'a str,
            message: String,
            #[serde(skip_serializing_if = "Option::is_none")]
            row: Option<usize>,
        }
        let row = match self {
            CliError::Parse { row, .. } => Some(*row),
            _ => None,
        };
        serde_json::json!({ "error": Report { kind: self.kind(), message: self.to_string(), row } }).to_string()
    }
}
