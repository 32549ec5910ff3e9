use std::fmt;

use pseudomode_core::Error as CoreError;
use serde_json::json;

/// Failure classes with their process exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum RunnerError {
    /// Bad input: scenario, flags or data files. Exit 1.
    Validation { message: String, missing_keys: Vec<String> },
    /// The numerics did not deliver (non-convergence, failed certification,
    /// threshold exceeded, non-physical fit). Exit 2.
    Numerical(String),
    /// Exit 3.
    Io(String),
}

impl RunnerError {
    pub fn validation(msg: impl Into<String>) -> Self {
        RunnerError::Validation { message: msg.into(), missing_keys: Vec::new() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunnerError::Validation { .. } => 1,
            RunnerError::Numerical(_) => 2,
            RunnerError::Io(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunnerError::Validation { .. } => "validation",
            RunnerError::Numerical(_) => "numerical",
            RunnerError::Io(_) => "io",
        }
    }

    /// One-line JSON object for standard error.
    pub fn to_json(&self) -> String {
        let mut v = json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        if let RunnerError::Validation { missing_keys, .. } = self {
            if !missing_keys.is_empty() {
                v["missing_keys"] = json!(missing_keys);
            }
        }
        v.to_string()
    }
}

impl fmt::Display for RunnerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunnerError::Validation { message, .. } => f.write_str(message),
            RunnerError::Numerical(m) | RunnerError::Io(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for RunnerError {}

impl From<CoreError> for RunnerError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::Stiffness { .. }
            | CoreError::Breakdown { .. }
            | CoreError::NonConvergence(_)
            | CoreError::Accuracy { .. }
            | CoreError::RankDeficient { .. }
            | CoreError::NonPhysicalFit { .. } => RunnerError::Numerical(msg),
            CoreError::Io(_) => RunnerError::Io(msg),
            _ => RunnerError::validation(msg),
        }
    }
}

impl From<std::io::Error> for RunnerError {
    fn from(e: std::io::Error) -> Self {
        RunnerError::Io(e.to_string())
    }
}

pub type RunnerResult<T> = std::result::Result<T, RunnerError>;
