use serde_json::json;
use thiserror::Error;

use crate::output::Check;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] vk_ribbon::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("{} check(s) failed", .0.len())]
    Assertion(Vec<Check>),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(_) => "computation",
            CliError::Io(_) => "io",
            CliError::Assertion(_) => "assertion",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Assertion(_) => 1,
            CliError::Config(_) => 2,
            CliError::Core(_) | CliError::Io(_) => 3,
        }
    }

    /// One-line JSON summary written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({
            "status": "error",
            "kind": self.kind(),
            "message": self.to_string(),
        });
        if let CliError::Assertion(failed) = self {
            v["failed"] = serde_json::to_value(failed).unwrap_or_default();
        }
        v
    }
}
