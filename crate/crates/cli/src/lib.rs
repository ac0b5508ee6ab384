//! Scenario runner behind the `fkgap` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod output;
pub mod pipeline;
pub mod plotdata;
pub mod scenario;

use serde::{Deserialize, Serialize};

/// Everything that can stop a command.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] fkgap_core::Error),
}

impl Failure {
    /// 0 ok, 2 convergence or degeneracy, 3 everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Core(fkgap_core::Error::Convergence { .. } | fkgap_core::Error::Degeneracy(_)) => 2,
            _ => 3,
        }
    }

    pub fn info(&self) -> ErrorInfo {
        let (last_residual, history, partial) = match self {
            Failure::Core(fkgap_core::Error::Convergence {
                last_residual,
                history,
                partial,
                ..
            }) => (
                Some(*last_residual),
                history.clone(),
                partial.as_ref().and_then(|p| serde_json::to_value(p).ok()),
            ),
            _ => (None, Vec::new(), None),
        };
        ErrorInfo {
            code: match self {
                Failure::Schema(_) => "schema".into(),
                Failure::Io(_) => "io".into(),
                Failure::Core(e) => e.code().into(),
            },
            message: self.to_string(),
            last_residual,
            history,
            partial,
        }
    }
}

/// Machine-readable error record stored in report.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub code: String,
    pub message: String,
    pub last_residual: Option<f64>,
    pub history: Vec<f64>,
    /// Partial solve state at the failure, when available.
    pub partial: Option<serde_json::Value>,
}
