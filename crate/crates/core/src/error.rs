use thiserror::Error;

use crate::model::NodeId;

#[derive(Debug, Error)]
pub enum Error {
    /// An input failed validation. `field` names the offending field.
    #[error("invalid {field}: {rule}")]
    Validation { field: String, rule: String },

    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// The model has no feasible schedule (only possible with lower-bound
    /// demand rows).
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A solver produced a schedule that the SINR validator rejects.
    #[error("schedule failed validation: {0}")]
    InvalidSchedule(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            rule: rule.into(),
        }
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// True for errors caused by bad user input rather than internal bugs.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Contract(_) | Error::InvalidSchedule(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
