//! Error taxonomy shared across the crate.
//!
//! Infeasibility (no plan exists, target unreachable) is kept distinct from
//! structural and configuration problems so the CLI can map them to separate
//! exit codes.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An allocation was expected to be a member of a candidate set.
    #[error("allocation {0} is not a member of the candidate set")]
    NotAMember(String),

    /// A tractability bound was exceeded.
    #[error("{what} {got} exceeds the supported limit of {limit}")]
    SizeLimit {
        what: &'static str,
        got: u64,
        limit: u64,
    },

    /// Shapes of two values do not line up (agent counts, vector lengths, ...).
    #[error("structural mismatch: {0}")]
    Structural(String),

    /// A subtask target cannot be reached at all (walled off).
    #[error("subtask {subtask} is unreachable: {detail}")]
    UnreachableSubtask { subtask: usize, detail: String },

    /// No feasible plan or trajectory exists under the given constraints.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// An invalid parameter or option combination.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A scenario failed validation.
    #[error("invalid scenario: {0}")]
    Scenario(String),

    /// Probability mass vanished or turned non-finite.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for errors that mean "no solution exists" rather than "bad input".
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::Infeasible(_) | Error::UnreachableSubtask { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
