use thiserror::Error;

use crate::sdp::SdpStatus;

/// Convenience alias used across the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single violated configuration invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Issue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {}", format_issues(.0))]
    Config(Vec<Issue>),

    #[error("unstable matrix (max real part {max_real_part:.3e})")]
    UnstableMatrix { max_real_part: f64 },

    #[error("unstable gain: closed loop has max real part {max_real_part:.3e}")]
    UnstableGain { max_real_part: f64 },

    #[error("ill-conditioned Lyapunov operator")]
    IllConditionedLyapunov,

    #[error("CARE failure: {0}")]
    CareFailure(String),

    #[error("matrix is not PSD (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("pole placement infeasible: {0}")]
    PlacementInfeasible(String),

    #[error("pole placement failed: {0}")]
    PlacementFailed(String),

    #[error("malformed SDP model: {0}")]
    Model(String),

    #[error("SDP solve ended with status {status:?}: {detail}")]
    Solver { status: SdpStatus, detail: String },

    #[error("gain recovery failure: {0}")]
    RecoveryFailure(String),

    #[error("sequential SDP aborted at iteration {iteration} with subproblem status {status:?}")]
    CcpAborted {
        iteration: usize,
        status: SdpStatus,
        history: Box<Vec<crate::traceinv::CcpIterate>>,
    },

    #[error("simulation error: {0}")]
    Simulation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn format_issues(issues: &[Issue]) -> String {
    issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
