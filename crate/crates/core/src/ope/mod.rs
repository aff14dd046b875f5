//! Off-policy evaluation on logged bandit feedback.
//!
//! A target policy is replayed over the log: at each step its action
//! probabilities are estimated by repeated draws from its current state,
//! then a single proposal is drawn and the policy learns from the logged
//! reward only when the proposal matches the logged action. The recorded
//! probabilities feed the importance weights `pi(A_t | X_t) / pi_0(A_t)`.

mod bootstrap;
mod estimators;
mod replay;
mod report;

pub use bootstrap::{cluster_bootstrap, BootstrapResult, DEFAULT_BOOTSTRAP_REPLICATES};
pub use estimators::{dr_estimate, importance_weights, snips, DEFAULT_DR_LAMBDA};
pub use replay::{fixed_policy_trace, replay_run, FixedPolicy, DEFAULT_PROBABILITY_DRAWS};
pub use report::{
    evaluate, horizon_curve, ope_report, weight_summary, write_weight_histogram_csv, Estimator,
    HistogramBin, OpeReport, WeightSummary,
};

use thiserror::Error;

use crate::agents::AgentError;

/// Tolerance for probability vectors summing to one.
pub const PROB_SUM_TOL: f64 = 1e-9;

/// One logged decision with its behaviour propensities.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedDecision {
    pub t: usize,
    pub context: Vec<f64>,
    pub action: usize,
    pub propensity: Vec<f64>,
    pub reward: f64,
    pub cluster: u64,
}

/// Target-policy record for one logged decision.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    /// Estimated `pi(. | x)`.
    pub probs: Vec<f64>,
    pub proposal: usize,
    pub matched: bool,
}

pub type PolicyTrace = Vec<TraceStep>;

#[derive(Debug, Error)]
pub enum OpeError {
    #[error("log is empty")]
    EmptyLog,

    #[error("all importance weights are zero")]
    DegenerateWeights,

    #[error("need at least two clusters, found {0}")]
    Cluster(usize),

    #[error("trace has {trace} steps but the log has {log}")]
    Misaligned { trace: usize, log: usize },

    #[error("logged action {action} at step {t} has propensity {propensity}")]
    Propensity { t: usize, action: usize, propensity: f64 },

    #[error("importance weight {weight} exceeds the bound {bound}")]
    WeightBound { weight: f64, bound: f64 },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error(transparent)]
    Agent(#[from] AgentError),
}

pub(crate) fn check_aligned(log: &[LoggedDecision], trace: &[TraceStep]) -> Result<(), OpeError> {
    if log.is_empty() {
        return Err(OpeError::EmptyLog);
    }
    if log.len() != trace.len() {
        return Err(OpeError::Misaligned {
            trace: trace.len(),
            log: log.len(),
        });
    }
    Ok(())
}
