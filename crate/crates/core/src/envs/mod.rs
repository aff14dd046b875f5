//! Reward-generating environments.
//!
//! Rounds are 1-based. Every environment exposes the true mean reward of
//! each arm alongside the context, so regret can be computed exactly.

mod bart;
mod classification;
mod friedman;
mod logged;
mod synthetic;

pub use bart::{
    sample_bart_function, sample_bart_function_with, sample_split_probs, sample_tree,
    BartFunction, BartPriorSpec, Tree,
};
pub use classification::{ingest_csv, ClassificationData, ClassificationEnv, DEFAULT_HORIZON_CAP};
pub use friedman::{arm2_mean, friedman1, friedman2, friedman3, Arm2Variant};
pub use logged::{
    generate_logged_data, read_logged_csv, read_logged_file, write_logged_csv, EngagementDgp,
};
pub use synthetic::{
    hetero_noise, sample_linear_betas, FriedmanBase, MeanFunction, Scenario, SyntheticEnv,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("round {t} is beyond the horizon of {horizon}")]
    HorizonExhausted { t: usize, horizon: usize },

    #[error("rounds start at 1")]
    ZeroRound,

    #[error("arm {arm} out of range for {arms} arms")]
    ArmIndex { arm: usize, arms: usize },

    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("cannot parse {value:?} in row {row}, column {column:?}")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<csv::Error> for EnvError {
    fn from(e: csv::Error) -> Self {
        EnvError::Io(e.to_string())
    }
}

impl From<std::io::Error> for EnvError {
    fn from(e: std::io::Error) -> Self {
        EnvError::Io(e.to_string())
    }
}

/// What the agent sees at a round, plus the true arm means.
#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub context: Vec<f64>,
    pub means: Vec<f64>,
}

pub trait Environment: Send + Sync {
    fn name(&self) -> &str;

    fn num_arms(&self) -> usize;

    fn context_dim(&self) -> usize;

    /// Number of rounds available, if finite.
    fn horizon_limit(&self) -> Option<usize> {
        None
    }

    fn observe(&self, t: usize) -> Result<Round, EnvError>;

    /// Realised reward of `arm` at round `t`. Repeated calls agree.
    fn reward(&self, t: usize, arm: usize) -> Result<f64, EnvError>;
}

pub(crate) fn check_round(t: usize, horizon: Option<usize>) -> Result<(), EnvError> {
    if t == 0 {
        return Err(EnvError::ZeroRound);
    }
    match horizon {
        Some(h) if t > h => Err(EnvError::HorizonExhausted { t, horizon: h }),
        _ => Ok(()),
    }
}

pub(crate) fn check_arm(arm: usize, arms: usize) -> Result<(), EnvError> {
    if arm < arms {
        Ok(())
    } else {
        Err(EnvError::ArmIndex { arm, arms })
    }
}
