//! Bandit policies.
//!
//! [`Agent::act`] only reads the agent's statistics (models may fill their
//! snapshot caches, which never changes later predictions), so it can be
//! called repeatedly to estimate the policy's action probabilities. All
//! randomness comes from the generator passed in by the caller.

mod linear;
mod pfnts;

pub use linear::{LinTs, LinUcb, RidgeArm};
pub use pfnts::{
    ArmParams, DecisionRule, EncodingMode, PfnConfig, PfnTs, SwitchEvent, DEFAULT_SWITCH_TIMES,
};

use rand::{Rng, RngCore};
use thiserror::Error;

use crate::predictive::PredictError;
use crate::subclt::SubCltError;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("arm {arm} out of range for {arms} arms")]
    ArmIndex { arm: usize, arms: usize },

    #[error("context has dimension {got}, agent expects {expected}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid agent parameter: {0}")]
    Param(String),

    #[error(transparent)]
    Model(#[from] PredictError),

    #[error(transparent)]
    SubClt(#[from] SubCltError),
}

pub trait Agent: Send {
    fn name(&self) -> &str;

    fn num_arms(&self) -> usize;

    /// Chooses an arm for context `x` at round `t` (1-based).
    fn act(&mut self, x: &[f64], t: usize, rng: &mut dyn RngCore) -> Result<usize, AgentError>;

    /// Records the reward observed for `arm` at round `t`.
    fn update(&mut self, x: &[f64], arm: usize, reward: f64, t: usize) -> Result<(), AgentError>;
}

/// Index of the largest value, ties broken uniformly with `rng`.
///
/// The generator is consumed only when there is a tie.
pub fn argmax_random_tie(values: &[f64], rng: &mut dyn RngCore) -> usize {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..values.len()).filter(|&i| values[i] == best).collect();
    match ties.len() {
        0 => 0,
        1 => ties[0],
        k => ties[rng.random_range(0..k)],
    }
}

pub(crate) fn check_arm(arm: usize, arms: usize) -> Result<(), AgentError> {
    if arm < arms {
        Ok(())
    } else {
        Err(AgentError::ArmIndex { arm, arms })
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<(), AgentError> {
    if expected == got {
        Ok(())
    } else {
        Err(AgentError::Dimension { expected, got })
    }
}

/// Picks arms uniformly at random.
#[derive(Debug, Clone)]
pub struct Uniform {
    name: String,
    arms: usize,
}

impl Uniform {
    pub fn new(name: &str, arms: usize) -> Self {
        Self {
            name: name.to_owned(),
            arms,
        }
    }
}

impl Agent for Uniform {
    fn name(&self) -> &str {
        &self.name
    }

    fn num_arms(&self) -> usize {
        self.arms
    }

    fn act(&mut self, _x: &[f64], _t: usize, rng: &mut dyn RngCore) -> Result<usize, AgentError> {
        Ok(rng.random_range(0..self.arms))
    }

    fn update(&mut self, _x: &[f64], arm: usize, _r: f64, _t: usize) -> Result<(), AgentError> {
        check_arm(arm, self.arms)
    }
}
