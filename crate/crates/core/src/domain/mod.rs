//! Shared domain types: observations, arm encodings, predictive distributions,
//! the CRPS scoring rule, regret accounting and seed derivation.

mod encoding;
mod regret;
mod scoring;
mod seed;
mod types;

pub use encoding::{encode, encode_onehot, EncodedPoint, Encoding};
pub use regret::{cumulative_regret, oracle_arm};
pub use scoring::{crps, crps_binned, crps_gaussian};
pub use seed::{fnv1a64, splitmix64, SeedSpec};
pub use types::{BinnedPmf, Observation, PredictiveDistribution};

use thiserror::Error;

/// Errors raised by the domain primitives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("arm index {arm} out of range for {arms} arms")]
    ArmIndex { arm: usize, arms: usize },

    #[error("invalid predictive distribution: {0}")]
    Distribution(String),
}
