//! Thompson sampling driven by a subsampled predictive central limit theorem.
//!
//! A sequential predictive model (anything implementing
//! [`predictive::PredictiveModel`]) is queried on a geometric grid of dataset
//! prefixes; the fluctuation of its predictive mean along that grid yields a
//! Gaussian approximation to the posterior of the latent mean reward, which
//! drives Thompson sampling in [`agents::PfnTs`]. The crate also ships the
//! synthetic and classification environments, baselines, off-policy
//! estimators and the experiment harness used to evaluate the agents.

pub mod agents;
pub mod domain;
pub mod envs;
pub mod harness;
pub mod normal;
pub mod ope;
pub mod predictive;
pub mod subclt;
