//! Sequential predictive models.
//!
//! A [`PredictiveModel`] stores observations in arrival order and answers
//! predictive queries at any dataset prefix. A prediction at prefix `i` may
//! only depend on the first `i` observations and the query, so appending
//! data never changes it. [`SnapshotHandle`]s pin the fitted state at a
//! prefix for cheap repeated prediction; predictions through a handle are
//! bit-identical to fresh predictions at the same prefix.
//!
//! Snapshots are never evicted during a run, so memory grows as
//! `O(#snapshots * state size)`.

mod beta;
mod bridge;
mod conjugate;

pub use beta::BetaBernoulliModel;
pub use bridge::{
    remote_predict, BridgeError, BridgeModel, BridgeSession, RemotePrediction,
    DEFAULT_BRIDGE_TIMEOUT,
};
pub use conjugate::ConjugateLinearModel;

use std::any::Any;
use std::sync::Arc;

use thiserror::Error;

use crate::domain::{DomainError, PredictiveDistribution};

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("prefix length {requested} exceeds the {available} stored observations")]
    Prefix { requested: usize, available: usize },

    #[error("query has dimension {got}, model expects {expected}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid model parameter: {0}")]
    Param(String),

    #[error("invalid target {0} for this model")]
    Target(f64),

    #[error("snapshot handle was not produced by this model")]
    ForeignSnapshot,

    #[error(transparent)]
    Domain(#[from] DomainError),

    #[error(transparent)]
    Bridge(#[from] BridgeError),
}

/// Opaque fitted state of a model at a fixed prefix.
#[derive(Clone)]
pub struct SnapshotHandle {
    prefix_len: usize,
    state: Arc<dyn Any + Send + Sync>,
}

impl SnapshotHandle {
    pub fn new(prefix_len: usize, state: Arc<dyn Any + Send + Sync>) -> Self {
        Self { prefix_len, state }
    }

    pub fn prefix_len(&self) -> usize {
        self.prefix_len
    }

    /// Typed access for the model that created the handle.
    pub fn state<T: Any>(&self) -> Result<&T, PredictError> {
        self.state
            .downcast_ref::<T>()
            .ok_or(PredictError::ForeignSnapshot)
    }
}

impl std::fmt::Debug for SnapshotHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SnapshotHandle")
            .field("prefix_len", &self.prefix_len)
            .finish_non_exhaustive()
    }
}

/// A sequential predictive model queried at dataset prefixes.
pub trait PredictiveModel: Send {
    /// Width of the query vectors the model accepts.
    fn input_dim(&self) -> usize;

    /// Number of stored observations.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn append(&mut self, x: &[f64], r: f64) -> Result<(), PredictError>;

    fn fit_append(&mut self, observations: &[(Vec<f64>, f64)]) -> Result<(), PredictError> {
        for (x, r) in observations {
            self.append(x, *r)?;
        }
        Ok(())
    }

    /// Returns the cached snapshot at `prefix_len`, creating it (by
    /// extending the nearest cached snapshot below) when absent.
    fn snapshot(&mut self, prefix_len: usize) -> Result<SnapshotHandle, PredictError>;

    fn predict_mean_at(
        &mut self,
        snapshot: &SnapshotHandle,
        query: &[f64],
    ) -> Result<f64, PredictError>;

    fn predict_dist_at(
        &mut self,
        snapshot: &SnapshotHandle,
        query: &[f64],
    ) -> Result<PredictiveDistribution, PredictError>;

    fn predict_mean(&mut self, query: &[f64], prefix_len: usize) -> Result<f64, PredictError> {
        let snap = self.snapshot(prefix_len)?;
        self.predict_mean_at(&snap, query)
    }

    fn predict_dist(
        &mut self,
        query: &[f64],
        prefix_len: usize,
    ) -> Result<PredictiveDistribution, PredictError> {
        let snap = self.snapshot(prefix_len)?;
        self.predict_dist_at(&snap, query)
    }

    /// Exact posterior variance of the latent mean at the query, when the
    /// model can compute it. Only exact conjugate oracles return `Some`.
    fn latent_variance_at(
        &mut self,
        _snapshot: &SnapshotHandle,
        _query: &[f64],
    ) -> Result<Option<f64>, PredictError> {
        Ok(None)
    }
}

/// Builds a fresh, empty model for the given input dimension.
pub type ModelFactory =
    Arc<dyn Fn(usize) -> Result<Box<dyn PredictiveModel>, PredictError> + Send + Sync>;

/// Factory for [`ConjugateLinearModel`]s with fixed hyperparameters.
pub fn conjugate_factory(prior_precision: f64, noise_var: f64) -> ModelFactory {
    Arc::new(move |dim| {
        Ok(Box::new(ConjugateLinearModel::new(dim, prior_precision, noise_var)?)
            as Box<dyn PredictiveModel>)
    })
}

/// Factory for [`BetaBernoulliModel`]s; the input dimension is accepted and ignored.
pub fn beta_bernoulli_factory(a0: f64, b0: f64) -> ModelFactory {
    Arc::new(move |dim| {
        Ok(Box::new(BetaBernoulliModel::new(dim, a0, b0)?) as Box<dyn PredictiveModel>)
    })
}

pub(crate) fn check_prefix(requested: usize, available: usize) -> Result<(), PredictError> {
    if requested > available {
        Err(PredictError::Prefix {
            requested,
            available,
        })
    } else {
        Ok(())
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<(), PredictError> {
    if expected != got {
        Err(PredictError::Dimension { expected, got })
    } else {
        Ok(())
    }
}
