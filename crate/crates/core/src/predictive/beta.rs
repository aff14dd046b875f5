//! Context-free Beta–Bernoulli model for binary rewards.

use std::sync::Arc;

use super::{check_prefix, PredictError, PredictiveModel, SnapshotHandle};
use crate::domain::{BinnedPmf, PredictiveDistribution};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Counts {
    prefix: usize,
    successes: u64,
}

#[derive(Debug, Clone)]
pub struct BetaBernoulliModel {
    dim: usize,
    a0: f64,
    b0: f64,
    // cumulative successes; cum[i] counts the first i observations
    cum: Vec<u64>,
}

impl BetaBernoulliModel {
    pub fn new(dim: usize, a0: f64, b0: f64) -> Result<Self, PredictError> {
        if !(a0.is_finite() && a0 > 0.0 && b0.is_finite() && b0 > 0.0) {
            return Err(PredictError::Param(format!(
                "pseudo-counts must be positive, got ({a0}, {b0})"
            )));
        }
        Ok(Self {
            dim,
            a0,
            b0,
            cum: vec![0],
        })
    }

    /// `(a0 + successes) / (a0 + b0 + prefix_len)`.
    pub fn mean(&self, prefix_len: usize) -> Result<f64, PredictError> {
        check_prefix(prefix_len, self.len())?;
        Ok(self.mean_of(Counts {
            prefix: prefix_len,
            successes: self.cum[prefix_len],
        }))
    }

    fn mean_of(&self, c: Counts) -> f64 {
        (self.a0 + c.successes as f64) / (self.a0 + self.b0 + c.prefix as f64)
    }

    fn counts<'a>(&self, snapshot: &'a SnapshotHandle) -> Result<&'a Counts, PredictError> {
        snapshot.state()
    }
}

impl PredictiveModel for BetaBernoulliModel {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.cum.len() - 1
    }

    fn append(&mut self, _x: &[f64], r: f64) -> Result<(), PredictError> {
        let success = if r == 1.0 {
            1
        } else if r == 0.0 {
            0
        } else {
            return Err(PredictError::Target(r));
        };
        let last = self.cum[self.cum.len() - 1];
        self.cum.push(last + success);
        Ok(())
    }

    fn snapshot(&mut self, prefix_len: usize) -> Result<SnapshotHandle, PredictError> {
        check_prefix(prefix_len, self.len())?;
        Ok(SnapshotHandle::new(
            prefix_len,
            Arc::new(Counts {
                prefix: prefix_len,
                successes: self.cum[prefix_len],
            }),
        ))
    }

    fn predict_mean_at(
        &mut self,
        snapshot: &SnapshotHandle,
        _query: &[f64],
    ) -> Result<f64, PredictError> {
        Ok(self.mean_of(*self.counts(snapshot)?))
    }

    fn predict_dist_at(
        &mut self,
        snapshot: &SnapshotHandle,
        _query: &[f64],
    ) -> Result<PredictiveDistribution, PredictError> {
        let p = self.mean_of(*self.counts(snapshot)?);
        Ok(PredictiveDistribution::Binned(BinnedPmf::new(
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0 - p, p],
        )?))
    }

    fn predict_mean(&mut self, _query: &[f64], prefix_len: usize) -> Result<f64, PredictError> {
        self.mean(prefix_len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplace_rule_examples() {
        let mut m = BetaBernoulliModel::new(0, 1.0, 1.0).unwrap();
        assert_eq!(m.mean(0).unwrap(), 0.5);
        for r in [1.0, 1.0, 0.0, 1.0] {
            m.append(&[], r).unwrap();
        }
        assert!((m.mean(4).unwrap() - 4.0 / 6.0).abs() < 1e-15);

        let mut f = BetaBernoulliModel::new(0, 1.0, 1.0).unwrap();
        for _ in 0..10 {
            f.append(&[], 0.0).unwrap();
        }
        assert!((f.mean(10).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        assert!(matches!(f.mean(11), Err(PredictError::Prefix { .. })));
    }

    #[test]
    fn rejects_non_binary_rewards() {
        let mut m = BetaBernoulliModel::new(0, 1.0, 1.0).unwrap();
        assert!(matches!(m.append(&[], 0.5), Err(PredictError::Target(_))));
        assert!(BetaBernoulliModel::new(0, 0.0, 1.0).is_err());
    }

    #[test]
    fn dist_mean_matches_mean() {
        let mut m = BetaBernoulliModel::new(2, 2.0, 3.0).unwrap();
        m.append(&[0.0, 0.0], 1.0).unwrap();
        let d = m.predict_dist(&[0.0, 0.0], 1).unwrap();
        let mean = m.predict_mean(&[0.0, 0.0], 1).unwrap();
        assert!((d.mean() - mean).abs() < 1e-12);
        assert!((mean - 0.5).abs() < 1e-15);
    }
}
