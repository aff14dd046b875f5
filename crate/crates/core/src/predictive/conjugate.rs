//! Bayesian linear regression with known noise variance.
//!
//! Prior `beta ~ N(0, I / lambda)`, likelihood `r | x ~ N(x'beta, sigma2)`.
//! After `n` observations the posterior is `N(mu_n, Sigma_n)` with
//! `Sigma_n = (lambda I + X'X / sigma2)^-1` and `mu_n = Sigma_n X'r / sigma2`,
//! so the predictive mean sequence `q' mu_n` is an exact Doob martingale
//! under the model's own prior.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{check_dim, check_prefix, PredictError, PredictiveModel, SnapshotHandle};
use crate::domain::PredictiveDistribution;

#[derive(Debug)]
struct Fitted {
    prefix: usize,
    // raw sufficient statistics accumulated row by row in arrival order
    xtx: Vec<f64>,
    xtr: Vec<f64>,
    cov: DMatrix<f64>,
    mean: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct ConjugateLinearModel {
    dim: usize,
    prior_precision: f64,
    noise_var: f64,
    rows: Vec<f64>,
    targets: Vec<f64>,
    snapshots: BTreeMap<usize, Arc<Fitted>>,
    // last unpinned fit, reused by fresh predictions at the same prefix
    scratch: Option<Arc<Fitted>>,
}

impl ConjugateLinearModel {
    pub fn new(dim: usize, prior_precision: f64, noise_var: f64) -> Result<Self, PredictError> {
        if !(prior_precision.is_finite() && prior_precision > 0.0) {
            return Err(PredictError::Param(format!(
                "prior precision must be positive, got {prior_precision}"
            )));
        }
        if !(noise_var.is_finite() && noise_var > 0.0) {
            return Err(PredictError::Param(format!(
                "noise variance must be positive, got {noise_var}"
            )));
        }
        Ok(Self {
            dim,
            prior_precision,
            noise_var,
            rows: Vec::new(),
            targets: Vec::new(),
            snapshots: BTreeMap::new(),
            scratch: None,
        })
    }

    pub fn prior_precision(&self) -> f64 {
        self.prior_precision
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    /// Posterior mean of the latent `q' beta` after `prefix_len` observations.
    pub fn posterior_mean(&mut self, query: &[f64], prefix_len: usize) -> Result<f64, PredictError> {
        let fit = self.fit(prefix_len)?;
        check_dim(self.dim, query.len())?;
        Ok(dot_vec(query, &fit.mean))
    }

    /// Posterior variance `q' Sigma_n q` of the latent mean.
    pub fn posterior_variance(
        &mut self,
        query: &[f64],
        prefix_len: usize,
    ) -> Result<f64, PredictError> {
        let fit = self.fit(prefix_len)?;
        check_dim(self.dim, query.len())?;
        Ok(quad_form(query, &fit.cov))
    }

    /// Posterior mean vector and covariance after `prefix_len` observations.
    pub fn posterior(
        &mut self,
        prefix_len: usize,
    ) -> Result<(DVector<f64>, DMatrix<f64>), PredictError> {
        let fit = self.fit(prefix_len)?;
        Ok((fit.mean.clone(), fit.cov.clone()))
    }

    fn fit(&mut self, prefix: usize) -> Result<Arc<Fitted>, PredictError> {
        check_prefix(prefix, self.targets.len())?;
        if let Some(f) = self.snapshots.get(&prefix) {
            return Ok(f.clone());
        }
        if let Some(f) = self.scratch.as_ref().filter(|f| f.prefix == prefix) {
            return Ok(f.clone());
        }
        let fitted = Arc::new(self.build(prefix));
        self.scratch = Some(fitted.clone());
        Ok(fitted)
    }

    /// Extends the closest cached statistics at or below `prefix`.
    fn build(&self, prefix: usize) -> Fitted {
        let d = self.dim;
        let mut base = self
            .snapshots
            .range(..=prefix)
            .next_back()
            .map(|(_, f)| f.clone());
        if let Some(s) = self.scratch.as_ref() {
            if s.prefix <= prefix && base.as_ref().is_none_or(|b| b.prefix < s.prefix) {
                base = Some(s.clone());
            }
        }
        let (start, mut xtx, mut xtr) = match base {
            Some(b) => (b.prefix, b.xtx.clone(), b.xtr.clone()),
            None => (0, vec![0.0; d * d], vec![0.0; d]),
        };
        for i in start..prefix {
            let x = &self.rows[i * d..(i + 1) * d];
            let r = self.targets[i];
            for a in 0..d {
                for b in 0..d {
                    xtx[a * d + b] += x[a] * x[b];
                }
                xtr[a] += x[a] * r;
            }
        }

        let mut precision = DMatrix::from_row_slice(d, d, &xtx) / self.noise_var;
        for a in 0..d {
            precision[(a, a)] += self.prior_precision;
        }
        // lambda > 0 keeps the precision positive definite
        let cov = precision
            .cholesky()
            .expect("posterior precision is positive definite")
            .inverse();
        let scaled = DVector::from_column_slice(&xtr) / self.noise_var;
        let mean = &cov * scaled;
        Fitted {
            prefix,
            xtx,
            xtr,
            cov,
            mean,
        }
    }

    fn fitted<'a>(&self, snapshot: &'a SnapshotHandle) -> Result<&'a Fitted, PredictError> {
        let fit: &Fitted = snapshot.state()?;
        if fit.xtr.len() != self.dim {
            return Err(PredictError::ForeignSnapshot);
        }
        Ok(fit)
    }
}

fn dot_vec(q: &[f64], v: &DVector<f64>) -> f64 {
    q.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
}

fn quad_form(q: &[f64], m: &DMatrix<f64>) -> f64 {
    let d = q.len();
    let mut s = 0.0;
    for a in 0..d {
        let mut row = 0.0;
        for b in 0..d {
            row += m[(a, b)] * q[b];
        }
        s += q[a] * row;
    }
    s
}

impl PredictiveModel for ConjugateLinearModel {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.targets.len()
    }

    fn append(&mut self, x: &[f64], r: f64) -> Result<(), PredictError> {
        check_dim(self.dim, x.len())?;
        if !r.is_finite() {
            return Err(PredictError::Target(r));
        }
        self.rows.extend_from_slice(x);
        self.targets.push(r);
        Ok(())
    }

    fn snapshot(&mut self, prefix_len: usize) -> Result<SnapshotHandle, PredictError> {
        check_prefix(prefix_len, self.targets.len())?;
        let fit = match self.snapshots.get(&prefix_len) {
            Some(f) => f.clone(),
            None => {
                let f = self.fit(prefix_len)?;
                self.snapshots.insert(prefix_len, f.clone());
                f
            }
        };
        Ok(SnapshotHandle::new(prefix_len, fit))
    }

    fn predict_mean_at(
        &mut self,
        snapshot: &SnapshotHandle,
        query: &[f64],
    ) -> Result<f64, PredictError> {
        check_dim(self.dim, query.len())?;
        Ok(dot_vec(query, &self.fitted(snapshot)?.mean))
    }

    fn predict_dist_at(
        &mut self,
        snapshot: &SnapshotHandle,
        query: &[f64],
    ) -> Result<PredictiveDistribution, PredictError> {
        check_dim(self.dim, query.len())?;
        let fit = self.fitted(snapshot)?;
        let mean = dot_vec(query, &fit.mean);
        let variance = quad_form(query, &fit.cov) + self.noise_var;
        Ok(PredictiveDistribution::gaussian(mean, variance)?)
    }

    fn predict_mean(&mut self, query: &[f64], prefix_len: usize) -> Result<f64, PredictError> {
        self.posterior_mean(query, prefix_len)
    }

    fn predict_dist(
        &mut self,
        query: &[f64],
        prefix_len: usize,
    ) -> Result<PredictiveDistribution, PredictError> {
        let fit = self.fit(prefix_len)?;
        check_dim(self.dim, query.len())?;
        let mean = dot_vec(query, &fit.mean);
        let variance = quad_form(query, &fit.cov) + self.noise_var;
        Ok(PredictiveDistribution::gaussian(mean, variance)?)
    }

    fn latent_variance_at(
        &mut self,
        snapshot: &SnapshotHandle,
        query: &[f64],
    ) -> Result<Option<f64>, PredictError> {
        check_dim(self.dim, query.len())?;
        Ok(Some(quad_form(query, &self.fitted(snapshot)?.cov)))
    }
}
