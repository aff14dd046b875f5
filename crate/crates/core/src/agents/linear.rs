//! Per-arm ridge regression baselines: linear Thompson sampling and LinUCB.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use super::{argmax_random_tie, check_arm, check_dim, Agent, AgentError};

/// Design statistics `A = lambda I + X'X`, `b = X'r` of one arm.
#[derive(Debug, Clone)]
pub struct RidgeArm {
    a: DMatrix<f64>,
    b: DVector<f64>,
    chol: Option<Cholesky<f64, Dyn>>,
}

impl RidgeArm {
    pub fn new(dim: usize, lambda: f64) -> Self {
        Self {
            a: DMatrix::identity(dim, dim) * lambda,
            b: DVector::zeros(dim),
            chol: None,
        }
    }

    pub fn update(&mut self, x: &[f64], r: f64) {
        let v = DVector::from_column_slice(x);
        self.a += &v * v.transpose();
        self.b += v * r;
        self.chol = None;
    }

    fn factor(&mut self) -> &Cholesky<f64, Dyn> {
        if self.chol.is_none() {
            self.chol = Some(
                self.a
                    .clone()
                    .cholesky()
                    .expect("ridge design matrix is positive definite"),
            );
        }
        self.chol.as_ref().expect("factor just computed")
    }

    /// Ridge estimate `A^{-1} b`.
    pub fn mean(&mut self) -> DVector<f64> {
        let b = self.b.clone();
        self.factor().solve(&b)
    }

    /// `A^{-1}`.
    pub fn covariance(&mut self) -> DMatrix<f64> {
        self.factor().inverse()
    }

    /// `x' A^{-1} x`.
    pub fn quad(&mut self, x: &[f64]) -> f64 {
        let v = DVector::from_column_slice(x);
        let l = self.factor().l();
        let y = l
            .solve_lower_triangular(&v)
            .expect("cholesky factor is nonsingular");
        y.norm_squared()
    }

    /// Draw from `N(A^{-1} b, scale^2 A^{-1})`.
    pub fn sample(&mut self, scale: f64, rng: &mut dyn RngCore) -> DVector<f64> {
        let mean = self.mean();
        let d = mean.len();
        let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        // with A = L L', L^{-T} z has covariance A^{-1}
        let lt = self.factor().l().transpose();
        let w = lt
            .solve_upper_triangular(&z)
            .expect("cholesky factor is nonsingular");
        mean + w * scale
    }
}

fn check_params(arms: usize, lambda: f64, explore: f64, what: &str) -> Result<(), AgentError> {
    if arms == 0 {
        return Err(AgentError::Param("need at least one arm".into()));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(AgentError::Param(format!("ridge penalty must be positive, got {lambda}")));
    }
    if !(explore.is_finite() && explore >= 0.0) {
        return Err(AgentError::Param(format!("{what} must be nonnegative, got {explore}")));
    }
    Ok(())
}

/// Linear Thompson sampling with noise scale fixed to 1.
#[derive(Debug, Clone)]
pub struct LinTs {
    name: String,
    dim: usize,
    nu: f64,
    arms: Vec<RidgeArm>,
}

impl LinTs {
    pub fn new(name: &str, arms: usize, dim: usize, lambda: f64, nu: f64) -> Result<Self, AgentError> {
        check_params(arms, lambda, nu, "nu")?;
        Ok(Self {
            name: name.to_owned(),
            dim,
            nu,
            arms: (0..arms).map(|_| RidgeArm::new(dim, lambda)).collect(),
        })
    }

    pub fn arm(&mut self, k: usize) -> &mut RidgeArm {
        &mut self.arms[k]
    }
}

impl Agent for LinTs {
    fn name(&self) -> &str {
        &self.name
    }

    fn num_arms(&self) -> usize {
        self.arms.len()
    }

    fn act(&mut self, x: &[f64], _t: usize, rng: &mut dyn RngCore) -> Result<usize, AgentError> {
        check_dim(self.dim, x.len())?;
        let xv = DVector::from_column_slice(x);
        let nu = self.nu;
        let scores: Vec<f64> = self
            .arms
            .iter_mut()
            .map(|arm| arm.sample(nu, rng).dot(&xv))
            .collect();
        Ok(argmax_random_tie(&scores, rng))
    }

    fn update(&mut self, x: &[f64], arm: usize, reward: f64, _t: usize) -> Result<(), AgentError> {
        check_arm(arm, self.arms.len())?;
        check_dim(self.dim, x.len())?;
        self.arms[arm].update(x, reward);
        Ok(())
    }
}

/// LinUCB with score `x' A^{-1} b + alpha sqrt(x' A^{-1} x)`.
#[derive(Debug, Clone)]
pub struct LinUcb {
    name: String,
    dim: usize,
    alpha: f64,
    arms: Vec<RidgeArm>,
}

impl LinUcb {
    pub fn new(name: &str, arms: usize, dim: usize, lambda: f64, alpha: f64) -> Result<Self, AgentError> {
        check_params(arms, lambda, alpha, "alpha")?;
        Ok(Self {
            name: name.to_owned(),
            dim,
            alpha,
            arms: (0..arms).map(|_| RidgeArm::new(dim, lambda)).collect(),
        })
    }

    pub fn scores(&mut self, x: &[f64]) -> Result<Vec<f64>, AgentError> {
        check_dim(self.dim, x.len())?;
        let xv = DVector::from_column_slice(x);
        let alpha = self.alpha;
        Ok(self
            .arms
            .iter_mut()
            .map(|arm| arm.mean().dot(&xv) + alpha * arm.quad(x).sqrt())
            .collect())
    }
}

impl Agent for LinUcb {
    fn name(&self) -> &str {
        &self.name
    }

    fn num_arms(&self) -> usize {
        self.arms.len()
    }

    fn act(&mut self, x: &[f64], _t: usize, rng: &mut dyn RngCore) -> Result<usize, AgentError> {
        let s = self.scores(x)?;
        Ok(argmax_random_tie(&s, rng))
    }

    fn update(&mut self, x: &[f64], arm: usize, reward: f64, _t: usize) -> Result<(), AgentError> {
        check_arm(arm, self.arms.len())?;
        check_dim(self.dim, x.len())?;
        self.arms[arm].update(x, reward);
        Ok(())
    }
}
