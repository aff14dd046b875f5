use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::DomainError;

/// PMF probabilities must sum to one within this tolerance.
pub const PMF_SUM_TOL: f64 = 1e-9;

/// One bandit transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub context: Vec<f64>,
    pub arm: usize,
    pub reward: f64,
    /// 1-based round index.
    pub round: usize,
}

/// A discretised predictive law: probability mass on bins with the given
/// midpoints and widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedPmf {
    pub midpoints: Vec<f64>,
    pub widths: Vec<f64>,
    pub probs: Vec<f64>,
}

impl BinnedPmf {
    /// Builds a PMF and checks its invariants.
    pub fn new(midpoints: Vec<f64>, widths: Vec<f64>, probs: Vec<f64>) -> Result<Self, DomainError> {
        let pmf = Self {
            midpoints,
            widths,
            probs,
        };
        pmf.validate()?;
        Ok(pmf)
    }

    /// A single bin of unit width carrying all the mass.
    pub fn point_mass(at: f64) -> Self {
        Self {
            midpoints: vec![at],
            widths: vec![1.0],
            probs: vec![1.0],
        }
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        let n = self.midpoints.len();
        if n == 0 {
            return Err(DomainError::Distribution("PMF has no bins".into()));
        }
        if self.widths.len() != n || self.probs.len() != n {
            return Err(DomainError::Distribution(format!(
                "PMF length mismatch: {} midpoints, {} widths, {} probs",
                n,
                self.widths.len(),
                self.probs.len()
            )));
        }
        if self.midpoints.iter().any(|y| !y.is_finite()) {
            return Err(DomainError::Distribution("non-finite bin midpoint".into()));
        }
        if self.midpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DomainError::Distribution(
                "bin midpoints must be strictly increasing".into(),
            ));
        }
        if self.widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(DomainError::Distribution("bin widths must be positive".into()));
        }
        if self.probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(DomainError::Distribution(
                "bin probabilities must be nonnegative".into(),
            ));
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > PMF_SUM_TOL {
            return Err(DomainError::Distribution(format!(
                "bin probabilities sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.midpoints
            .iter()
            .zip(&self.probs)
            .map(|(y, p)| y * p)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.midpoints
            .iter()
            .zip(&self.probs)
            .map(|(y, p)| p * (y - m) * (y - m))
            .sum()
    }

    /// Draws a bin midpoint with probability equal to its mass.
    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (y, p) in self.midpoints.iter().zip(&self.probs) {
            acc += p;
            if u < acc {
                return *y;
            }
        }
        // u landed in the rounding slack above the last cumulative sum
        *self
            .midpoints
            .iter()
            .zip(&self.probs)
            .rev()
            .find(|(_, p)| **p > 0.0)
            .map(|(y, _)| y)
            .unwrap_or(&self.midpoints[self.midpoints.len() - 1])
    }
}

/// A predictive law at a query point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictiveDistribution {
    Binned(BinnedPmf),
    Gaussian { mean: f64, variance: f64 },
}

impl PredictiveDistribution {
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self, DomainError> {
        let d = Self::Gaussian { mean, variance };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        match self {
            Self::Binned(pmf) => pmf.validate(),
            Self::Gaussian { mean, variance } => {
                if !mean.is_finite() {
                    return Err(DomainError::Distribution("non-finite Gaussian mean".into()));
                }
                if !(variance.is_finite() && *variance >= 0.0) {
                    return Err(DomainError::Distribution(format!(
                        "Gaussian variance must be nonnegative, got {variance}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Binned(pmf) => pmf.mean(),
            Self::Gaussian { mean, .. } => *mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Self::Binned(pmf) => pmf.variance(),
            Self::Gaussian { variance, .. } => *variance,
        }
    }

    /// Draws one future response from the law.
    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        match self {
            Self::Binned(pmf) => pmf.sample(rng),
            Self::Gaussian { mean, variance } => {
                if *variance == 0.0 {
                    *mean
                } else {
                    let z: f64 = rng.sample(StandardNormal);
                    mean + variance.sqrt() * z
                }
            }
        }
    }
}
