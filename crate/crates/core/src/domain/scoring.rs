//! Continuous ranked probability score.
//!
//! For a binned forecast the score is the exact sum over the bin CDF,
//! `sum_j (F(y_j) - 1{y_j >= r})^2 * dy_j`. For a Gaussian forecast it is the
//! closed form `sigma * [z(2 Phi(z) - 1) + 2 phi(z) - 1/sqrt(pi)]`.

use std::f64::consts::PI;

use super::{BinnedPmf, DomainError, PredictiveDistribution};
use crate::normal;

pub fn crps_binned(pmf: &BinnedPmf, r: f64) -> Result<f64, DomainError> {
    pmf.validate()?;
    let mut cdf = 0.0;
    let mut score = 0.0;
    for ((y, dy), p) in pmf.midpoints.iter().zip(&pmf.widths).zip(&pmf.probs) {
        cdf += p;
        let step = if *y >= r { 1.0 } else { 0.0 };
        // the final bin's CDF is 1 up to rounding in the running sum
        let f = cdf.min(1.0);
        score += (f - step) * (f - step) * dy;
    }
    Ok(score)
}

pub fn crps_gaussian(mean: f64, variance: f64, r: f64) -> Result<f64, DomainError> {
    if !(variance.is_finite() && variance >= 0.0) {
        return Err(DomainError::Distribution(format!(
            "Gaussian variance must be nonnegative, got {variance}"
        )));
    }
    if variance == 0.0 {
        return Ok((r - mean).abs());
    }
    let sigma = variance.sqrt();
    let z = (r - mean) / sigma;
    let score =
        sigma * (z * (2.0 * normal::cdf(z) - 1.0) + 2.0 * normal::pdf(z) - 1.0 / PI.sqrt());
    Ok(score.max(0.0))
}

/// Scores whichever form the predictive law takes.
pub fn crps(dist: &PredictiveDistribution, r: f64) -> Result<f64, DomainError> {
    match dist {
        PredictiveDistribution::Binned(pmf) => crps_binned(pmf, r),
        PredictiveDistribution::Gaussian { mean, variance } => crps_gaussian(*mean, *variance, r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pmf(m: &[f64], w: &[f64], p: &[f64]) -> BinnedPmf {
        BinnedPmf::new(m.to_vec(), w.to_vec(), p.to_vec()).unwrap()
    }

    #[test]
    fn binned_examples() {
        let two = pmf(&[0.0, 1.0], &[1.0, 1.0], &[0.5, 0.5]);
        assert!((crps_binned(&two, 1.0).unwrap() - 0.25).abs() < 1e-15);

        let point = BinnedPmf::point_mass(2.0);
        assert_eq!(crps_binned(&point, 2.0).unwrap(), 0.0);

        let three = pmf(&[0.0, 1.0, 2.0], &[1.0, 1.0, 1.0], &[0.2, 0.5, 0.3]);
        assert!((crps_binned(&three, 0.0).unwrap() - 0.73).abs() < 1e-12);
    }

    #[test]
    fn binned_rejects_invalid_pmf() {
        let bad = BinnedPmf {
            midpoints: vec![0.0, 1.0],
            widths: vec![1.0, 1.0],
            probs: vec![0.5, 0.4],
        };
        assert!(matches!(crps_binned(&bad, 0.0), Err(DomainError::Distribution(_))));
    }

    #[test]
    fn gaussian_examples() {
        // 2 phi(0) - 1/sqrt(pi)
        assert!((crps_gaussian(1.3, 1.0, 1.3).unwrap() - 0.233_695).abs() < 1e-6);
        assert_eq!(crps_gaussian(2.0, 0.0, 5.0).unwrap(), 3.0);
        assert!(crps_gaussian(0.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn gaussian_minimised_at_outcome() {
        for &(r, v) in &[(0.0, 1.0), (3.2, 0.5), (-1.7, 4.0)] {
            let at = crps_gaussian(r, v, r).unwrap();
            assert!(crps_gaussian(r + 1e-4, v, r).unwrap() > at);
            assert!(crps_gaussian(r - 1e-4, v, r).unwrap() > at);
        }
    }
}
