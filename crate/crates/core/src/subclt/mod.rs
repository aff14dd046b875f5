//! Subsampled predictive CLT.
//!
//! The predictive mean `m_t(x)` is evaluated on the geometric prefix grid
//! `2 = t_0 < t_1 < ... < t_J <= n` with `t_{j+1} = max(t_j + 1, floor(b t_j))`.
//! Block increments `D_j = m_{t_j} - m_{t_{j-1}}` are weighted by
//! `w_j = t_j t_{j-1} / (t_j - t_{j-1})`, giving the variance estimate
//! `V = (1/J) sum_j w_j D_j^2`. The latent mean at `x` is then approximated by
//! `N(m_{t_J}(x), V / t_J)`; `t_J` is the refresh point.

mod coverage;

pub use coverage::{
    coverage_diagnostic, summarize_coverage, write_coverage_csv, CoverageConfig, CoverageRecord,
    CoverageSummary, IntervalMethod,
};

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::normal;
use crate::predictive::{PredictError, PredictiveModel};

/// Default floor on the variance estimate, in squared reward units.
pub const DEFAULT_V_FLOOR: f64 = 1e-8;

/// First point of every grid.
pub const GRID_START: usize = 2;

#[derive(Debug, Error)]
pub enum SubCltError {
    #[error("history of {n} observations gives fewer than two grid points for base {base}")]
    GridTooShort { n: usize, base: f64 },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error(transparent)]
    Model(#[from] PredictError),
}

/// Grid point following `t` for base `b`.
pub fn next_grid_point(t: usize, base: f64) -> usize {
    let scaled = (base * t as f64).floor() as usize;
    scaled.max(t + 1)
}

/// Whether `t` belongs to the (unbounded) grid sequence for `base`.
pub fn is_grid_point(t: usize, base: f64) -> bool {
    let mut p = GRID_START;
    while p < t {
        p = next_grid_point(p, base);
    }
    p == t
}

/// Largest grid point not exceeding `n`, if any.
pub fn refresh_point(n: usize, base: f64) -> Option<usize> {
    if n < GRID_START {
        return None;
    }
    let mut p = GRID_START;
    loop {
        let next = next_grid_point(p, base);
        if next > n {
            return Some(p);
        }
        p = next;
    }
}

fn check_base(base: f64) -> Result<(), SubCltError> {
    if base.is_finite() && base > 1.0 {
        Ok(())
    } else {
        Err(SubCltError::Param(format!("grid base must exceed 1, got {base}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometricGrid {
    base: f64,
    points: Vec<usize>,
}

impl GeometricGrid {
    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    /// Number of blocks `J`.
    pub fn blocks(&self) -> usize {
        self.points.len() - 1
    }

    /// The last point `t_J`.
    pub fn refresh(&self) -> usize {
        self.points[self.points.len() - 1]
    }
}

/// Grid of prefix sizes for a history of length `n`.
pub fn geometric_grid(n: usize, base: f64) -> Result<GeometricGrid, SubCltError> {
    check_base(base)?;
    if n < GRID_START {
        return Err(SubCltError::GridTooShort { n, base });
    }
    let mut points = vec![GRID_START];
    loop {
        let next = next_grid_point(points[points.len() - 1], base);
        if next > n {
            break;
        }
        points.push(next);
    }
    if points.len() < 2 {
        return Err(SubCltError::GridTooShort { n, base });
    }
    Ok(GeometricGrid { base, points })
}

/// Harmonic block weights `t_j t_{j-1} / (t_j - t_{j-1})`, one per block.
pub fn block_weights(grid: &GeometricGrid) -> Vec<f64> {
    grid.points
        .windows(2)
        .map(|w| {
            let (prev, cur) = (w[0] as f64, w[1] as f64);
            cur * prev / (cur - prev)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubCltEstimate {
    /// Snapshot predictive mean at the refresh point.
    pub mean: f64,
    /// Variance estimate `V`.
    pub vhat: f64,
    /// Refresh point `t_J`.
    pub refresh: usize,
    pub grid: GeometricGrid,
}

impl SubCltEstimate {
    /// Variance of the Gaussian approximation, `max(V, floor) / t_J`.
    pub fn sampling_variance(&self, v_floor: f64) -> f64 {
        self.vhat.max(v_floor) / self.refresh as f64
    }
}

/// Assembles the estimate from predictive means evaluated at each grid point.
pub fn estimate_from_means(grid: GeometricGrid, means: &[f64]) -> SubCltEstimate {
    assert_eq!(grid.points.len(), means.len(), "one mean per grid point");
    let weights = block_weights(&grid);
    let total: f64 = weights
        .iter()
        .zip(means.windows(2))
        .map(|(w, m)| {
            let d = m[1] - m[0];
            w * d * d
        })
        .sum();
    SubCltEstimate {
        mean: means[means.len() - 1],
        vhat: total / grid.blocks() as f64,
        refresh: grid.refresh(),
        grid,
    }
}

/// Runs the estimator on the first `n` observations held by `model`.
///
/// Grid points are visited in increasing order through the model's snapshot
/// cache, so each prefix is fitted at most once per model.
pub fn subclt_estimate(
    model: &mut dyn PredictiveModel,
    n: usize,
    query: &[f64],
    base: f64,
) -> Result<SubCltEstimate, SubCltError> {
    let grid = geometric_grid(n, base)?;
    if model.len() < n {
        return Err(PredictError::Prefix {
            requested: n,
            available: model.len(),
        }
        .into());
    }
    let means = grid
        .points
        .iter()
        .map(|&t| {
            let snap = model.snapshot(t)?;
            model.predict_mean_at(&snap, query)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(estimate_from_means(grid, &means))
}

/// One draw from `N(mean, max(V, floor) / t_J)`.
pub fn thompson_draw(est: &SubCltEstimate, v_floor: f64, rng: &mut dyn RngCore) -> f64 {
    let var = est.sampling_variance(v_floor);
    if var == 0.0 {
        return est.mean;
    }
    let z: f64 = rng.sample(StandardNormal);
    est.mean + var.sqrt() * z
}

/// Symmetric interval `mean +- z_{(1+level)/2} sqrt(max(V, floor) / t_J)`.
pub fn interval(est: &SubCltEstimate, level: f64, v_floor: f64) -> Result<(f64, f64), SubCltError> {
    gaussian_interval(est.mean, est.sampling_variance(v_floor), level)
}

pub(crate) fn gaussian_interval(mean: f64, var: f64, level: f64) -> Result<(f64, f64), SubCltError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(SubCltError::Param(format!(
            "interval level must lie in (0, 1), got {level}"
        )));
    }
    let half = normal::quantile(0.5 * (1.0 + level)) * var.sqrt();
    Ok((mean - half, mean + half))
}
