//! Cluster (user-level) bootstrap.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{check_aligned, LoggedDecision, OpeError, TraceStep};
use crate::domain::SeedSpec;

pub const DEFAULT_BOOTSTRAP_REPLICATES: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapResult {
    /// Estimate on the full log.
    pub point: f64,
    /// 2.5% percentile of the replicates.
    pub lo: f64,
    /// 97.5% percentile of the replicates.
    pub hi: f64,
    /// Sample standard deviation of the replicates.
    pub se: f64,
    pub replicates: Vec<f64>,
}

/// Type-7 (linear interpolation) sample quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Resamples whole clusters with replacement `b` times and re-runs
/// `estimator` on each resampled log. Replicate `i` uses the stream
/// `seed.derive("boot", i)` so results do not depend on thread count.
pub fn cluster_bootstrap<E>(
    log: &[LoggedDecision],
    trace: &[TraceStep],
    estimator: E,
    b: usize,
    seed: &SeedSpec,
) -> Result<BootstrapResult, OpeError>
where
    E: Fn(&[LoggedDecision], &[TraceStep], &SeedSpec) -> Result<f64, OpeError> + Sync,
{
    check_aligned(log, trace)?;
    if b < 2 {
        return Err(OpeError::Param(format!("need at least two replicates, got {b}")));
    }
    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, d) in log.iter().enumerate() {
        groups.entry(d.cluster).or_default().push(i);
    }
    if groups.len() < 2 {
        return Err(OpeError::Cluster(groups.len()));
    }
    let groups: Vec<Vec<usize>> = groups.into_values().collect();
    let point = estimator(log, trace, &seed.derive("point", 0))?;

    let replicates = (0..b)
        .into_par_iter()
        .map(|r| {
            let s = seed.derive("boot", r as u64);
            let mut rng = s.derive("resample", 0).rng();
            let mut rl = Vec::with_capacity(log.len());
            let mut rt = Vec::with_capacity(log.len());
            for _ in 0..groups.len() {
                for &i in &groups[rng.random_range(0..groups.len())] {
                    rl.push(log[i].clone());
                    rt.push(trace[i].clone());
                }
            }
            estimator(&rl, &rt, &s.derive("estimator", 0))
        })
        .collect::<Result<Vec<f64>, OpeError>>()?;

    let mut sorted = replicates.clone();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / b as f64;
    let var = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    Ok(BootstrapResult {
        point,
        lo: quantile_sorted(&sorted, 0.025),
        hi: quantile_sorted(&sorted, 0.975),
        se: var.sqrt(),
        replicates,
    })
}
