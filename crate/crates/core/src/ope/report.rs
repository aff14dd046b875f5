//! Weight diagnostics and the JSON report.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{
    cluster_bootstrap, dr_estimate, importance_weights, snips, LoggedDecision, OpeError, TraceStep,
    DEFAULT_DR_LAMBDA,
};
use crate::domain::SeedSpec;

const BINS_PER_DECADE: f64 = 4.0;
const BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightSummary {
    pub n: usize,
    pub max_weight: f64,
    /// `1 / min_a pi_0(a)` over the log.
    pub bound: f64,
    /// Weights equal to zero; they have no place on a log axis.
    pub zeros: usize,
    pub bins: Vec<HistogramBin>,
}

/// Log-scale histogram of importance weights, four bins per decade.
///
/// Fails with [`OpeError::WeightBound`] if any weight exceeds the inverse
/// smallest behaviour propensity.
pub fn weight_summary(log: &[LoggedDecision], trace: &[TraceStep]) -> Result<WeightSummary, OpeError> {
    let w = importance_weights(log, trace)?;
    let min_p = log
        .iter()
        .flat_map(|d| d.propensity.iter().copied())
        .filter(|p| *p > 0.0)
        .fold(f64::INFINITY, f64::min);
    let bound = 1.0 / min_p;
    let max_weight = w.iter().copied().fold(0.0, f64::max);
    if max_weight > bound + BOUND_TOL {
        return Err(OpeError::WeightBound { weight: max_weight, bound });
    }
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    let mut zeros = 0;
    for &v in &w {
        if v == 0.0 {
            zeros += 1;
        } else {
            // nudge so exact powers like 1.0 land in the bin starting at them
            let k = ((v.log10() * BINS_PER_DECADE) + 1e-9).floor() as i64;
            *counts.entry(k).or_default() += 1;
        }
    }
    let bins = counts
        .into_iter()
        .map(|(k, count)| HistogramBin {
            lo: 10f64.powf(k as f64 / BINS_PER_DECADE),
            hi: 10f64.powf((k + 1) as f64 / BINS_PER_DECADE),
            count,
        })
        .collect();
    Ok(WeightSummary {
        n: w.len(),
        max_weight,
        bound,
        zeros,
        bins,
    })
}

pub fn write_weight_histogram_csv<W: Write>(summary: &WeightSummary, out: W) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["lo", "hi", "count"])?;
    if summary.zeros > 0 {
        wtr.write_record(["0", "0", &summary.zeros.to_string()])?;
    }
    for b in &summary.bins {
        wtr.write_record([b.lo.to_string(), b.hi.to_string(), b.count.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Estimator {
    Snips,
    Dr {
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default = "default_folds")]
        folds: usize,
    },
}

fn default_lambda() -> f64 {
    DEFAULT_DR_LAMBDA
}

fn default_folds() -> usize {
    2
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Snips => "snips",
            Estimator::Dr { .. } => "dr",
        }
    }
}

pub fn evaluate(
    est: Estimator,
    log: &[LoggedDecision],
    trace: &[TraceStep],
    seed: &SeedSpec,
) -> Result<f64, OpeError> {
    match est {
        Estimator::Snips => snips(log, trace),
        Estimator::Dr { lambda, folds } => dr_estimate(log, trace, lambda, folds, seed),
    }
}

/// Estimates on the first `h` steps for each horizon `h`; horizons past the
/// end of the log are skipped.
pub fn horizon_curve(
    est: Estimator,
    log: &[LoggedDecision],
    trace: &[TraceStep],
    horizons: &[usize],
    seed: &SeedSpec,
) -> Result<Vec<(usize, f64)>, OpeError> {
    horizons
        .iter()
        .filter(|&&h| h > 0 && h <= log.len())
        .map(|&h| Ok((h, evaluate(est, &log[..h], &trace[..h], &seed.derive("horizon", h as u64))?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpeReport {
    pub estimator: String,
    pub point: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    #[serde(rename = "B")]
    pub b: usize,
    pub max_weight: f64,
    pub n: usize,
    pub horizon_curve: Vec<(usize, f64)>,
}

/// Point estimate, bootstrap interval, weight check and horizon curve.
pub fn ope_report(
    est: Estimator,
    log: &[LoggedDecision],
    trace: &[TraceStep],
    b: usize,
    horizons: &[usize],
    seed: &SeedSpec,
) -> Result<(OpeReport, WeightSummary), OpeError> {
    let weights = weight_summary(log, trace)?;
    let boot = cluster_bootstrap(log, trace, |l, t, s| evaluate(est, l, t, s), b, &seed.derive("bootstrap", 0))?;
    let curve = horizon_curve(est, log, trace, horizons, &seed.derive("curve", 0))?;
    Ok((
        OpeReport {
            estimator: est.name().to_owned(),
            point: boot.point,
            ci_lo: boot.lo,
            ci_hi: boot.hi,
            b,
            max_weight: weights.max_weight,
            n: log.len(),
            horizon_curve: curve,
        },
        weights,
    ))
}
