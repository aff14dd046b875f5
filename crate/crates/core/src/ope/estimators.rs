//! Self-normalised importance sampling and cross-fitted doubly robust estimates.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;

use super::{check_aligned, LoggedDecision, OpeError, TraceStep};
use crate::domain::SeedSpec;

pub const DEFAULT_DR_LAMBDA: f64 = 1.0;

/// `pi(A_t | X_t) / pi_0(A_t)` for every step.
pub fn importance_weights(log: &[LoggedDecision], trace: &[TraceStep]) -> Result<Vec<f64>, OpeError> {
    check_aligned(log, trace)?;
    log.iter()
        .zip(trace)
        .map(|(d, s)| {
            let p0 = d.propensity.get(d.action).copied().unwrap_or(0.0);
            if !(p0 > 0.0) {
                return Err(OpeError::Propensity {
                    t: d.t,
                    action: d.action,
                    propensity: p0,
                });
            }
            Ok(s.probs[d.action] / p0)
        })
        .collect()
}

/// `sum w_t R_t / sum w_t`.
pub fn snips(log: &[LoggedDecision], trace: &[TraceStep]) -> Result<f64, OpeError> {
    let w = importance_weights(log, trace)?;
    let total: f64 = w.iter().sum();
    if total == 0.0 {
        return Err(OpeError::DegenerateWeights);
    }
    Ok(w.iter().zip(log).map(|(w, d)| w * d.reward).sum::<f64>() / total)
}

/// Per-arm ridge outcome model with an intercept column.
struct OutcomeModel {
    coef: Vec<Option<DVector<f64>>>,
    fallback: f64,
}

impl OutcomeModel {
    fn fit(rows: &[&LoggedDecision], arms: usize, lambda: f64) -> Self {
        let fallback = if rows.is_empty() {
            0.0
        } else {
            rows.iter().map(|d| d.reward).sum::<f64>() / rows.len() as f64
        };
        let coef = (0..arms)
            .map(|a| {
                let arm_rows: Vec<&&LoggedDecision> = rows.iter().filter(|d| d.action == a).collect();
                if arm_rows.is_empty() {
                    return None;
                }
                let p = arm_rows[0].context.len() + 1;
                let x = DMatrix::from_fn(arm_rows.len(), p, |i, j| {
                    arm_rows[i].context.get(j).copied().unwrap_or(1.0)
                });
                let r = DVector::from_iterator(arm_rows.len(), arm_rows.iter().map(|d| d.reward));
                let xtx = DMatrix::<f64>::identity(p, p) * lambda + x.tr_mul(&x);
                let xtr = x.tr_mul(&r);
                Some(
                    xtx.cholesky()
                        .expect("ridge system is positive definite")
                        .solve(&xtr),
                )
            })
            .collect();
        Self { coef, fallback }
    }

    fn predict(&self, x: &[f64], arm: usize) -> f64 {
        match &self.coef[arm] {
            Some(b) => features(x).dot(b),
            None => self.fallback,
        }
    }
}

fn features(x: &[f64]) -> DVector<f64> {
    DVector::from_iterator(x.len() + 1, x.iter().copied().chain(std::iter::once(1.0)))
}

/// Cross-fitted doubly robust estimate.
///
/// Clusters are shuffled with `seed` and dealt round-robin into `folds`
/// folds. Each fold is scored with per-arm ridge outcome models fitted on the
/// other folds; an arm without training rows predicts the training mean reward.
pub fn dr_estimate(
    log: &[LoggedDecision],
    trace: &[TraceStep],
    lambda: f64,
    folds: usize,
    seed: &SeedSpec,
) -> Result<f64, OpeError> {
    let w = importance_weights(log, trace)?;
    if folds < 2 {
        return Err(OpeError::Param(format!("need at least two folds, got {folds}")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(OpeError::Param(format!("ridge penalty must be positive, got {lambda}")));
    }
    let arms = log[0].propensity.len();
    let mut clusters: Vec<u64> = log.iter().map(|d| d.cluster).collect::<BTreeSet<_>>().into_iter().collect();
    clusters.shuffle(&mut seed.derive("folds", 0).rng());
    let fold_of = |c: u64| clusters.iter().position(|&k| k == c).expect("known cluster") % folds;
    let assignment: Vec<usize> = log.iter().map(|d| fold_of(d.cluster)).collect();

    let models: Vec<OutcomeModel> = (0..folds)
        .map(|f| {
            let train: Vec<&LoggedDecision> = log
                .iter()
                .zip(&assignment)
                .filter(|(_, &g)| g != f)
                .map(|(d, _)| d)
                .collect();
            OutcomeModel::fit(&train, arms, lambda)
        })
        .collect();
    Ok(dr_mean(log, trace, &w, |i, x, a| models[assignment[i]].predict(x, a)))
}

/// Mean of `sum_a pi(a|x) q(x, a) + w (r - q(x, A))` given an outcome model
/// `q(step, x, arm)`.
fn dr_mean<Q: Fn(usize, &[f64], usize) -> f64>(
    log: &[LoggedDecision],
    trace: &[TraceStep],
    w: &[f64],
    q: Q,
) -> f64 {
    let total: f64 = log
        .iter()
        .zip(trace)
        .zip(w)
        .enumerate()
        .map(|(i, ((d, s), wi))| {
            let direct: f64 = s.probs.iter().enumerate().map(|(a, p)| p * q(i, &d.context, a)).sum();
            direct + wi * (d.reward - q(i, &d.context, d.action))
        })
        .sum();
    total / log.len() as f64
}
