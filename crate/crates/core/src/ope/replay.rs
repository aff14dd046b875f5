//! Replay of a policy over logged decisions.

use std::sync::Arc;

use rand::{Rng, RngCore};

use super::{LoggedDecision, OpeError, PolicyTrace, TraceStep, PROB_SUM_TOL};
use crate::agents::{check_arm, Agent, AgentError};
use crate::domain::SeedSpec;

pub const DEFAULT_PROBABILITY_DRAWS: usize = 100;

/// Replays `agent` over `log`.
///
/// At step `i` the policy probabilities are estimated from `m` draws of
/// [`Agent::act`] before any update at that step, then one proposal is drawn
/// from an independent stream. The agent's round counter is the number of
/// matched updates so far plus one, so a policy sees the same sequence of
/// rounds it would see online.
pub fn replay_run(
    agent: &mut dyn Agent,
    log: &[LoggedDecision],
    m: usize,
    seed: &SeedSpec,
) -> Result<PolicyTrace, OpeError> {
    if m == 0 {
        return Err(OpeError::Param("need at least one probability draw".into()));
    }
    let arms = agent.num_arms();
    let mut rounds = 1;
    let mut trace = Vec::with_capacity(log.len());
    for (i, d) in log.iter().enumerate() {
        let mut est = seed.derive("estimate", i as u64).rng();
        let mut counts = vec![0usize; arms];
        for _ in 0..m {
            let a = agent.act(&d.context, rounds, &mut est)?;
            check_arm(a, arms)?;
            counts[a] += 1;
        }
        let probs = counts.iter().map(|&c| c as f64 / m as f64).collect();
        let proposal = agent.act(&d.context, rounds, &mut seed.derive("propose", i as u64).rng())?;
        let matched = proposal == d.action;
        if matched {
            agent.update(&d.context, d.action, d.reward, rounds)?;
            rounds += 1;
        }
        trace.push(TraceStep {
            probs,
            proposal,
            matched,
        });
    }
    Ok(trace)
}

type PolicyFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A non-learning stochastic policy with known probabilities.
#[derive(Clone)]
pub struct FixedPolicy {
    name: String,
    arms: usize,
    probs: PolicyFn,
}

impl FixedPolicy {
    pub fn new<F>(name: &str, arms: usize, probs: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            name: name.to_owned(),
            arms,
            probs: Arc::new(probs),
        }
    }

    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>, AgentError> {
        let p = (self.probs)(x);
        let sum: f64 = p.iter().sum();
        if p.len() != self.arms || p.iter().any(|v| !(*v >= 0.0)) || (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(AgentError::Param(format!("invalid policy probabilities {p:?}")));
        }
        Ok(p)
    }
}

impl Agent for FixedPolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn num_arms(&self) -> usize {
        self.arms
    }

    fn act(&mut self, x: &[f64], _t: usize, rng: &mut dyn RngCore) -> Result<usize, AgentError> {
        let p = self.probabilities(x)?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, v) in p.iter().enumerate() {
            acc += v;
            if u < acc {
                return Ok(i);
            }
        }
        Ok(p.iter().rposition(|v| *v > 0.0).unwrap_or(self.arms - 1))
    }

    fn update(&mut self, _x: &[f64], arm: usize, _r: f64, _t: usize) -> Result<(), AgentError> {
        check_arm(arm, self.arms)
    }
}

/// Trace with the policy's exact probabilities; proposals are the argmax.
pub fn fixed_policy_trace(policy: &FixedPolicy, log: &[LoggedDecision]) -> Result<PolicyTrace, OpeError> {
    log.iter()
        .map(|d| {
            let probs = policy.probabilities(&d.context)?;
            let proposal = crate::domain::oracle_arm(&probs);
            Ok(TraceStep {
                matched: proposal == d.action,
                probs,
                proposal,
            })
        })
        .collect()
}
