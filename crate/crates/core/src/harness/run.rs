//! Bandit experiment runner.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AgentSpec, ExperimentConfig, ScenarioSource};
use super::HarnessError;
use crate::domain::{oracle_arm, SeedSpec};
use crate::envs::{ingest_csv, ClassificationData, ClassificationEnv, Environment, SyntheticEnv};

/// Cumulative regret of one (scenario, agent, replication) cell, rounds `1..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretCurve {
    pub scenario: String,
    pub agent: String,
    pub rep: usize,
    pub cum_regret: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretRecord {
    pub scenario: String,
    pub agent: String,
    pub rep: usize,
    pub t: usize,
    pub cum_regret: f64,
}

/// Mean, SD and SE across replications at thinned rounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateCurve {
    pub scenario: String,
    pub agent: String,
    pub replications: usize,
    pub t: Vec<usize>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub se: Vec<f64>,
}

/// Seed shared by every agent in replication `rep` of `scenario`.
pub fn replication_seed(root: &SeedSpec, scenario: &str, rep: usize) -> SeedSpec {
    root.derive(&format!("scenario/{scenario}"), 0).derive("rep", rep as u64)
}

/// Environments for one scenario, one per replication on demand.
pub enum EnvSource {
    Synthetic(crate::envs::Scenario),
    Dataset {
        name: String,
        data: Arc<ClassificationData>,
        cap: usize,
        shuffle: bool,
    },
}

impl EnvSource {
    pub fn load(name: &str, source: ScenarioSource) -> Result<Self, HarnessError> {
        Ok(match source {
            ScenarioSource::Synthetic(s) => EnvSource::Synthetic(s),
            ScenarioSource::Dataset(d) => EnvSource::Dataset {
                name: name.to_owned(),
                data: Arc::new(ingest_csv(&d.path, &d.label, &d.categorical)?),
                cap: d.horizon_cap,
                shuffle: d.shuffle,
            },
        })
    }

    pub fn build(&self, seed: &SeedSpec) -> Box<dyn Environment> {
        match self {
            EnvSource::Synthetic(s) => Box::new(SyntheticEnv::new(*s, seed)),
            EnvSource::Dataset {
                name,
                data,
                cap,
                shuffle,
            } => {
                if *shuffle {
                    Box::new(ClassificationEnv::shuffled(name, data.clone(), *cap, seed))
                } else {
                    Box::new(ClassificationEnv::new(name, data.clone(), *cap))
                }
            }
        }
    }
}

/// Runs one agent for `horizon` rounds (capped by the environment).
pub fn run_cell(
    env: &dyn Environment,
    spec: &AgentSpec,
    cfg: &ExperimentConfig,
    horizon: usize,
    seed: &SeedSpec,
) -> Result<Vec<f64>, HarnessError> {
    let horizon = env.horizon_limit().map_or(horizon, |h| h.min(horizon));
    let mut agent = spec.build(env.num_arms(), env.context_dim(), cfg.bridge.as_ref())?;
    let mut rng = seed.derive(&format!("agent/{}", spec.name()), 0).rng();
    let mut total = 0.0;
    let mut curve = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let round = env.observe(t)?;
        let arm = match agent.as_mut() {
            Some(a) => {
                let arm = a.act(&round.context, t, &mut rng)?;
                let r = env.reward(t, arm)?;
                a.update(&round.context, arm, r, t)?;
                arm
            }
            None => oracle_arm(&round.means),
        };
        let best = round.means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        total += best - round.means[arm];
        curve.push(total);
    }
    Ok(curve)
}

/// Every (scenario, agent, rep) cell, in config order. Environments are
/// built from [`replication_seed`], so agents in the same replication see the
/// same parameters, contexts and noise.
pub fn run_experiment(cfg: &ExperimentConfig, root: &SeedSpec) -> Result<Vec<RegretCurve>, HarnessError> {
    cfg.validate()?;
    if cfg.agents.is_empty() {
        return Err(HarnessError::Config("no agents configured".into()));
    }
    let sources: Vec<(String, EnvSource)> = cfg
        .require_scenarios()?
        .into_iter()
        .map(|n| {
            let src = cfg.resolve_scenario(&n)?;
            Ok((n.clone(), EnvSource::load(&n, src)?))
        })
        .collect::<Result<_, HarnessError>>()?;
    let cells: Vec<(usize, usize, usize)> = (0..sources.len())
        .flat_map(|s| (0..cfg.agents.len()).flat_map(move |a| (0..cfg.replications).map(move |r| (s, a, r))))
        .collect();
    cells
        .par_iter()
        .map(|&(s, a, rep)| {
            let (name, src) = &sources[s];
            let seed = replication_seed(root, name, rep);
            let env = src.build(&seed);
            let spec = &cfg.agents[a];
            Ok(RegretCurve {
                scenario: name.clone(),
                agent: spec.name(),
                rep,
                cum_regret: run_cell(env.as_ref(), spec, cfg, cfg.horizon, &seed)?,
            })
        })
        .collect()
}

pub fn write_regret_csv<W: Write>(curves: &[RegretCurve], out: W) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["scenario", "agent", "rep", "t", "cum_regret"])?;
    for c in curves {
        for (i, v) in c.cum_regret.iter().enumerate() {
            w.serialize(RegretRecord {
                scenario: c.scenario.clone(),
                agent: c.agent.clone(),
                rep: c.rep,
                t: i + 1,
                cum_regret: *v,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Rebuilds curves from regret records, ordered by (scenario, agent, rep).
pub fn curves_from_records(records: &[RegretRecord]) -> Vec<RegretCurve> {
    let mut map: BTreeMap<(String, String, usize), Vec<(usize, f64)>> = BTreeMap::new();
    for r in records {
        map.entry((r.scenario.clone(), r.agent.clone(), r.rep))
            .or_default()
            .push((r.t, r.cum_regret));
    }
    map.into_iter()
        .map(|((scenario, agent, rep), mut pts)| {
            pts.sort_by_key(|p| p.0);
            RegretCurve {
                scenario,
                agent,
                rep,
                cum_regret: pts.into_iter().map(|p| p.1).collect(),
            }
        })
        .collect()
}

pub fn read_regret_csv<R: std::io::Read>(input: R) -> Result<Vec<RegretRecord>, HarnessError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(Into::into)
}

/// Aggregates per (scenario, agent) at rounds `stride, 2 stride, ...` plus
/// the final round. SD uses the `R - 1` denominator (zero when `R = 1`);
/// SE is `SD / sqrt(R)`.
pub fn aggregate(curves: &[RegretCurve], stride: usize) -> Vec<AggregateCurve> {
    let mut groups: Vec<((String, String), Vec<&RegretCurve>)> = Vec::new();
    for c in curves {
        let key = (c.scenario.clone(), c.agent.clone());
        match groups.iter_mut().find(|g| g.0 == key) {
            Some(g) => g.1.push(c),
            None => groups.push((key, vec![c])),
        }
    }
    groups
        .into_iter()
        .map(|((scenario, agent), cs)| {
            let len = cs.iter().map(|c| c.cum_regret.len()).min().unwrap_or(0);
            let mut ts: Vec<usize> = (stride..=len).step_by(stride.max(1)).collect();
            if len > 0 && ts.last() != Some(&len) {
                ts.push(len);
            }
            let r = cs.len() as f64;
            let (mut mean, mut sd, mut se) = (vec![], vec![], vec![]);
            for &t in &ts {
                let vals: Vec<f64> = cs.iter().map(|c| c.cum_regret[t - 1]).collect();
                let m = vals.iter().sum::<f64>() / r;
                let s = if cs.len() > 1 {
                    (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (r - 1.0)).sqrt()
                } else {
                    0.0
                };
                mean.push(m);
                sd.push(s);
                se.push(s / r.sqrt());
            }
            AggregateCurve {
                scenario,
                agent,
                replications: cs.len(),
                t: ts,
                mean,
                sd,
                se,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(extra: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(&format!(
            "scenario = \"linear\"\nhorizon = 60\nreplications = 2\nseed = 3\n{extra}"
        ))
        .unwrap()
    }

    #[test]
    fn oracle_has_zero_regret_and_curves_are_monotone() {
        let c = cfg("[[agents]]\nkind = \"oracle\"\n[[agents]]\nkind = \"uniform\"\n[[agents]]\nkind = \"lin-ucb\"");
        let curves = run_experiment(&c, &SeedSpec::root(c.seed)).unwrap();
        assert_eq!(curves.len(), 6);
        for cv in &curves {
            assert_eq!(cv.cum_regret.len(), 60);
            assert!(cv.cum_regret.windows(2).all(|w| w[1] >= w[0]));
            if cv.agent == "oracle" {
                assert!(cv.cum_regret.iter().all(|v| *v == 0.0));
            }
        }
    }

    #[test]
    fn agents_share_environments_within_a_replication() {
        let root = SeedSpec::root(1);
        let a = SyntheticEnv::new(crate::envs::Scenario::Linear, &replication_seed(&root, "linear", 0));
        let b = SyntheticEnv::new(crate::envs::Scenario::Linear, &replication_seed(&root, "linear", 0));
        let c = SyntheticEnv::new(crate::envs::Scenario::Linear, &replication_seed(&root, "linear", 1));
        assert_eq!(a.observe(5).unwrap(), b.observe(5).unwrap());
        assert_eq!(a.reward(5, 2).unwrap(), b.reward(5, 2).unwrap());
        assert_ne!(a.observe(5).unwrap(), c.observe(5).unwrap());
    }

    #[test]
    fn csv_roundtrip_and_aggregate() {
        let c = cfg("[[agents]]\nkind = \"uniform\"");
        let curves = run_experiment(&c, &SeedSpec::root(c.seed)).unwrap();
        let mut buf = Vec::new();
        write_regret_csv(&curves, &mut buf).unwrap();
        assert!(buf.starts_with(b"scenario,agent,rep,t,cum_regret\n"));
        let back = curves_from_records(&read_regret_csv(buf.as_slice()).unwrap());
        assert_eq!(back, curves);

        let agg = aggregate(&curves, 25);
        assert_eq!(agg.len(), 1);
        assert_eq!(agg[0].t, vec![25, 50, 60]);
        let v: Vec<f64> = curves.iter().map(|c| c.cum_regret[59]).collect();
        let m = (v[0] + v[1]) / 2.0;
        let sd = ((v[0] - m).powi(2) + (v[1] - m).powi(2)).sqrt();
        assert!((agg[0].mean[2] - m).abs() < 1e-12);
        assert!((agg[0].sd[2] - sd).abs() < 1e-12);
        assert!((agg[0].se[2] - sd / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn runs_are_deterministic() {
        let c = cfg("[[agents]]\nkind = \"pfn-ts\"\n[[agents]]\nkind = \"lin-ts\"");
        let a = run_experiment(&c, &SeedSpec::root(c.seed)).unwrap();
        let b = run_experiment(&c, &SeedSpec::root(c.seed)).unwrap();
        assert_eq!(a, b);
    }
}
