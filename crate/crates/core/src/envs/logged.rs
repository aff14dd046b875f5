//! Synthetic logged-feedback data from a micro-randomised engagement study.
//!
//! Each user has static covariates and a random effect drawn from the DGP
//! seed and the user id. Every day each user receives one of `K` actions
//! drawn from fixed behaviour propensities, and the binary reward is
//! Bernoulli with a logistic mean. Decisions are ordered day by day, users
//! interleaved within a day; the cluster id is the user.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use super::EnvError;
use crate::domain::SeedSpec;
use crate::ope::LoggedDecision;

const PROPENSITY_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EngagementDgp {
    arms: usize,
    covariates: usize,
    intercept: Vec<f64>,
    coef: Vec<Vec<f64>>,
    day_coef: Vec<f64>,
    seed: SeedSpec,
}

fn normal(rng: &mut dyn RngCore, mean: f64, sd: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    mean + sd * z
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

impl EngagementDgp {
    pub fn new(covariates: usize, arms: usize, seed: &SeedSpec) -> Self {
        let mut rng = seed.derive("params", 0).rng();
        let intercept = (0..arms).map(|_| normal(&mut rng, -0.5, 0.5)).collect();
        let coef = (0..arms)
            .map(|_| (0..covariates).map(|_| normal(&mut rng, 0.0, 0.5)).collect())
            .collect();
        let day_coef = (0..arms).map(|_| normal(&mut rng, -0.5, 0.3)).collect();
        Self {
            arms,
            covariates,
            intercept,
            coef,
            day_coef,
            seed: seed.clone(),
        }
    }

    pub fn num_arms(&self) -> usize {
        self.arms
    }

    /// Covariates, day fraction, then the user one-hot.
    pub fn context_dim(&self, n_users: usize) -> usize {
        self.covariates + 1 + n_users
    }

    fn user(&self, user: usize) -> (Vec<f64>, f64) {
        let mut rng = self.seed.derive("user", user as u64).rng();
        let z = (0..self.covariates)
            .map(|_| normal(&mut rng, 0.0, 1.0))
            .collect();
        (z, normal(&mut rng, 0.0, 0.5))
    }

    pub fn context(&self, user: usize, day: usize, n_users: usize, days: usize) -> Vec<f64> {
        let (mut x, _) = self.user(user);
        x.push(day as f64 / days.max(1) as f64);
        x.extend((0..n_users).map(|u| if u == user { 1.0 } else { 0.0 }));
        x
    }

    pub fn arm_means(&self, user: usize, day: usize, days: usize) -> Vec<f64> {
        let (z, effect) = self.user(user);
        let frac = day as f64 / days.max(1) as f64;
        (0..self.arms)
            .map(|a| {
                let lin: f64 = self.coef[a].iter().zip(&z).map(|(c, v)| c * v).sum();
                sigmoid(self.intercept[a] + lin + self.day_coef[a] * frac + effect)
            })
            .collect()
    }

    /// Expected reward per decision of `policy` (context to arm probabilities),
    /// averaged over every user-day of the study.
    pub fn policy_value(
        &self,
        policy: &dyn Fn(&[f64]) -> Vec<f64>,
        n_users: usize,
        days: usize,
    ) -> f64 {
        let mut total = 0.0;
        for day in 0..days {
            for user in 0..n_users {
                let probs = policy(&self.context(user, day, n_users, days));
                let m = self.arm_means(user, day, days);
                total += probs.iter().zip(&m).map(|(p, v)| p * v).sum::<f64>();
            }
        }
        total / (n_users * days) as f64
    }
}

pub(crate) fn check_propensities(p: &[f64]) -> Result<(), EnvError> {
    let sum: f64 = p.iter().sum();
    if p.is_empty() || p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(EnvError::Param(format!("invalid propensities {p:?}")));
    }
    if (sum - 1.0).abs() > PROPENSITY_SUM_TOL {
        return Err(EnvError::Param(format!("propensities sum to {sum}, not 1")));
    }
    Ok(())
}

fn draw_index(p: &[f64], rng: &mut dyn RngCore) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, v) in p.iter().enumerate() {
        acc += v;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the total; take the last arm with positive mass
    p.iter().rposition(|v| *v > 0.0).unwrap_or(p.len() - 1)
}

/// Generates `n_users * days` logged decisions under fixed behaviour propensities.
pub fn generate_logged_data(
    dgp: &EngagementDgp,
    propensities: &[f64],
    n_users: usize,
    days: usize,
    seed: &SeedSpec,
) -> Result<Vec<LoggedDecision>, EnvError> {
    check_propensities(propensities)?;
    if propensities.len() != dgp.num_arms() {
        return Err(EnvError::Param(format!(
            "{} propensities for {} arms",
            propensities.len(),
            dgp.num_arms()
        )));
    }
    let mut rng = seed.derive("behaviour", 0).rng();
    let mut log = Vec::with_capacity(n_users * days);
    for day in 0..days {
        for user in 0..n_users {
            let action = draw_index(propensities, &mut rng);
            let mean = dgp.arm_means(user, day, days)[action];
            let reward = if rng.random::<f64>() < mean { 1.0 } else { 0.0 };
            log.push(LoggedDecision {
                t: log.len() + 1,
                context: dgp.context(user, day, n_users, days),
                action,
                propensity: propensities.to_vec(),
                reward,
                cluster: user as u64,
            });
        }
    }
    Ok(log)
}

/// Writes `cluster_id, t, x0.., action, propensity_0.., reward`.
pub fn write_logged_csv<W: Write>(log: &[LoggedDecision], out: W) -> Result<(), EnvError> {
    let mut w = csv::Writer::from_writer(out);
    let (p, k) = log
        .first()
        .map(|d| (d.context.len(), d.propensity.len()))
        .unwrap_or((0, 0));
    let mut header = vec!["cluster_id".to_owned(), "t".to_owned()];
    header.extend((0..p).map(|j| format!("x{j}")));
    header.push("action".into());
    header.extend((0..k).map(|a| format!("propensity_{a}")));
    header.push("reward".into());
    w.write_record(&header)?;
    for d in log {
        if d.context.len() != p || d.propensity.len() != k {
            return Err(EnvError::Schema(format!("row {} has a different width", d.t)));
        }
        let mut rec = vec![d.cluster.to_string(), d.t.to_string()];
        rec.extend(d.context.iter().map(|v| v.to_string()));
        rec.push(d.action.to_string());
        rec.extend(d.propensity.iter().map(|v| v.to_string()));
        rec.push(d.reward.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_logged_csv<R: Read>(input: R) -> Result<Vec<LoggedDecision>, EnvError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let pos = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| EnvError::Schema(format!("missing column {name:?}")))
    };
    let cluster_i = pos("cluster_id")?;
    let t_i = pos("t")?;
    let action_i = pos("action")?;
    let reward_i = pos("reward")?;
    let x_cols: Vec<usize> = (0..)
        .map(|j| header.iter().position(|h| *h == format!("x{j}")))
        .take_while(Option::is_some)
        .flatten()
        .collect();
    let p_cols: Vec<usize> = (0..)
        .map(|a| header.iter().position(|h| *h == format!("propensity_{a}")))
        .take_while(Option::is_some)
        .flatten()
        .collect();
    if p_cols.is_empty() {
        return Err(EnvError::Schema("no propensity_0.. columns".into()));
    }

    let mut log = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let num = |j: usize| -> Result<f64, EnvError> {
            rec[j].trim().parse::<f64>().map_err(|_| EnvError::Parse {
                row,
                column: header[j].clone(),
                value: rec[j].to_owned(),
            })
        };
        let int = |j: usize| -> Result<u64, EnvError> {
            rec[j].trim().parse::<u64>().map_err(|_| EnvError::Parse {
                row,
                column: header[j].clone(),
                value: rec[j].to_owned(),
            })
        };
        let propensity = p_cols.iter().map(|&j| num(j)).collect::<Result<Vec<_>, _>>()?;
        check_propensities(&propensity)?;
        let action = int(action_i)? as usize;
        if action >= propensity.len() {
            return Err(EnvError::ArmIndex {
                arm: action,
                arms: propensity.len(),
            });
        }
        log.push(LoggedDecision {
            t: int(t_i)? as usize,
            context: x_cols.iter().map(|&j| num(j)).collect::<Result<_, _>>()?,
            action,
            propensity,
            reward: num(reward_i)?,
            cluster: int(cluster_i)?,
        });
    }
    Ok(log)
}

/// Reads a logged-data CSV file.
pub fn read_logged_file(path: &Path) -> Result<Vec<LoggedDecision>, EnvError> {
    let f = std::fs::File::open(path)
        .map_err(|e| EnvError::Io(format!("{}: {e}", path.display())))?;
    read_logged_csv(f)
}
