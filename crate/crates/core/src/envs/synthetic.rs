//! Synthetic contextual bandits with known mean rewards.
//!
//! Contexts are i.i.d. uniform on `[0, 1]^P`. Parameters, contexts and noise
//! come from separate counter-based streams derived from the environment
//! seed: the context at round `t` depends only on `t`, and the noise of arm
//! `a` at round `t` only on `(t, a)`. Agents sharing a seed therefore face the
//! same contexts and, whenever they pull the same arm, the same noise.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::bart::{sample_bart_function_with, sample_split_probs, BartFunction, BartPriorSpec};
use super::friedman::{arm2_mean, friedman1, friedman2, friedman3, Arm2Variant};
use super::{check_arm, check_round, EnvError, Environment, Round};
use crate::domain::SeedSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Linear,
    Friedman,
    FriedmanDisjoint,
    FriedmanHetero,
    FriedmanSparse,
    FriedmanSparseDisjoint,
    Friedman2,
    Friedman3,
    #[serde(rename = "synbart")]
    SynBart,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Scenario::Linear,
        Scenario::Friedman,
        Scenario::FriedmanDisjoint,
        Scenario::FriedmanHetero,
        Scenario::FriedmanSparse,
        Scenario::FriedmanSparseDisjoint,
        Scenario::Friedman2,
        Scenario::Friedman3,
        Scenario::SynBart,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Linear => "linear",
            Scenario::Friedman => "friedman",
            Scenario::FriedmanDisjoint => "friedman-disjoint",
            Scenario::FriedmanHetero => "friedman-hetero",
            Scenario::FriedmanSparse => "friedman-sparse",
            Scenario::FriedmanSparseDisjoint => "friedman-sparse-disjoint",
            Scenario::Friedman2 => "friedman2",
            Scenario::Friedman3 => "friedman3",
            Scenario::SynBart => "synbart",
        }
    }

    pub fn context_dim(self) -> usize {
        match self {
            Scenario::Linear => 10,
            Scenario::FriedmanSparse | Scenario::FriedmanSparseDisjoint => 20,
            Scenario::SynBart => BartPriorSpec::default().dim,
            _ => 5,
        }
    }

    pub fn num_arms(self) -> usize {
        match self {
            Scenario::Linear => 3,
            Scenario::SynBart => BartPriorSpec::default().arms,
            _ => 2,
        }
    }

    /// Nominal noise variance; heteroscedastic scenarios draw their own per replication.
    pub fn noise_var(self) -> f64 {
        match self {
            Scenario::SynBart => BartPriorSpec::default().noise_var,
            _ => 1.0,
        }
    }

    fn friedman(self) -> Option<(FriedmanBase, Arm2Variant)> {
        use Arm2Variant::*;
        match self {
            Scenario::Friedman | Scenario::FriedmanHetero | Scenario::FriedmanSparse => {
                Some((FriedmanBase::F1, Shared))
            }
            Scenario::FriedmanDisjoint | Scenario::FriedmanSparseDisjoint => {
                Some((FriedmanBase::F1, Disjoint))
            }
            Scenario::Friedman2 => Some((FriedmanBase::F2, Shared)),
            Scenario::Friedman3 => Some((FriedmanBase::F3, Shared)),
            _ => None,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| EnvError::UnknownScenario(s.to_owned()))
    }
}

/// Function used by the first arm of a Friedman scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FriedmanBase {
    F1,
    F2,
    F3,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeanFunction {
    Linear { betas: Vec<Vec<f64>> },
    Friedman { base: FriedmanBase, variant: Arm2Variant },
    Bart { functions: Vec<BartFunction> },
}

impl MeanFunction {
    pub fn eval(&self, x: &[f64], arm: usize) -> f64 {
        match self {
            MeanFunction::Linear { betas } => betas[arm].iter().zip(x).map(|(b, v)| b * v).sum(),
            MeanFunction::Friedman { base, variant } => {
                if arm == 0 {
                    match base {
                        FriedmanBase::F1 => friedman1(x),
                        FriedmanBase::F2 => friedman2(x),
                        FriedmanBase::F3 => friedman3(x),
                    }
                } else {
                    arm2_mean(*variant, x)
                }
            }
            MeanFunction::Bart { functions } => functions[arm].eval(x),
        }
    }
}

/// Per-arm coefficients with i.i.d. standard normal entries.
pub fn sample_linear_betas(dim: usize, arms: usize, rng: &mut dyn RngCore) -> Vec<Vec<f64>> {
    (0..arms)
        .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
        .collect()
}

/// Per-arm noise variances `10^U` with `U ~ Unif(-1, 1)`.
pub fn hetero_noise(arms: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    (0..arms)
        .map(|_| 10f64.powf(rng.random_range(-1.0..=1.0)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct SyntheticEnv {
    scenario: Scenario,
    mean: MeanFunction,
    noise_var: Vec<f64>,
    seed: SeedSpec,
}

impl SyntheticEnv {
    /// Draws the scenario's parameters from `seed`.
    pub fn new(scenario: Scenario, seed: &SeedSpec) -> Self {
        let mut rng = seed.derive("params", 0).rng();
        let arms = scenario.num_arms();
        let dim = scenario.context_dim();
        let mean = match scenario {
            Scenario::Linear => MeanFunction::Linear {
                betas: sample_linear_betas(dim, arms, &mut rng),
            },
            Scenario::SynBart => {
                let spec = BartPriorSpec::default();
                let probs = sample_split_probs(spec.dim, &mut rng);
                MeanFunction::Bart {
                    functions: (0..arms)
                        .map(|_| sample_bart_function_with(&spec, &probs, &mut rng))
                        .collect(),
                }
            }
            other => {
                let (base, variant) = other.friedman().expect("friedman scenario");
                MeanFunction::Friedman { base, variant }
            }
        };
        let noise_var = if scenario == Scenario::FriedmanHetero {
            hetero_noise(arms, &mut rng)
        } else {
            vec![scenario.noise_var(); arms]
        };
        Self {
            scenario,
            mean,
            noise_var,
            seed: seed.clone(),
        }
    }

    /// Environment with explicitly given mean function and noise.
    pub fn with_parts(
        scenario: Scenario,
        mean: MeanFunction,
        noise_var: Vec<f64>,
        seed: &SeedSpec,
    ) -> Self {
        Self {
            scenario,
            mean,
            noise_var,
            seed: seed.clone(),
        }
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn mean_function(&self) -> &MeanFunction {
        &self.mean
    }

    pub fn noise_var(&self) -> &[f64] {
        &self.noise_var
    }

    pub fn context(&self, t: usize) -> Vec<f64> {
        let mut rng = self.seed.derive("context", t as u64).rng();
        (0..self.scenario.context_dim())
            .map(|_| rng.random::<f64>())
            .collect()
    }

    fn noise(&self, t: usize, arm: usize) -> f64 {
        let mut rng = self
            .seed
            .derive("noise", t as u64)
            .derive("arm", arm as u64)
            .rng();
        let z: f64 = rng.sample(StandardNormal);
        self.noise_var[arm].sqrt() * z
    }
}

impl Environment for SyntheticEnv {
    fn name(&self) -> &str {
        self.scenario.name()
    }

    fn num_arms(&self) -> usize {
        self.noise_var.len()
    }

    fn context_dim(&self) -> usize {
        self.scenario.context_dim()
    }

    fn observe(&self, t: usize) -> Result<Round, EnvError> {
        check_round(t, None)?;
        let context = self.context(t);
        let means = (0..self.num_arms())
            .map(|a| self.mean.eval(&context, a))
            .collect();
        Ok(Round { context, means })
    }

    fn reward(&self, t: usize, arm: usize) -> Result<f64, EnvError> {
        check_round(t, None)?;
        check_arm(arm, self.num_arms())?;
        let x = self.context(t);
        Ok(self.mean.eval(&x, arm) + self.noise(t, arm))
    }
}
