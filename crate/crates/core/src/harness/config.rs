//! Experiment configuration (TOML).

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::agents::{Agent, LinTs, LinUcb, PfnConfig, PfnTs, Uniform};
use crate::envs::{Scenario, DEFAULT_HORIZON_CAP};
use crate::ope::{Estimator, DEFAULT_BOOTSTRAP_REPLICATES, DEFAULT_PROBABILITY_DRAWS};
use crate::predictive::{
    beta_bernoulli_factory, conjugate_factory, BridgeModel, ModelFactory, PredictiveModel,
    DEFAULT_BRIDGE_TIMEOUT,
};
use crate::subclt::{CoverageConfig, IntervalMethod, DEFAULT_V_FLOOR};

/// Environment variable holding the default output directory.
pub const OUTPUT_DIR_ENV: &str = "PFNTS_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "results";
pub const DEFAULT_STRIDE: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

impl OneOrMany {
    pub fn to_vec(&self) -> Vec<String> {
        match self {
            OneOrMany::One(s) => vec![s.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Backend {
    Conjugate {
        #[serde(default = "one")]
        prior_precision: f64,
        #[serde(default = "one")]
        noise_var: f64,
    },
    BetaBernoulli {
        #[serde(default = "one")]
        a0: f64,
        #[serde(default = "one")]
        b0: f64,
    },
    /// External model server from the `[bridge]` section.
    Bridge,
}

impl Default for Backend {
    fn default() -> Self {
        Backend::Conjugate {
            prior_precision: 1.0,
            noise_var: 1.0,
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AgentSpec {
    PfnTs {
        name: Option<String>,
        #[serde(default)]
        backend: Backend,
        #[serde(default)]
        params: PfnConfig,
    },
    LinTs {
        name: Option<String>,
        #[serde(default = "one")]
        lambda: f64,
        #[serde(default = "one")]
        nu: f64,
    },
    LinUcb {
        name: Option<String>,
        #[serde(default = "one")]
        lambda: f64,
        #[serde(default = "one")]
        alpha: f64,
    },
    Uniform {
        name: Option<String>,
    },
    /// Plays the arm with the highest true mean; regret is zero by construction.
    Oracle {
        name: Option<String>,
    },
}

impl AgentSpec {
    pub fn name(&self) -> String {
        let (given, default) = match self {
            AgentSpec::PfnTs { name, params, .. } => (
                name,
                match params.rule {
                    crate::agents::DecisionRule::Thompson => "pfn-ts",
                    crate::agents::DecisionRule::PredictiveSampling => "pfn-ps",
                    crate::agents::DecisionRule::Greedy => "pfn-greedy",
                },
            ),
            AgentSpec::LinTs { name, .. } => (name, "lin-ts"),
            AgentSpec::LinUcb { name, .. } => (name, "lin-ucb"),
            AgentSpec::Uniform { name } => (name, "uniform"),
            AgentSpec::Oracle { name } => (name, "oracle"),
        };
        given.clone().unwrap_or_else(|| default.to_owned())
    }

    pub fn is_oracle(&self) -> bool {
        matches!(self, AgentSpec::Oracle { .. })
    }

    /// Builds the agent; `None` for the oracle, which the runner handles itself.
    pub fn build(
        &self,
        arms: usize,
        dim: usize,
        bridge: Option<&BridgeSection>,
    ) -> Result<Option<Box<dyn Agent>>, HarnessError> {
        let name = self.name();
        let agent: Box<dyn Agent> = match self {
            AgentSpec::PfnTs { backend, params, .. } => {
                let factory = backend_factory(backend, bridge)?;
                Box::new(PfnTs::new(&name, arms, dim, &factory, params.clone())?)
            }
            AgentSpec::LinTs { lambda, nu, .. } => Box::new(LinTs::new(&name, arms, dim, *lambda, *nu)?),
            AgentSpec::LinUcb { lambda, alpha, .. } => {
                Box::new(LinUcb::new(&name, arms, dim, *lambda, *alpha)?)
            }
            AgentSpec::Uniform { .. } => Box::new(Uniform::new(&name, arms)),
            AgentSpec::Oracle { .. } => return Ok(None),
        };
        Ok(Some(agent))
    }
}

pub fn backend_factory(backend: &Backend, bridge: Option<&BridgeSection>) -> Result<ModelFactory, HarnessError> {
    Ok(match *backend {
        Backend::Conjugate {
            prior_precision,
            noise_var,
        } => conjugate_factory(prior_precision, noise_var),
        Backend::BetaBernoulli { a0, b0 } => beta_bernoulli_factory(a0, b0),
        Backend::Bridge => {
            let b = bridge.ok_or_else(|| HarnessError::Config("bridge backend needs a [bridge] section".into()))?;
            let command = b.command.clone();
            let timeout = Duration::from_secs_f64(b.timeout_secs);
            Arc::new(move |dim| {
                Ok(Box::new(BridgeModel::spawning(dim, command.clone(), timeout)) as Box<dyn PredictiveModel>)
            })
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeSection {
    pub command: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
}

fn default_timeout() -> f64 {
    DEFAULT_BRIDGE_TIMEOUT.as_secs_f64()
}

/// A classification CSV usable as a scenario under `name`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub name: String,
    pub path: PathBuf,
    pub label: String,
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default = "default_cap")]
    pub horizon_cap: usize,
    /// Permute rows per replication.
    #[serde(default = "yes")]
    pub shuffle: bool,
}

fn default_cap() -> usize {
    DEFAULT_HORIZON_CAP
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverageSection {
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub queries: usize,
    pub level: f64,
    pub base: f64,
    pub v_floor: f64,
    pub method: IntervalMethod,
    pub prior_precision: f64,
    /// Defaults to the scenario's noise variance on arm 0.
    pub noise_var: Option<f64>,
}

impl Default for CoverageSection {
    fn default() -> Self {
        let c = CoverageConfig::default();
        Self {
            sizes: c.sizes,
            reps: c.reps,
            queries: c.queries,
            level: c.level,
            base: c.base,
            v_floor: DEFAULT_V_FLOOR,
            method: c.method,
            prior_precision: 1.0,
            noise_var: None,
        }
    }
}

impl CoverageSection {
    pub fn diagnostic(&self) -> CoverageConfig {
        CoverageConfig {
            sizes: self.sizes.clone(),
            reps: self.reps,
            queries: self.queries,
            level: self.level,
            base: self.base,
            v_floor: self.v_floor,
            method: self.method,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpeSection {
    /// Logged-data CSV; when absent a synthetic engagement log is generated.
    pub log: Option<PathBuf>,
    pub users: usize,
    pub days: usize,
    pub covariates: usize,
    pub propensities: Vec<f64>,
    pub estimators: Vec<Estimator>,
    pub draws: usize,
    pub replicates: usize,
    pub horizons: Vec<usize>,
}

impl Default for OpeSection {
    fn default() -> Self {
        Self {
            log: None,
            users: 349,
            days: 30,
            covariates: 3,
            propensities: vec![0.4, 0.3, 0.3],
            estimators: vec![
                Estimator::Snips,
                Estimator::Dr {
                    lambda: crate::ope::DEFAULT_DR_LAMBDA,
                    folds: 2,
                },
            ],
            draws: DEFAULT_PROBABILITY_DRAWS,
            replicates: DEFAULT_BOOTSTRAP_REPLICATES,
            horizons: vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Needed by `run` and `coverage`; `ope` reads the `[ope]` section instead.
    pub scenario: Option<OneOrMany>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_reps")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub agents: Vec<AgentSpec>,
    pub bridge: Option<BridgeSection>,
    #[serde(default)]
    pub datasets: Vec<DatasetSection>,
    pub coverage: Option<CoverageSection>,
    pub ope: Option<OpeSection>,
}

fn default_horizon() -> usize {
    10_000
}

fn default_reps() -> usize {
    5
}

fn default_stride() -> usize {
    DEFAULT_STRIDE
}

/// `$PFNTS_OUTPUT_DIR`, else `results`.
pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

/// What a scenario name resolves to.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSource {
    Synthetic(Scenario),
    Dataset(DatasetSection),
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.stride == 0 {
            return bad("stride must be at least 1".into());
        }
        for n in &self.scenarios() {
            self.resolve_scenario(n)?;
        }
        let mut agent_names: Vec<String> = self.agents.iter().map(AgentSpec::name).collect();
        agent_names.sort();
        if let Some(w) = agent_names.windows(2).find(|w| w[0] == w[1]) {
            return bad(format!("duplicate agent name {}", w[0]));
        }
        for a in &self.agents {
            if let AgentSpec::PfnTs {
                backend: Backend::Bridge,
                ..
            } = a
            {
                if self.bridge.is_none() {
                    return bad(format!("agent {} uses the bridge backend but [bridge] is missing", a.name()));
                }
            }
        }
        if let Some(b) = &self.bridge {
            if b.command.is_empty() {
                return bad("bridge command is empty".into());
            }
            if !(b.timeout_secs > 0.0 && b.timeout_secs.is_finite()) {
                return bad("bridge timeout must be positive".into());
            }
        }
        Ok(())
    }

    pub fn scenarios(&self) -> Vec<String> {
        self.scenario.as_ref().map(OneOrMany::to_vec).unwrap_or_default()
    }

    pub fn require_scenarios(&self) -> Result<Vec<String>, HarnessError> {
        let s = self.scenarios();
        if s.is_empty() {
            return Err(HarnessError::Config("no scenario given".into()));
        }
        Ok(s)
    }

    pub fn resolve_scenario(&self, name: &str) -> Result<ScenarioSource, HarnessError> {
        if let Some(d) = self.datasets.iter().find(|d| d.name == name) {
            return Ok(ScenarioSource::Dataset(d.clone()));
        }
        Scenario::from_str(name)
            .map(ScenarioSource::Synthetic)
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// `--out`, then the config, then the environment, then `results`.
    pub fn output_dir(&self, cli: Option<&Path>) -> PathBuf {
        if let Some(p) = cli {
            return p.to_owned();
        }
        if let Some(p) = &self.output_dir {
            return p.clone();
        }
        default_output_dir()
    }
}
