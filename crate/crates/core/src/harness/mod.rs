//! Experiment configuration, runners, result files and the command line.

pub mod cli;
mod config;
mod rank;
mod run;

pub use config::{
    backend_factory, default_output_dir, AgentSpec, Backend, BridgeSection, CoverageSection, DatasetSection,
    ExperimentConfig, OneOrMany, OpeSection, ScenarioSource, DEFAULT_OUTPUT_DIR, DEFAULT_STRIDE,
    OUTPUT_DIR_ENV,
};
pub use rank::{midranks, rank_table, write_rank_csv, RankCell, RankTable};
pub use run::{
    aggregate, curves_from_records, read_regret_csv, replication_seed, run_cell, run_experiment,
    write_regret_csv, AggregateCurve, EnvSource, RegretCurve, RegretRecord,
};

use thiserror::Error;

use crate::agents::AgentError;
use crate::envs::EnvError;
use crate::ope::OpeError;
use crate::predictive::PredictError;
use crate::subclt::SubCltError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("incomplete results, missing: {}", .0.join(", "))]
    IncompleteResults(Vec<String>),

    #[error(transparent)]
    Env(#[from] EnvError),

    #[error(transparent)]
    Agent(#[from] AgentError),

    #[error(transparent)]
    Predict(#[from] PredictError),

    #[error(transparent)]
    SubClt(#[from] SubCltError),

    #[error(transparent)]
    Ope(#[from] OpeError),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 1,
        }
    }
}
