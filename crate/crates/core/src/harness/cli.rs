//! `pfnts` command line.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use super::{
    aggregate, curves_from_records, rank_table, read_regret_csv, run_experiment, write_rank_csv,
    write_regret_csv, default_output_dir, ExperimentConfig, HarnessError, ScenarioSource, DEFAULT_STRIDE,
};
use crate::domain::SeedSpec;
use crate::envs::{generate_logged_data, read_logged_file, write_logged_csv, EngagementDgp, Environment, SyntheticEnv};
use crate::ope::{ope_report, replay_run, write_weight_histogram_csv};
use crate::predictive::conjugate_factory;
use crate::subclt::{coverage_diagnostic, summarize_coverage, write_coverage_csv, CoverageSummary};

#[derive(Debug, Parser)]
#[command(name = "pfnts", version, about = "Contextual bandit experiments with SubCLT Thompson sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config's global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run bandit experiments and write regret curves.
    Run,
    /// Evaluate the configured agents on logged data.
    Ope,
    /// Interval coverage and length diagnostic.
    Coverage,
    /// Rank table and aggregates for a finished run directory.
    Report,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(HarnessError::Config("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start workers: {e}")))?;
    pool.install(|| match cli.command {
        Command::Run => cmd_run(cli),
        Command::Ope => cmd_ope(cli),
        Command::Coverage => cmd_coverage(cli),
        Command::Report => cmd_report(cli),
    })
}

fn load(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| HarnessError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> Result<PathBuf, HarnessError> {
    let dir = match cfg {
        Some(c) => c.output_dir(cli.out.as_deref()),
        None => cli.out.clone().unwrap_or_else(default_output_dir),
    };
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(f, value)?;
    Ok(())
}

fn cmd_run(cli: &Cli) -> Result<(), HarnessError> {
    let cfg = load(cli)?;
    cfg.require_scenarios()?;
    let dir = out_dir(cli, Some(&cfg))?;
    let curves = run_experiment(&cfg, &SeedSpec::root(cfg.seed))?;
    write_regret_csv(&curves, BufWriter::new(File::create(dir.join("regret.csv"))?))?;
    write_json(&dir.join("aggregate.json"), &aggregate(&curves, cfg.stride))?;
    write_json(&dir.join("config.json"), &cfg)?;
    for a in aggregate(&curves, cfg.horizon) {
        println!(
            "{} {} final regret {:.3} (sd {:.3}, se {:.3}, R={})",
            a.scenario,
            a.agent,
            a.mean.last().copied().unwrap_or(0.0),
            a.sd.last().copied().unwrap_or(0.0),
            a.se.last().copied().unwrap_or(0.0),
            a.replications
        );
    }
    Ok(())
}

fn cmd_report(cli: &Cli) -> Result<(), HarnessError> {
    let cfg = match &cli.config {
        Some(_) => Some(load(cli)?),
        None => None,
    };
    let dir = out_dir(cli, cfg.as_ref())?;
    let path = dir.join("regret.csv");
    let file = File::open(&path)
        .map_err(|e| HarnessError::IncompleteResults(vec![format!("{}: {e}", path.display())]))?;
    let curves = curves_from_records(&read_regret_csv(file)?);
    let table = rank_table(&curves)?;
    write_rank_csv(&table, BufWriter::new(File::create(dir.join("rank_table.csv"))?))?;
    write_json(&dir.join("rank_table.json"), &table)?;
    let stride = cfg.as_ref().map_or(DEFAULT_STRIDE, |c| c.stride);
    write_json(&dir.join("aggregate.json"), &aggregate(&curves, stride))?;
    for c in &table.cells {
        println!("{} {} {:.3} +- {:.3} rank {}", c.scenario, c.agent, c.mean_final, c.se, c.rank);
    }
    for (a, r) in &table.average_rank {
        println!("average rank {a} {r}");
    }
    Ok(())
}

#[derive(Serialize)]
struct CoverageOutput {
    scenario: String,
    summary: Vec<CoverageSummary>,
}

fn cmd_coverage(cli: &Cli) -> Result<(), HarnessError> {
    let cfg = load(cli)?;
    let section = cfg.coverage.clone().unwrap_or_default();
    let mut scenarios = Vec::new();
    for name in cfg.require_scenarios()? {
        match cfg.resolve_scenario(&name)? {
            ScenarioSource::Synthetic(s) => scenarios.push((name, s)),
            ScenarioSource::Dataset(_) => {
                return Err(HarnessError::Config(format!("coverage needs a synthetic scenario, got {name}")))
            }
        }
    }
    let dir = out_dir(cli, Some(&cfg))?;
    let root = SeedSpec::root(cfg.seed);
    let diag = section.diagnostic();
    let mut records = Vec::new();
    let mut summaries = Vec::new();
    for (name, sc) in scenarios {
        let factory = conjugate_factory(section.prior_precision, section.noise_var.unwrap_or(sc.noise_var()));
        let recs = coverage_diagnostic(
            |s| Box::new(SyntheticEnv::new(sc, s)) as Box<dyn Environment>,
            &factory,
            &diag,
            &root.derive(&format!("coverage/{name}"), 0),
        )?;
        let summary = summarize_coverage(&recs);
        for s in &summary {
            println!("{name} n={} coverage {:.3} mean length {:.4}", s.n, s.coverage, s.mean_length);
        }
        summaries.push(CoverageOutput { scenario: name, summary });
        records.extend(recs);
    }
    write_coverage_csv(&records, BufWriter::new(File::create(dir.join("coverage.csv"))?))?;
    write_json(&dir.join("coverage_summary.json"), &summaries)?;
    Ok(())
}

fn cmd_ope(cli: &Cli) -> Result<(), HarnessError> {
    let cfg = load(cli)?;
    let section = cfg.ope.clone().unwrap_or_default();
    let targets: Vec<_> = cfg.agents.iter().filter(|a| !a.is_oracle()).collect();
    if targets.is_empty() {
        return Err(HarnessError::Config("ope needs at least one non-oracle agent".into()));
    }
    if section.estimators.is_empty() {
        return Err(HarnessError::Config("ope needs at least one estimator".into()));
    }
    let dir = out_dir(cli, Some(&cfg))?;
    let root = SeedSpec::root(cfg.seed);
    let log = match &section.log {
        Some(p) => read_logged_file(p)?,
        None => {
            let dgp = EngagementDgp::new(section.covariates, section.propensities.len(), &root.derive("dgp", 0));
            let log = generate_logged_data(&dgp, &section.propensities, section.users, section.days, &root.derive("log", 0))?;
            write_logged_csv(&log, BufWriter::new(File::create(dir.join("logged.csv"))?))?;
            log
        }
    };
    let first = log.first().ok_or(crate::ope::OpeError::EmptyLog)?;
    let (arms, dim) = (first.propensity.len(), first.context.len());
    for spec in targets {
        let name = spec.name();
        let mut agent = spec
            .build(arms, dim, cfg.bridge.as_ref())?
            .expect("oracle agents are filtered out");
        let trace = replay_run(agent.as_mut(), &log, section.draws, &root.derive(&format!("replay/{name}"), 0))?;
        for est in &section.estimators {
            let (report, weights) = ope_report(
                *est,
                &log,
                &trace,
                section.replicates,
                &section.horizons,
                &root.derive(&format!("ope/{name}/{}", est.name()), 0),
            )?;
            println!(
                "{name} {} {:.4} [{:.4}, {:.4}] max weight {:.3}",
                report.estimator, report.point, report.ci_lo, report.ci_hi, report.max_weight
            );
            write_json(&dir.join(format!("ope_{name}_{}.json", est.name())), &report)?;
            write_weight_histogram_csv(&weights, BufWriter::new(File::create(dir.join(format!("weights_{name}.csv")))?))?;
        }
    }
    Ok(())
}
