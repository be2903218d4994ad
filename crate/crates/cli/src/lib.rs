//! Command-line front end: CSV ingestion, layered configuration, analysis
//! orchestration and JSON/TSV/SVG outputs.

pub mod analysis;
pub mod args;
pub mod config;
pub mod error;
pub mod ingest;
pub mod output;
pub mod svg;

use std::path::PathBuf;

use args::{Cli, Command};
use config::{ConfigLayer, RunConfig, SEED_ENV};
use error::CliResult;
use ingest::{ingest_csv, Columns};
use output::{InputInfo, Report};

/// Parses nothing and prints nothing: resolves the configuration, runs the
/// analysis and writes every artifact, returning the written paths.
pub fn execute(cli: &Cli, env_seed: Option<&str>) -> CliResult<Vec<PathBuf>> {
    let common = cli.command.common();
    let file = common.config.as_deref().map(ConfigLayer::from_toml_file).transpose()?;
    let config = RunConfig::resolve(file.as_ref(), &common.settings.layer(), env_seed)?;
    let sample = ingest_csv(
        &common.input,
        &Columns {
            value: &common.value_col,
            label: common.label_col.as_deref(),
            status: common.status_col.as_deref(),
        },
    )?;
    let report = match cli.command {
        Command::Hist(_) => Report::Hist(analysis::run_hist(&sample, &config)?),
        Command::Anoht1(_) => Report::Anoht1(analysis::run_anoht1(&sample, &config)?),
        Command::Anoht2(_) => Report::Anoht2(analysis::run_anoht2(&sample, &config)?),
        Command::Survival(_) => Report::Survival(analysis::run_survival(&sample, &config)?),
    };
    let input = InputInfo {
        path: common.input.display().to_string(),
        value_col: common.value_col.clone(),
        label_col: common.label_col.clone(),
        status_col: common.status_col.clone(),
    };
    output::write_all(&common.out_dir, &report, &input, &config, common.svg)
}

/// Seed from the environment, if set.
pub fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV).ok()
}
