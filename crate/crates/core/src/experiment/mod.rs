//! Config files, repeated trials, scenario presets and result persistence.
//!
//! Trial `t` of an experiment uses seed `seed + t` for data generation, the
//! split, the partition and the federated run. Trials run in parallel and are
//! collected in trial order, so output is independent of scheduling.

mod config;
mod results;
mod scenario;

use rayon::prelude::*;

pub use config::{
    parse_config, CsvSource, DatasetSource, ExperimentConfig, PartitionConfig, SynthParams, DEFAULT_TRIALS,
};
pub use results::{
    read_results, write_results, AveragedRound, ResultsFile, SchemeRun, Summary, ROUND_LOG, SUMMARY_HEADER,
    SUMMARY_TABLE,
};
pub use scenario::{desk_config, run_scenario, Scenario};

use crate::data::{split_dataset, Dataset, SplitResult};
use crate::error::Result;
use crate::fl::{run_experiment, FlConfig, RoundReport};

/// Environment variable naming the default directory for results.
pub const OUTPUT_DIR_ENV: &str = "FEDLSAE_OUTPUT_DIR";

/// Seed of trial `trial`.
pub fn trial_seed(cfg: &ExperimentConfig, trial: usize) -> u64 {
    cfg.fl.seed.wrapping_add(trial as u64)
}

/// Builds the client shards, test set and organization slices of one trial.
pub fn trial_data(cfg: &ExperimentConfig, fixed: Option<&Dataset>, trial: usize) -> Result<SplitResult> {
    let seed = trial_seed(cfg, trial);
    let ds = cfg.dataset.materialize(fixed, seed)?;
    let (split, _) = split_dataset(&ds, cfg.fl.ae.orgs, seed)?.normalized()?;
    let spec = cfg.partition.to_spec(cfg.fl.n_clients, split.train.len());
    split.partition(&spec, seed)
}

/// The federated settings of one trial.
pub fn trial_fl_config(cfg: &ExperimentConfig, trial: usize) -> FlConfig {
    FlConfig {
        seed: trial_seed(cfg, trial),
        ..cfg.fl.clone()
    }
}

fn run_trial(cfg: &ExperimentConfig, fixed: Option<&Dataset>, trial: usize) -> Result<Vec<RoundReport>> {
    let data = trial_data(cfg, fixed, trial)?;
    run_experiment(&trial_fl_config(cfg, trial), &data)
}

/// Runs every trial of `cfg` and returns the reports in trial order.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<Vec<RoundReport>>> {
    cfg.validate()?;
    let fixed = cfg.dataset.load_fixed()?;
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, fixed.as_ref(), t).map_err(|e| e.in_trial(t)))
        .collect()
}

/// Runs `cfg` under the label `scheme`.
pub fn run_scheme(scheme: impl Into<String>, cfg: &ExperimentConfig) -> Result<SchemeRun> {
    Ok(SchemeRun::new(scheme, cfg.clone(), run_trials(cfg)?))
}

/// Runs a single config file's experiment; the scheme is named after its
/// defense.
pub fn run_config(cfg: &ExperimentConfig) -> Result<ResultsFile> {
    Ok(ResultsFile {
        runs: vec![run_scheme(cfg.fl.defense.name(), cfg)?],
    })
}
