//! `fed-lsae` command-line runner.
//!
//! Results go to `--output` if given, otherwise to the config's `output` key,
//! otherwise to `$FEDLSAE_OUTPUT_DIR/<name>` or `results/<name>`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use fed_lsae::experiment::{
    parse_config, run_config, run_scenario, write_results, ResultsFile, Scenario, OUTPUT_DIR_ENV, SUMMARY_HEADER,
};

#[derive(Parser)]
#[command(name = "fed-lsae", version, about = "Federated intrusion-detection simulator with poisoning defenses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        config: PathBuf,
        /// Directory for rounds.ndjson and summary.csv.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a preset: baseline, defense_eval or comparison.
    Scenario {
        name: String,
        /// `key=value` applied to every scheme of the preset, e.g.
        /// `trials=2` or `train.learning_rate=0.05`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Parse and check a config file, then print the effective config.
    Validate { config: PathBuf },
}

fn split_override(raw: &str) -> Result<(String, String)> {
    match raw.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => bail!("override `{raw}` is not of the form key=value"),
    }
}

fn default_output(name: &str) -> PathBuf {
    let root = std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("results"));
    root.join(name)
}

fn print_summary(rf: &ResultsFile) {
    println!("{}", SUMMARY_HEADER.join(","));
    for (label, m) in rf.summary_rows() {
        println!(
            "{label},{:.4},{:.4},{:.4},{:.4}",
            m.accuracy, m.precision, m.recall, m.f1
        );
    }
}

fn save(rf: &ResultsFile, dir: &Path) -> Result<()> {
    write_results(rf, dir).with_context(|| format!("writing results to {}", dir.display()))?;
    eprintln!("results written to {}", dir.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, output } => {
            let cfg = parse_config(&config).with_context(|| format!("loading {}", config.display()))?;
            let stem = config
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".to_string());
            let dir = output.or_else(|| cfg.output.clone()).unwrap_or_else(|| default_output(&stem));
            let start = Instant::now();
            let rf = run_config(&cfg)?;
            eprintln!("{} trial(s) finished in {:.1?}", cfg.trials, start.elapsed());
            print_summary(&rf);
            save(&rf, &dir)
        }
        Command::Scenario {
            name,
            overrides,
            output,
        } => {
            let scenario: Scenario = name.parse()?;
            let overrides = overrides.iter().map(|o| split_override(o)).collect::<Result<Vec<_>>>()?;
            let dir = output.unwrap_or_else(|| default_output(scenario.name()));
            let start = Instant::now();
            let rf = run_scenario(scenario, &overrides)?;
            eprintln!("scenario {scenario} finished in {:.1?}", start.elapsed());
            print_summary(&rf);
            save(&rf, &dir)
        }
        Command::Validate { config } => {
            let cfg = parse_config(&config).with_context(|| format!("loading {}", config.display()))?;
            print!("{}", cfg.to_toml_string()?);
            eprintln!("{}: ok", config.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
