use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::fl::{Metrics, RoundReport};

/// File name of the newline-delimited round log inside a results directory.
pub const ROUND_LOG: &str = "rounds.ndjson";
/// File name of the comma-separated summary inside a results directory.
pub const SUMMARY_TABLE: &str = "summary.csv";
pub const SUMMARY_HEADER: [&str; 5] = ["scheme", "accuracy", "precision", "recall", "f1"];

/// Trial-averaged metrics of one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedRound {
    pub round: usize,
    /// Number of trial records that went into the average.
    pub trials: usize,
    #[serde(flatten)]
    pub metrics: Metrics,
}

/// Trial-averaged final-round metrics and the mean over every round of every
/// trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(rename = "final")]
    pub final_round: Metrics,
    pub mean: Metrics,
}

/// All trials of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeRun {
    pub scheme: String,
    /// The effective configuration, after presets and overrides.
    pub config: ExperimentConfig,
    /// `trials[t]` holds trial `t`'s reports in round order.
    pub trials: Vec<Vec<RoundReport>>,
    pub averaged: Vec<AveragedRound>,
    /// `None` when there is nothing to summarize.
    pub summary: Option<Summary>,
}

impl SchemeRun {
    /// Computes the averaged rows and the summary from the raw trials.
    pub fn new(scheme: impl Into<String>, config: ExperimentConfig, trials: Vec<Vec<RoundReport>>) -> Self {
        let max_rounds = trials.iter().map(Vec::len).max().unwrap_or(0);
        let averaged = (0..max_rounds)
            .filter_map(|k| {
                let rows: Vec<&RoundReport> = trials.iter().filter_map(|t| t.get(k)).collect();
                Metrics::mean(rows.iter().map(|r| &r.metrics)).map(|metrics| AveragedRound {
                    round: rows[0].round,
                    trials: rows.len(),
                    metrics,
                })
            })
            .collect();
        let finals = Metrics::mean(trials.iter().filter_map(|t| t.last()).map(|r| &r.metrics));
        let all = Metrics::mean(trials.iter().flatten().map(|r| &r.metrics));
        let summary = finals.zip(all).map(|(final_round, mean)| Summary { final_round, mean });
        Self {
            scheme: scheme.into(),
            config,
            trials,
            averaged,
            summary,
        }
    }
}

/// Results of one experiment or scenario, one entry per scheme.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultsFile {
    pub runs: Vec<SchemeRun>,
}

impl ResultsFile {
    pub fn run(&self, scheme: &str) -> Option<&SchemeRun> {
        self.runs.iter().find(|r| r.scheme == scheme)
    }

    /// `(row label, metrics)` pairs of the summary table.
    pub fn summary_rows(&self) -> Vec<(String, Metrics)> {
        self.runs
            .iter()
            .filter_map(|r| r.summary.map(|s| (r, s)))
            .flat_map(|(r, s)| {
                [
                    (format!("{}:final", r.scheme), s.final_round),
                    (format!("{}:mean", r.scheme), s.mean),
                ]
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Record {
    Config {
        scheme: String,
        config: Box<ExperimentConfig>,
    },
    Round {
        scheme: String,
        trial: usize,
        #[serde(flatten)]
        report: RoundReport,
    },
    Average {
        scheme: String,
        #[serde(flatten)]
        row: AveragedRound,
    },
    Summary {
        scheme: String,
        #[serde(flatten)]
        summary: Summary,
    },
}

fn records(rf: &ResultsFile) -> Vec<Record> {
    let mut out = Vec::new();
    for run in &rf.runs {
        let scheme = || run.scheme.clone();
        out.push(Record::Config {
            scheme: scheme(),
            config: Box::new(run.config.clone()),
        });
        for (trial, reports) in run.trials.iter().enumerate() {
            for report in reports {
                out.push(Record::Round {
                    scheme: scheme(),
                    trial,
                    report: report.clone(),
                });
            }
        }
        out.extend(run.averaged.iter().map(|row| Record::Average {
            scheme: scheme(),
            row: *row,
        }));
        if let Some(summary) = run.summary {
            out.push(Record::Summary {
                scheme: scheme(),
                summary,
            });
        }
    }
    out
}

fn parse_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Writes `dir/rounds.ndjson` (one record per line) and `dir/summary.csv`,
/// creating `dir` if needed.
pub fn write_results(rf: &ResultsFile, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let log_path = dir.join(ROUND_LOG);
    let file = fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
    let mut w = BufWriter::new(file);
    for record in records(rf) {
        serde_json::to_writer(&mut w, &record).map_err(|e| parse_error(&log_path, e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(&log_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&log_path, e))?;

    let table_path = dir.join(SUMMARY_TABLE);
    let csv_err = |e: csv::Error| parse_error(&table_path, e.to_string());
    let mut w = csv::Writer::from_path(&table_path).map_err(csv_err)?;
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for (label, m) in rf.summary_rows() {
        let cells = m.as_array().map(|v| v.to_string());
        w.write_record(std::iter::once(label.as_str()).chain(cells.iter().map(String::as_str)))
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(&table_path, e))?;
    Ok(())
}

fn read_summary_table(path: &Path) -> Result<Vec<(String, Metrics)>> {
    let csv_err = |e: csv::Error| parse_error(path, e.to_string());
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(SUMMARY_HEADER) {
        return Err(parse_error(path, format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let num = |k: usize| -> Result<f64> {
            rec[k]
                .parse()
                .map_err(|_| parse_error(path, format!("row {}: `{}` is not a number", i + 1, &rec[k])))
        };
        rows.push((
            rec[0].to_string(),
            Metrics {
                accuracy: num(1)?,
                precision: num(2)?,
                recall: num(3)?,
                f1: num(4)?,
            },
        ));
    }
    Ok(rows)
}

/// Reads a directory written by [`write_results`]. The summary table must agree
/// with the summary records of the round log.
pub fn read_results(dir: impl AsRef<Path>) -> Result<ResultsFile> {
    let dir = dir.as_ref();
    let log_path: PathBuf = dir.join(ROUND_LOG);
    let file = fs::File::open(&log_path).map_err(|e| Error::io(&log_path, e))?;

    let mut runs: Vec<SchemeRun> = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(&log_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let record: Record = serde_json::from_str(&line)
            .map_err(|e| parse_error(&log_path, format!("line {lineno}: {e}")))?;
        if let Record::Config { scheme, config } = record {
            runs.push(SchemeRun {
                scheme,
                config: *config,
                trials: Vec::new(),
                averaged: Vec::new(),
                summary: None,
            });
            continue;
        }
        let run = runs
            .last_mut()
            .ok_or_else(|| parse_error(&log_path, format!("line {lineno}: record before any config record")))?;
        let owner = match &record {
            Record::Round { scheme, .. } | Record::Average { scheme, .. } | Record::Summary { scheme, .. } => scheme,
            Record::Config { .. } => unreachable!("handled above"),
        };
        if *owner != run.scheme {
            return Err(parse_error(
                &log_path,
                format!("line {lineno}: record for `{owner}` inside `{}`", run.scheme),
            ));
        }
        match record {
            Record::Round { trial, report, .. } => {
                if trial == run.trials.len() {
                    run.trials.push(Vec::new());
                } else if trial + 1 != run.trials.len() {
                    return Err(parse_error(&log_path, format!("line {lineno}: trial {trial} out of order")));
                }
                run.trials[trial].push(report);
            }
            Record::Average { row, .. } => run.averaged.push(row),
            Record::Summary { summary, .. } => run.summary = Some(summary),
            Record::Config { .. } => unreachable!("handled above"),
        }
    }

    let rf = ResultsFile { runs };
    let table_path = dir.join(SUMMARY_TABLE);
    if read_summary_table(&table_path)? != rf.summary_rows() {
        return Err(parse_error(&table_path, format!("disagrees with {ROUND_LOG}")));
    }
    Ok(rf)
}
