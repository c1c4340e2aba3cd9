use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{load_csv, synth_dataset, ClientShare, Dataset, PartitionSpec};
use crate::error::{Error, Result};
use crate::fl::FlConfig;

/// Parameters of the synthetic two-class generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthParams {
    pub n: usize,
    pub d: usize,
    pub separation: f64,
    pub attack_fraction: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n: 5000,
            d: 20,
            separation: 6.0,
            attack_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSource {
    pub path: PathBuf,
    #[serde(default = "default_label_column")]
    pub label_column: String,
    #[serde(default)]
    pub drop_columns: Vec<String>,
}

fn default_label_column() -> String {
    "Label".to_string()
}

/// Where the records come from. The synthetic generator is re-drawn per trial;
/// a CSV file is loaded once and re-split per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSource {
    Synth(SynthParams),
    Csv(CsvSource),
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Synth(SynthParams::default())
    }
}

impl DatasetSource {
    /// Loads a CSV source; `None` for the synthetic generator.
    pub fn load_fixed(&self) -> Result<Option<Dataset>> {
        match self {
            DatasetSource::Synth(_) => Ok(None),
            DatasetSource::Csv(c) => {
                let drop: Vec<&str> = c.drop_columns.iter().map(String::as_str).collect();
                load_csv(&c.path, &c.label_column, &drop).map(Some)
            }
        }
    }

    /// The dataset for one trial.
    pub fn materialize(&self, fixed: Option<&Dataset>, seed: u64) -> Result<Dataset> {
        match (self, fixed) {
            (_, Some(ds)) => Ok(ds.clone()),
            (DatasetSource::Synth(p), None) => synth_dataset(p.n, p.d, p.separation, p.attack_fraction, seed),
            (DatasetSource::Csv(c), None) => Err(Error::Validation(format!(
                "csv dataset {} was not loaded",
                c.path.display()
            ))),
        }
    }
}

/// Client partition as written in a config file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionConfig {
    #[default]
    Iid,
    /// Explicit `(count, attack_ratio)` per client.
    Custom { per_client: Vec<ClientShare> },
    /// Equal shard sizes covering `fill` of the training slice, with a given
    /// attack ratio per client.
    LabelSkew { attack_ratios: Vec<f64>, fill: f64 },
}

impl PartitionConfig {
    /// Ten clients: the first six share the pooled class mix, clients 6 and 8
    /// hold only benign traffic, clients 7 and 9 only attack traffic. Each
    /// shard is a tenth of 90% of the training slice so the pure shards can be
    /// filled from balanced data.
    pub fn skewed_ten() -> Self {
        let mut attack_ratios = vec![0.5; 6];
        attack_ratios.extend([0.0, 1.0, 0.0, 1.0]);
        PartitionConfig::LabelSkew {
            attack_ratios,
            fill: 0.9,
        }
    }

    fn validate(&self, n_clients: usize) -> Result<()> {
        match self {
            PartitionConfig::Iid => Ok(()),
            PartitionConfig::Custom { per_client } => {
                if per_client.len() != n_clients {
                    return Err(Error::config(
                        "partition.per_client",
                        format!("lists {} clients, expected {n_clients}", per_client.len()),
                    ));
                }
                PartitionSpec::custom(per_client.clone())
                    .validate()
                    .map_err(|e| Error::config("partition.per_client", e.to_string()))
            }
            PartitionConfig::LabelSkew { attack_ratios, fill } => {
                if attack_ratios.len() != n_clients {
                    return Err(Error::config(
                        "partition.attack_ratios",
                        format!("lists {} clients, expected {n_clients}", attack_ratios.len()),
                    ));
                }
                if let Some(r) = attack_ratios.iter().find(|r| !(0.0..=1.0).contains(*r)) {
                    return Err(Error::config("partition.attack_ratios", format!("{r} not in [0, 1]")));
                }
                if !(*fill > 0.0 && *fill <= 1.0) {
                    return Err(Error::config("partition.fill", format!("{fill} not in (0, 1]")));
                }
                Ok(())
            }
        }
    }

    /// Resolves the partition against the size of the training slice.
    pub fn to_spec(&self, n_clients: usize, n_train: usize) -> PartitionSpec {
        match self {
            PartitionConfig::Iid => PartitionSpec::iid(n_clients),
            PartitionConfig::Custom { per_client } => PartitionSpec::custom(per_client.clone()),
            PartitionConfig::LabelSkew { attack_ratios, fill } => {
                let count = (fill * n_train as f64 / attack_ratios.len() as f64).floor() as usize;
                PartitionSpec::custom(
                    attack_ratios
                        .iter()
                        .map(|&attack_ratio| ClientShare { count, attack_ratio })
                        .collect(),
                )
            }
        }
    }
}

/// A complete, file-backed experiment: the federated settings at the top level
/// plus the dataset, partition, trial count and output location.
///
/// Files are TOML. Every key is optional; omitted keys take their defaults
/// and unknown keys are rejected with their path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub fl: FlConfig,
    pub dataset: DatasetSource,
    pub partition: PartitionConfig,
    pub trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// The keys that sit next to the federated settings.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentKeys {
    #[serde(default)]
    dataset: DatasetSource,
    #[serde(default)]
    partition: PartitionConfig,
    #[serde(default = "default_trials")]
    trials: usize,
    #[serde(default)]
    output: Option<PathBuf>,
}

const EXPERIMENT_KEYS: [&str; 4] = ["dataset", "partition", "trials", "output"];

impl<'de> Deserialize<'de> for ExperimentConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let table = toml::Table::deserialize(d)?;
        ExperimentConfig::from_table(table).map_err(serde::de::Error::custom)
    }
}

pub const DEFAULT_TRIALS: usize = 5;

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            fl: FlConfig::default(),
            dataset: DatasetSource::default(),
            partition: PartitionConfig::default(),
            trials: DEFAULT_TRIALS,
            output: None,
        }
    }
}

fn keyed<T: serde::de::DeserializeOwned>(table: toml::Table) -> Result<T> {
    serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().message().trim().to_string())
    })
}

impl ExperimentConfig {
    /// Builds a config from a parsed key tree without validating it.
    pub fn from_table(mut table: toml::Table) -> Result<Self> {
        let mut extra = toml::Table::new();
        for key in EXPERIMENT_KEYS {
            if let Some(v) = table.remove(key) {
                extra.insert(key.to_string(), v);
            }
        }
        let fl: FlConfig = keyed(table)?;
        let keys: ExperimentKeys = keyed(extra)?;
        Ok(Self {
            fl,
            dataset: keys.dataset,
            partition: keys.partition,
            trials: keys.trials,
            output: keys.output,
        })
    }

    /// Parses and validates TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config(".", e.message().trim().to_string()))?;
        let cfg = Self::from_table(table)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(".", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.fl.validate()?;
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        match &self.dataset {
            DatasetSource::Synth(p) => {
                if p.n == 0 || p.d == 0 {
                    return Err(Error::config("dataset", "n and d must be at least 1"));
                }
                if !(p.separation.is_finite() && p.separation >= 0.0) {
                    return Err(Error::config("dataset.separation", format!("{} must be >= 0", p.separation)));
                }
                if !(0.0..=1.0).contains(&p.attack_fraction) {
                    return Err(Error::config(
                        "dataset.attack_fraction",
                        format!("{} not in [0, 1]", p.attack_fraction),
                    ));
                }
            }
            DatasetSource::Csv(c) => {
                if c.path.as_os_str().is_empty() {
                    return Err(Error::config("dataset.path", "must not be empty"));
                }
            }
        }
        self.partition.validate(self.fl.n_clients)
    }

    /// Sets `key` (dotted path, e.g. `train.learning_rate`) to a TOML value
    /// literal. Bare words that do not parse as TOML are taken as strings.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self> {
        let mut root = toml::Table::try_from(self).map_err(|e| Error::config(key, e.to_string()))?;
        let parsed = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));

        let parts: Vec<&str> = key.split('.').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(Error::config(key, "malformed key"));
        }
        let (last, parents) = parts.split_last().expect("split yields at least one part");
        let mut table = &mut root;
        for (i, p) in parents.iter().enumerate() {
            let entry = table
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            table = entry
                .as_table_mut()
                .ok_or_else(|| Error::config(parts[..=i].join("."), "is not a table"))?;
        }
        table.insert(last.to_string(), parsed);

        let cfg = Self::from_table(root)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Reads, parses and validates a config file. A relative CSV path is taken
/// relative to the config file's directory.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = ExperimentConfig::from_toml_str(&text)?;
    if let DatasetSource::Csv(c) = &mut cfg.dataset {
        if c.path.is_relative() {
            if let Some(dir) = path.parent() {
                c.path = dir.join(&c.path);
            }
        }
    }
    Ok(cfg)
}
