//! Dataset ingestion, preprocessing, splitting and client partitioning.

mod csv;
mod normalize;
mod partition;
mod split;
mod synth;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

pub use self::csv::load_csv;
pub use normalize::{min_max_normalize, FeatureScaling};
pub use partition::{partition_clients, ClientShare, PartitionMode, PartitionSpec};
pub use split::{split_dataset, Split, SplitResult, DEFAULT_ORGS};
pub use synth::synth_dataset;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const BENIGN: u8 = 0;
pub const ATTACK: u8 = 1;

/// Feature rows with binary labels (0 benign, 1 attack).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<u8>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset with generated feature names `f0, f1, ...`.
    pub fn new(features: Matrix, labels: Vec<u8>) -> Result<Self> {
        let names = (0..features.cols()).map(|i| format!("f{i}")).collect();
        Self::with_names(features, labels, names)
    }

    pub fn with_names(features: Matrix, labels: Vec<u8>, feature_names: Vec<String>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::dim("dataset labels", features.rows(), labels.len()));
        }
        if feature_names.len() != features.cols() {
            return Err(Error::dim("dataset feature names", features.cols(), feature_names.len()));
        }
        if let Some(pos) = labels.iter().position(|&y| y > ATTACK) {
            return Err(Error::Validation(format!("label {} at row {pos} is not 0 or 1", labels[pos])));
        }
        if !features.is_finite() {
            return Err(Error::Validation("dataset features contain NaN or infinity".into()));
        }
        Ok(Self {
            features,
            labels,
            feature_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn attack_count(&self) -> usize {
        self.labels.iter().filter(|&&y| y == ATTACK).count()
    }

    pub fn benign_count(&self) -> usize {
        self.len() - self.attack_count()
    }

    pub fn attack_ratio(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.attack_count() as f64 / self.len() as f64
        }
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Stable content hash over features (bit patterns) and labels.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.features.shape().hash(&mut h);
        for v in self.features.as_slice() {
            v.to_bits().hash(&mut h);
        }
        self.labels.hash(&mut h);
        h.finish()
    }
}
