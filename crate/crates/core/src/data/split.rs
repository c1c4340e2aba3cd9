use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::normalize::FeatureScaling;
use super::partition::{partition_clients, PartitionSpec};
use super::Dataset;
use crate::error::{Error, Result};

/// Internal server-side organizations sharing the autoencoder pre-training slice.
pub const DEFAULT_ORGS: usize = 4;

const TRAIN_SHARE: f64 = 0.70;
const TEST_SHARE: f64 = 0.25;

/// The pooled 70 / 25 / 5 split, before the client share is partitioned.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    pub orgs: Vec<Dataset>,
}

/// Everything a federated run consumes: client shards, the server test set and
/// the organizations' autoencoder pre-training data.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub client_train: Vec<Dataset>,
    pub server_test: Dataset,
    pub ae_pretrain_orgs: Vec<Dataset>,
}

/// Seeded shuffle, then 70% client training, 25% server test and 5% divided
/// among `n_orgs` organizations (earlier organizations take the remainder).
pub fn split_dataset(ds: &Dataset, n_orgs: usize, seed: u64) -> Result<Split> {
    let n = ds.len();
    if n_orgs == 0 {
        return Err(Error::Validation("at least one organization is required".into()));
    }
    let n_train = (n as f64 * TRAIN_SHARE).round() as usize;
    let n_test = (n as f64 * TEST_SHARE).round() as usize;
    let n_org_total = n.saturating_sub(n_train + n_test);
    if n_train == 0 || n_test == 0 || n_org_total < n_orgs {
        return Err(Error::Validation(format!(
            "{n} samples cannot be split 70/25/5 with {n_orgs} organizations"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train_idx, rest) = order.split_at(n_train);
    let (test_idx, org_idx) = rest.split_at(n_test);

    let base = n_org_total / n_orgs;
    let extra = n_org_total % n_orgs;
    let mut orgs = Vec::with_capacity(n_orgs);
    let mut start = 0;
    for k in 0..n_orgs {
        let size = base + usize::from(k < extra);
        orgs.push(ds.subset(&org_idx[start..start + size]));
        start += size;
    }

    Ok(Split {
        train: ds.subset(train_idx),
        test: ds.subset(test_idx),
        orgs,
    })
}

impl Split {
    /// Fits min-max scaling on the client training slice and applies it, with
    /// clipping, to the test and organization slices.
    pub fn normalized(&self) -> Result<(Split, FeatureScaling)> {
        let scaling = FeatureScaling::fit(&self.train);
        let split = Split {
            train: scaling.apply(&self.train)?,
            test: scaling.apply(&self.test)?,
            orgs: self.orgs.iter().map(|o| scaling.apply(o)).collect::<Result<_>>()?,
        };
        Ok((split, scaling))
    }

    pub fn partition(&self, spec: &PartitionSpec, seed: u64) -> Result<SplitResult> {
        Ok(SplitResult {
            client_train: partition_clients(&self.train, spec, seed)?,
            server_test: self.test.clone(),
            ae_pretrain_orgs: self.orgs.clone(),
        })
    }
}
