use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// Per-feature minimum and maximum captured on the data that was normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl FeatureScaling {
    pub fn fit(ds: &Dataset) -> Self {
        let d = ds.dim();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for row in ds.features.iter_rows() {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        if ds.is_empty() {
            min.fill(0.0);
            max.fill(0.0);
        }
        Self { min, max }
    }

    /// `(x - min) / (max - min)` clipped to `[0, 1]`; a constant feature maps to 0.
    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.dim() != self.min.len() {
            return Err(Error::dim("feature scaling", self.min.len(), ds.dim()));
        }
        let mut out = ds.clone();
        let rows = out.features.rows();
        for r in 0..rows {
            for (j, v) in out.features.row_mut(r).iter_mut().enumerate() {
                let range = self.max[j] - self.min[j];
                *v = if range > 0.0 {
                    ((*v - self.min[j]) / range).clamp(0.0, 1.0)
                } else {
                    0.0
                };
            }
        }
        Ok(out)
    }
}

/// Min-max normalization fitted on `ds` itself.
pub fn min_max_normalize(ds: &Dataset) -> (Dataset, FeatureScaling) {
    let scaling = FeatureScaling::fit(ds);
    let out = scaling.apply(ds).expect("scaling fitted on the same width");
    (out, scaling)
}
