use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ATTACK};
use crate::error::{Error, Result};
use crate::nn::{predict, ModelParams, ModelSpec};

/// Confusion counts with attack as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(predicted: &[u8], actual: &[u8]) -> Result<Self> {
        if predicted.len() != actual.len() {
            return Err(Error::dim("predictions", actual.len(), predicted.len()));
        }
        let mut c = Confusion::default();
        for (&p, &y) in predicted.iter().zip(actual) {
            match (p == ATTACK, y == ATTACK) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy, precision, recall and F1. Any ratio with a zero denominator is 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn from_confusion(c: &Confusion) -> Self {
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            accuracy: ratio(c.tp + c.tn, c.total()),
            precision,
            recall,
            f1,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.accuracy, self.precision, self.recall, self.f1]
    }

    pub fn min(&self) -> f64 {
        self.as_array().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Element-wise mean of a non-empty collection.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a Metrics>) -> Option<Metrics> {
        let mut sum = [0.0; 4];
        let mut n = 0usize;
        for m in items {
            for (s, v) in sum.iter_mut().zip(m.as_array()) {
                *s += v;
            }
            n += 1;
        }
        (n > 0).then(|| {
            let k = n as f64;
            Metrics {
                accuracy: sum[0] / k,
                precision: sum[1] / k,
                recall: sum[2] / k,
                f1: sum[3] / k,
            }
        })
    }
}

/// Scores a model on a held-out set.
pub fn evaluate(model: &ModelParams, spec: &ModelSpec, test: &Dataset) -> Result<Metrics> {
    if test.is_empty() {
        return Err(Error::Validation("cannot evaluate on an empty test set".into()));
    }
    let predicted = predict(model, spec, &test.features)?;
    Ok(Metrics::from_confusion(&Confusion::from_predictions(&predicted, &test.labels)?))
}
