use crate::error::{Error, Result};

/// Minimum gap between the two cluster means below which every client is
/// treated as benign.
pub const DEFAULT_GAP_THRESHOLD: f64 = 0.02;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sse(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum()
}

/// Exact two-means on scalar scores. Returns `(benign, malicious)` index lists,
/// each ascending.
///
/// Sorted-order splits are enumerated and the one with the smallest total
/// within-cluster sum of squares wins. The larger cluster is benign; on equal
/// sizes the cluster with the higher mean is. Identical scores give no split and
/// everything is benign.
pub fn cluster_scores(scores: &[f64]) -> Result<(Vec<usize>, Vec<usize>)> {
    if scores.len() < 2 {
        return Err(Error::Validation(format!("clustering needs at least 2 scores, got {}", scores.len())));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::Validation(format!("score {i} is not finite")));
    }
    let all: Vec<usize> = (0..scores.len()).collect();
    let first = scores[0];
    if scores.iter().all(|&s| s == first) {
        return Ok((all, Vec::new()));
    }

    let mut order = all;
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| scores[i]).collect();

    let mut best = (f64::INFINITY, 1);
    for cut in 1..sorted.len() {
        let cost = sse(&sorted[..cut]) + sse(&sorted[cut..]);
        if cost < best.0 {
            best = (cost, cut);
        }
    }
    let (low, high) = order.split_at(best.1);
    let (low_mean, high_mean) = (mean(&sorted[..best.1]), mean(&sorted[best.1..]));

    let low_is_benign = low.len() > high.len() || (low.len() == high.len() && low_mean > high_mean);
    let (mut benign, mut malicious) = if low_is_benign {
        (low.to_vec(), high.to_vec())
    } else {
        (high.to_vec(), low.to_vec())
    };
    benign.sort_unstable();
    malicious.sort_unstable();
    Ok((benign, malicious))
}

/// [`cluster_scores`] followed by the gap guard: when the two cluster means
/// differ by less than `gap_threshold`, nobody is excluded.
pub fn partition_scores(scores: &[f64], gap_threshold: Option<f64>) -> Result<(Vec<usize>, Vec<usize>)> {
    let (benign, malicious) = cluster_scores(scores)?;
    if let (Some(tau), false) = (gap_threshold, malicious.is_empty()) {
        let pick = |ids: &[usize]| ids.iter().map(|&i| scores[i]).collect::<Vec<_>>();
        let gap = (mean(&pick(&benign)) - mean(&pick(&malicious))).abs();
        if gap < tau {
            return Ok(((0..scores.len()).collect(), Vec::new()));
        }
    }
    Ok((benign, malicious))
}
