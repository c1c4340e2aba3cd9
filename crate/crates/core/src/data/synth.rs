use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::normalize::min_max_normalize;
use super::{Dataset, ATTACK, BENIGN};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Two unit-variance Gaussian clusters standing in for benign and attack
/// traffic. The attack mean sits `separation` away from the origin along the
/// all-ones diagonal. Exactly `round(n * attack_fraction)` rows are attacks;
/// the result is min-max normalized.
pub fn synth_dataset(n: usize, d: usize, separation: f64, attack_fraction: f64, seed: u64) -> Result<Dataset> {
    if n < 2 || d < 2 {
        return Err(Error::Validation(format!("synthetic data needs n >= 2 and d >= 2, got n={n}, d={d}")));
    }
    if !(0.0..=1.0).contains(&attack_fraction) || !separation.is_finite() {
        return Err(Error::Validation(format!(
            "attack_fraction {attack_fraction} / separation {separation} out of range"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_attack = (n as f64 * attack_fraction).round() as usize;
    let mut labels: Vec<u8> = (0..n).map(|i| if i < n_attack { ATTACK } else { BENIGN }).collect();
    labels.shuffle(&mut rng);

    let offset = separation / (d as f64).sqrt();
    let mut values = Vec::with_capacity(n * d);
    for &y in &labels {
        let shift = if y == ATTACK { offset } else { 0.0 };
        for _ in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            values.push(z + shift);
        }
    }
    let raw = Dataset::new(Matrix::from_vec(n, d, values)?, labels)?;
    Ok(min_max_normalize(&raw).0)
}
