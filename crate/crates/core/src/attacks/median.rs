use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::ModelParams;

/// Directed-deviation poisoning built from the coalition's own honest updates.
///
/// For each coordinate the expected change direction is the sign of the
/// colluders' mean minus the global value. The emitted value lies beyond the
/// colluders' observed range on the opposite side, drawn uniformly from an
/// interval whose width is controlled by `b` in `[1, 2]`. Coordinates with no
/// change direction keep the attacker's own value.
pub fn median_attack(
    own_update: &ModelParams,
    global: &ModelParams,
    colluders: &[ModelParams],
    b: f64,
    seed: u64,
) -> Result<ModelParams> {
    if colluders.is_empty() {
        return Err(Error::Validation("median attack needs at least one colluding update".into()));
    }
    if !(1.0..=2.0).contains(&b) {
        return Err(Error::Validation(format!("median_b {b} not in [1, 2]")));
    }
    if !own_update.same_shape(global) {
        return Err(Error::dim("median attack global model", "the shape of the update", "a different shape"));
    }
    if let Some(k) = colluders.iter().position(|c| !c.same_shape(own_update)) {
        return Err(Error::dim(format!("colluder {k}"), "the shape of the update", "a different shape"));
    }

    let flats: Vec<Vec<f64>> = colluders.iter().map(ModelParams::to_flat).collect();
    let g = global.to_flat();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = own_update.clone();
    let n = flats.len() as f64;
    for (j, v) in out.values_mut().enumerate() {
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for f in &flats {
            lo = lo.min(f[j]);
            hi = hi.max(f[j]);
            sum += f[j];
        }
        let direction = sum / n - g[j];
        let (a, z) = if direction > 0.0 {
            if lo > 0.0 {
                (lo / b, lo)
            } else {
                (b * lo, lo)
            }
        } else if direction < 0.0 {
            if hi > 0.0 {
                (hi, b * hi)
            } else {
                (hi, hi / b)
            }
        } else {
            continue;
        };
        *v = if a < z { rng.random_range(a..=z) } else { a };
    }
    Ok(out)
}
