//! GAN-crafted adversarial samples for data poisoning.
//!
//! The generator perturbs attack records so that a discriminator, trained to
//! imitate the current global detector, reads them as benign. The attacker
//! then trains on its benign records plus the perturbed records labeled benign.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ATTACK, BENIGN};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{
    backprop, cross_entropy_grad, forward, predict, Activation, ModelParams, ModelSpec, Optimizer, OptimizerKind,
    OutputKind,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GanConfig {
    /// Passes over the attack records. Zero leaves the generator at its
    /// initialization.
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Width of the noise vector appended to each attack record; a quarter of
    /// the feature width when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_dim: Option<usize>,
}

impl Default for GanConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 512,
            learning_rate: 0.0001,
            noise_dim: None,
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Validation("gan batch_size must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Validation(format!("gan learning_rate {} out of range", self.learning_rate)));
        }
        if self.noise_dim == Some(0) {
            return Err(Error::Validation("gan noise_dim must be at least 1".into()));
        }
        Ok(())
    }

    pub fn noise_width(&self, feature_dim: usize) -> usize {
        self.noise_dim.unwrap_or((feature_dim / 4).max(1))
    }

    /// Generator: four ReLU layers of half the input width, linear output.
    pub fn generator_spec(&self, feature_dim: usize) -> Result<ModelSpec> {
        let input = feature_dim + self.noise_width(feature_dim);
        let hidden = (input / 2).max(1);
        ModelSpec::new(
            vec![input, hidden, hidden, hidden, hidden, feature_dim],
            vec![Activation::Relu, Activation::Relu, Activation::Relu, Activation::Relu, Activation::None],
            OutputKind::Linear,
        )
    }

    /// Discriminator: three LeakyReLU layers of twice the input width, one of
    /// half the width, two-class output.
    pub fn discriminator_spec(&self, feature_dim: usize) -> Result<ModelSpec> {
        let wide = 2 * feature_dim;
        ModelSpec::new(
            vec![feature_dim, wide, wide, wide, (feature_dim / 2).max(1), 2],
            vec![
                Activation::LeakyRelu,
                Activation::LeakyRelu,
                Activation::LeakyRelu,
                Activation::LeakyRelu,
                Activation::None,
            ],
            OutputKind::Softmax2,
        )
    }
}

struct Generator {
    spec: ModelSpec,
    params: ModelParams,
    noise: usize,
}

impl Generator {
    fn input(&self, x: &Matrix, rng: &mut ChaCha8Rng) -> Matrix {
        let d = x.cols();
        let mut input = Matrix::zeros(x.rows(), d + self.noise);
        for r in 0..x.rows() {
            let row = input.row_mut(r);
            row[..d].copy_from_slice(x.row(r));
            for v in &mut row[d..] {
                *v = rng.sample(StandardNormal);
            }
        }
        input
    }

    /// `clip(x + G([x, z]))` together with the generator forward cache.
    fn perturb(&self, x: &Matrix, rng: &mut ChaCha8Rng) -> Result<(Matrix, crate::nn::Forward)> {
        let fwd = forward(&self.params, &self.spec, &self.input(x, rng))?;
        let mut out = x.clone();
        out.axpy(1.0, fwd.logits())?;
        Ok((out, fwd))
    }
}

fn clip_unit(m: &Matrix) -> Matrix {
    m.map(|v| v.clamp(0.0, 1.0))
}

/// Builds the attacker's poisoned shard: its benign rows unchanged, followed by
/// one generated row per attack row, all labeled benign. Features stay in
/// `[0, 1]`.
pub fn gan_poison(
    local: &Dataset,
    global: (&ModelParams, &ModelSpec),
    cfg: &GanConfig,
    seed: u64,
) -> Result<Dataset> {
    cfg.validate()?;
    let (global_params, global_spec) = global;
    global_params.check(global_spec)?;
    if local.dim() != global_spec.input_dim() {
        return Err(Error::dim("gan_poison shard width", global_spec.input_dim(), local.dim()));
    }
    let attack_rows: Vec<usize> = (0..local.len()).filter(|&i| local.labels[i] == ATTACK).collect();
    let benign_rows: Vec<usize> = (0..local.len()).filter(|&i| local.labels[i] == BENIGN).collect();
    if attack_rows.is_empty() {
        return Err(Error::Validation("gan_poison needs at least one attack sample".into()));
    }

    let d = local.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g_spec = cfg.generator_spec(d)?;
    let d_spec = cfg.discriminator_spec(d)?;
    let mut gen = Generator {
        params: ModelParams::init(&g_spec, &mut rng),
        spec: g_spec,
        noise: cfg.noise_width(d),
    };
    let mut disc = ModelParams::init(&d_spec, &mut rng);
    let mut g_opt = Optimizer::new(OptimizerKind::Adam, cfg.learning_rate, 0.0, &gen.params);
    let mut d_opt = Optimizer::new(OptimizerKind::Adam, cfg.learning_rate, 0.0, &disc);

    let mut order = attack_rows.clone();
    let mut benign_cursor = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let x = local.features.select_rows(batch);
            let (raw, g_fwd) = gen.perturb(&x, &mut rng)?;
            let x_adv = clip_unit(&raw);

            // Discriminator step: imitate the global detector on a mix of
            // benign records and current generator output.
            let mut mixed_rows: Vec<&[f64]> = x_adv.iter_rows().collect();
            let mut taken = Vec::new();
            if !benign_rows.is_empty() {
                for _ in 0..batch.len() {
                    taken.push(benign_rows[benign_cursor % benign_rows.len()]);
                    benign_cursor += 1;
                }
            }
            let benign_x = local.features.select_rows(&taken);
            mixed_rows.extend(benign_x.iter_rows());
            let mixed = Matrix::from_rows(&mixed_rows)?;
            let targets = predict(global_params, global_spec, &mixed)?;
            let d_fwd = forward(&disc, &d_spec, &mixed)?;
            let (_, d_logits) = cross_entropy_grad(d_fwd.logits(), &targets);
            let (d_grads, _) = backprop(&disc, &d_spec, &d_fwd, &d_logits)?;
            d_opt.step(&mut disc, &d_grads);

            // Generator step: push the discriminator toward "benign".
            let fwd = forward(&disc, &d_spec, &x_adv)?;
            let (_, d_logits) = cross_entropy_grad(fwd.logits(), &vec![BENIGN; batch.len()]);
            let (_, mut d_x) = backprop(&disc, &d_spec, &fwd, &d_logits)?;
            for (g, &v) in d_x.as_mut_slice().iter_mut().zip(raw.as_slice()) {
                if !(0.0..=1.0).contains(&v) {
                    *g = 0.0;
                }
            }
            let (g_grads, _) = backprop(&gen.params, &gen.spec, &g_fwd, &d_x)?;
            g_opt.step(&mut gen.params, &g_grads);
        }
    }

    let attacks = local.features.select_rows(&attack_rows);
    let generated = clip_unit(&gen.perturb(&attacks, &mut rng)?.0);
    let benign = local.features.select_rows(&benign_rows);
    let rows: Vec<&[f64]> = benign.iter_rows().chain(generated.iter_rows()).collect();
    let features = if rows.is_empty() {
        Matrix::zeros(0, d)
    } else {
        Matrix::from_rows(&rows)?
    };
    Dataset::with_names(features, vec![BENIGN; benign_rows.len() + attack_rows.len()], local.feature_names.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_dataset;
    use crate::nn::{train, TrainConfig};

    fn shard() -> Dataset {
        synth_dataset(120, 8, 4.0, 0.5, 11).unwrap()
    }

    fn global(d: usize, seed: u64) -> (ModelParams, ModelSpec) {
        let spec = ModelSpec::detector(d, &[10]).unwrap();
        (ModelParams::init(&spec, &mut ChaCha8Rng::seed_from_u64(seed)), spec)
    }

    #[test]
    fn table_shapes() {
        let cfg = GanConfig::default();
        assert_eq!(cfg.generator_spec(20).unwrap().layer_dims(), &[25, 12, 12, 12, 12, 20]);
        assert_eq!(cfg.discriminator_spec(20).unwrap().layer_dims(), &[20, 40, 40, 40, 10, 2]);
    }

    #[test]
    fn output_layout_and_bounds() {
        let local = shard();
        let (g, spec) = global(8, 1);
        let cfg = GanConfig {
            epochs: 2,
            batch_size: 16,
            ..GanConfig::default()
        };
        let out = gan_poison(&local, (&g, &spec), &cfg, 5).unwrap();
        assert_eq!(out.len(), local.len());
        assert!(out.labels.iter().all(|&y| y == BENIGN));
        assert!(out.features.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        let benign: Vec<usize> = (0..local.len()).filter(|&i| local.labels[i] == BENIGN).collect();
        for (k, &i) in benign.iter().enumerate() {
            assert_eq!(out.features.row(k), local.features.row(i));
        }
    }

    #[test]
    fn zero_epochs_still_valid() {
        let local = shard();
        let (g, spec) = global(8, 2);
        let cfg = GanConfig {
            epochs: 0,
            ..GanConfig::default()
        };
        let out = gan_poison(&local, (&g, &spec), &cfg, 1).unwrap();
        assert_eq!(out.len(), local.len());
        assert!(out.features.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn seeded_runs_match() {
        let local = shard();
        let (g, spec) = global(8, 3);
        let cfg = GanConfig {
            epochs: 2,
            batch_size: 32,
            ..GanConfig::default()
        };
        assert_eq!(
            gan_poison(&local, (&g, &spec), &cfg, 9).unwrap(),
            gan_poison(&local, (&g, &spec), &cfg, 9).unwrap()
        );
    }

    #[test]
    fn needs_attack_rows() {
        let local = shard();
        let benign: Vec<usize> = (0..local.len()).filter(|&i| local.labels[i] == BENIGN).collect();
        let (g, spec) = global(8, 4);
        let r = gan_poison(&local.subset(&benign), (&g, &spec), &GanConfig::default(), 0);
        assert!(matches!(r, Err(Error::Validation(_))));
    }

    #[test]
    fn generated_rows_evade_the_detector_at_least_as_often() {
        let local = shard();
        let (g0, spec) = global(8, 6);
        let cfg = TrainConfig {
            epochs: 30,
            batch_size: 16,
            learning_rate: 0.05,
            ..TrainConfig::default()
        };
        let g = train(&g0, &spec, &local, &cfg).unwrap();
        let attack_rows: Vec<usize> = (0..local.len()).filter(|&i| local.labels[i] == ATTACK).collect();
        let before = predict(&g, &spec, &local.features.select_rows(&attack_rows)).unwrap();
        let gan = GanConfig {
            epochs: 200,
            batch_size: 32,
            learning_rate: 0.001,
            noise_dim: None,
        };
        let out = gan_poison(&local, (&g, &spec), &gan, 2).unwrap();
        let generated: Vec<usize> = (local.benign_count()..out.len()).collect();
        let after = predict(&g, &spec, &out.features.select_rows(&generated)).unwrap();
        let evasion = |p: &[u8]| p.iter().filter(|&&y| y == BENIGN).count() as f64 / p.len() as f64;
        assert!(evasion(&after) >= evasion(&before), "{} < {}", evasion(&after), evasion(&before));
        assert!(evasion(&after) > 0.5);
    }
}
