//! Independent reference implementations shared by the oracle tests and the
//! acceptance runner. Everything here is written from the definitions with
//! plain loops and without calling the library's own helpers.

#![allow(dead_code)]

use fed_lsae::defense::{cka_rbf, cluster_scores, fedavg, hsic, ClientUpdate};
use fed_lsae::fl::{Confusion, Metrics};
use fed_lsae::nn::{backward, cross_entropy, Activation, ModelParams, ModelSpec, OutputKind};
use fed_lsae::Matrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// `tr(K H L H) / (n - 1)^2` with an explicit centering matrix.
pub fn hsic_oracle(k: &Matrix, l: &Matrix) -> f64 {
    let n = k.rows();
    let h = |i: usize, j: usize| if i == j { 1.0 - 1.0 / n as f64 } else { -1.0 / n as f64 };
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            for a in 0..n {
                for b in 0..n {
                    total += k[(i, j)] * h(j, a) * l[(a, b)] * h(b, i);
                }
            }
        }
    }
    total / ((n - 1) as f64).powi(2)
}

fn sq_dist(x: &Matrix, i: usize, j: usize) -> f64 {
    (0..x.cols()).map(|c| (x[(i, c)] - x[(j, c)]).powi(2)).sum()
}

pub fn rbf_oracle(x: &Matrix) -> Matrix {
    let n = x.rows();
    let mut d = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i < j {
                d.push(sq_dist(x, i, j).sqrt());
            }
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = d.len();
    let med = if m % 2 == 1 { d[m / 2] } else { (d[m / 2 - 1] + d[m / 2]) / 2.0 };
    let sigma = if med > 0.0 { med } else { 1.0 };
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] = (-sq_dist(x, i, j) / (2.0 * sigma * sigma)).exp();
        }
    }
    k
}

pub fn cka_oracle(x: &Matrix, y: &Matrix) -> f64 {
    let (k, l) = (rbf_oracle(x), rbf_oracle(y));
    let v = hsic_oracle(&k, &l) / (hsic_oracle(&k, &k) * hsic_oracle(&l, &l)).sqrt();
    v.clamp(0.0, 1.0)
}

/// Largest absolute deviation of `hsic` and `cka_rbf` from the oracles over
/// random 5x5 to 10x10 inputs.
pub fn cka_oracle_error(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.random_range(5..=10);
        let (cx, cy) = (rng.random_range(5..=10), rng.random_range(5..=10));
        let x = random_matrix(&mut rng, n, cx);
        let y = random_matrix(&mut rng, n, cy);
        let (k, l) = (rbf_oracle(&x), rbf_oracle(&y));
        worst = worst.max((hsic(&k, &l).unwrap() - hsic_oracle(&k, &l)).abs());
        worst = worst.max((cka_rbf(&x, &y).unwrap() - cka_oracle(&x, &y)).abs());
    }
    worst
}

/// Worst violation of `cka(X, X) = 1`, symmetry and the `[0, 1]` range.
pub fn cka_property_error(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.random_range(2..=12);
        let (cx, cy) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let x = random_matrix(&mut rng, n, cx);
        let y = random_matrix(&mut rng, n, cy);
        let xy = cka_rbf(&x, &y).unwrap();
        let yx = cka_rbf(&y, &x).unwrap();
        worst = worst.max((cka_rbf(&x, &x).unwrap() - 1.0).abs());
        worst = worst.max((xy - yx).abs());
        if !(0.0..=1.0).contains(&xy) {
            worst = f64::INFINITY;
        }
    }
    worst
}

fn random_net(rng: &mut ChaCha8Rng) -> (ModelSpec, ModelParams) {
    let depth = rng.random_range(1..=3);
    let mut dims = vec![rng.random_range(2..=5)];
    let mut acts = Vec::new();
    for _ in 0..depth {
        dims.push(rng.random_range(2..=6));
        acts.push([Activation::Relu, Activation::LeakyRelu, Activation::Tanh][rng.random_range(0..3)]);
    }
    dims.push(2);
    acts.push(Activation::None);
    let spec = ModelSpec::new(dims, acts, OutputKind::Softmax2).unwrap();
    let params = ModelParams::init(&spec, rng);
    (spec, params)
}

/// Largest relative error between backpropagated gradients and central
/// differences of the cross-entropy, over `nets` random small networks.
pub fn gradient_check(nets: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..nets {
        let (spec, params) = random_net(&mut rng);
        let rows = rng.random_range(2..=6);
        let x = random_matrix(&mut rng, rows, spec.input_dim());
        let y: Vec<u8> = (0..rows).map(|_| rng.random_range(0..2)).collect();
        let analytic = backward(&params, &spec, &x, &y).unwrap().to_flat();
        let mut numeric = Vec::with_capacity(analytic.len());
        for k in 0..analytic.len() {
            let shifted = |delta: f64| {
                let mut p = params.clone();
                *p.values_mut().nth(k).unwrap() += delta;
                cross_entropy(&p, &spec, &x, &y).unwrap()
            };
            numeric.push((shifted(h) - shifted(-h)) / (2.0 * h));
        }
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt() + numeric.iter().map(|b| b * b).sum::<f64>().sqrt();
        worst = worst.max(if scale > 1e-12 { diff / scale } else { diff });
    }
    worst
}

pub fn random_updates(rng: &mut impl Rng, count: usize, width: usize) -> Vec<ClientUpdate> {
    let spec = ModelSpec::detector(width, &[3]).unwrap();
    (0..count)
        .map(|i| {
            let mut params = ModelParams::zeros(&spec);
            for v in params.values_mut() {
                *v = rng.random_range(-2.0..2.0);
            }
            ClientUpdate {
                client_id: i,
                params,
                n_samples: rng.random_range(1..100),
            }
        })
        .collect()
}

/// Worst deviation of `fedavg` from a hand-written weighted mean, and from
/// itself under a shuffled update order.
pub fn fedavg_error(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let count = rng.random_range(1..=8);
        let width = rng.random_range(1..=5);
        let updates = random_updates(&mut rng, count, width);
        let total: f64 = updates.iter().map(|u| u.n_samples as f64).sum();
        let flats: Vec<Vec<f64>> = updates.iter().map(|u| u.params.to_flat()).collect();
        let mut manual = vec![0.0; flats[0].len()];
        for (u, f) in updates.iter().zip(&flats) {
            for (m, v) in manual.iter_mut().zip(f) {
                *m += u.n_samples as f64 * v;
            }
        }
        manual.iter_mut().for_each(|m| *m /= total);

        let avg = fedavg(&updates).unwrap().to_flat();
        let mut shuffled = updates.clone();
        shuffled.shuffle(&mut rng);
        let perm = fedavg(&shuffled).unwrap().to_flat();
        for ((a, m), p) in avg.iter().zip(&manual).zip(&perm) {
            worst = worst.max((a - m).abs()).max((a - p).abs());
        }
    }
    worst
}

fn sse(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - m).powi(2)).sum()
}

/// Best two-group split by exhaustive search over every bipartition, labeled
/// with the larger-group (then higher-mean) rule. Returns `(benign, malicious)`.
pub fn cluster_oracle(scores: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let n = scores.len();
    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    for mask in 1..(1u32 << n) - 1 {
        let (a, b): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| mask & (1 << i) != 0);
        let pick = |ids: &[usize]| ids.iter().map(|&i| scores[i]).collect::<Vec<_>>();
        let cost = sse(&pick(&a)) + sse(&pick(&b));
        if best.as_ref().is_none_or(|(c, _, _)| cost < *c - 1e-15) {
            best = Some((cost, a, b));
        }
    }
    let (_, a, b) = best.expect("n >= 2");
    let mean = |ids: &[usize]| ids.iter().map(|&i| scores[i]).sum::<f64>() / ids.len() as f64;
    let a_benign = a.len() > b.len() || (a.len() == b.len() && mean(&a) > mean(&b));
    if a_benign {
        (a, b)
    } else {
        (b, a)
    }
}

/// Number of random score vectors on which `cluster_scores` disagrees with the
/// exhaustive oracle.
pub fn cluster_mismatches(cases: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..cases)
        .filter(|_| {
            let n = rng.random_range(2..=10);
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            cluster_scores(&scores).unwrap() != cluster_oracle(&scores)
        })
        .count()
}

/// Metrics straight from the counting definitions.
pub fn metrics_oracle(pred: &[u8], truth: &[u8]) -> [f64; 4] {
    let count = |p: u8, t: u8| pred.iter().zip(truth).filter(|&(&a, &b)| a == p && b == t).count() as f64;
    let (tp, fp, tn, fneg) = (count(1, 1), count(1, 0), count(0, 0), count(0, 1));
    let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    let precision = div(tp, tp + fp);
    let recall = div(tp, tp + fneg);
    [
        div(tp + tn, tp + tn + fp + fneg),
        precision,
        recall,
        div(2.0 * precision * recall, precision + recall),
    ]
}

/// Worst deviation of the library metrics from the oracle over random pairs.
pub fn metrics_error(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.random_range(1..=60);
        let skew = rng.random_range(0.0..1.0);
        let pred: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(skew))).collect();
        let truth: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect();
        let got = Metrics::from_confusion(&Confusion::from_predictions(&pred, &truth).unwrap()).as_array();
        for (g, w) in got.iter().zip(metrics_oracle(&pred, &truth)) {
            worst = worst.max((g - w).abs());
        }
    }
    worst
}
