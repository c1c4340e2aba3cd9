//! Centered kernel alignment with Gaussian (RBF) kernels.

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};

fn check_gram(m: &Matrix, what: &str) -> Result<usize> {
    let (r, c) = m.shape();
    if r != c {
        return Err(Error::dim(format!("{what} Gram matrix"), "square", format!("{r}x{c}")));
    }
    if r < 2 {
        return Err(Error::Validation(format!("HSIC needs at least 2 samples, got {r}")));
    }
    Ok(r)
}

/// `H K H` with `H = I - 11ᵀ/n`.
fn center(k: &Matrix) -> Matrix {
    let n = k.rows();
    let nf = n as f64;
    let row_means: Vec<f64> = k.iter_rows().map(|r| r.iter().sum::<f64>() / nf).collect();
    let mut col_means = vec![0.0; n];
    for r in k.iter_rows() {
        for (c, v) in col_means.iter_mut().zip(r) {
            *c += v / nf;
        }
    }
    let grand = row_means.iter().sum::<f64>() / nf;
    let mut out = k.clone();
    for (i, rm) in row_means.iter().enumerate() {
        for (v, cm) in out.row_mut(i).iter_mut().zip(&col_means) {
            *v += grand - rm - cm;
        }
    }
    out
}

fn centered_inner(kc: &Matrix, lc: &Matrix) -> f64 {
    let n = kc.rows() as f64;
    let s: f64 = kc.as_slice().iter().zip(lc.as_slice()).map(|(a, b)| a * b).sum();
    s / ((n - 1.0) * (n - 1.0))
}

/// Biased HSIC estimator `tr(K H L H) / (n - 1)^2` for square Gram matrices
/// of equal size.
pub fn hsic(k: &Matrix, l: &Matrix) -> Result<f64> {
    let n = check_gram(k, "first")?;
    if check_gram(l, "second")? != n {
        return Err(Error::dim("HSIC Gram matrices", n, l.rows()));
    }
    Ok(centered_inner(&center(k), &center(l)))
}

/// Median Euclidean distance between distinct rows; 1 when that median is 0.
pub fn median_bandwidth(x: &Matrix) -> f64 {
    let n = x.rows();
    let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            d.push(squared_distance(x.row(i), x.row(j)).sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    let median = if m % 2 == 1 {
        d[m / 2]
    } else {
        0.5 * (d[m / 2 - 1] + d[m / 2])
    };
    if median > 0.0 {
        median
    } else {
        1.0
    }
}

/// `K_ij = exp(-|x_i - x_j|^2 / (2 sigma^2))` with the median bandwidth of `x`.
pub fn rbf_gram(x: &Matrix) -> Matrix {
    let n = x.rows();
    let sigma = median_bandwidth(x);
    let denom = 2.0 * sigma * sigma;
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0;
        for j in i + 1..n {
            let v = (-squared_distance(x.row(i), x.row(j)) / denom).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// RBF-kernel CKA between two representations of the same `n >= 2` samples.
///
/// The score is clamped to `[0, 1]`. If either kernel is constant (every row
/// identical), the score is 1 when both are constant and 0 otherwise.
pub fn cka_rbf(x: &Matrix, y: &Matrix) -> Result<f64> {
    if x.rows() != y.rows() {
        return Err(Error::dim("CKA sample count", x.rows(), y.rows()));
    }
    if x.rows() < 2 {
        return Err(Error::Validation(format!("CKA needs at least 2 samples, got {}", x.rows())));
    }
    let kc = center(&rbf_gram(x));
    let lc = center(&rbf_gram(y));
    let hxy = centered_inner(&kc, &lc);
    let hxx = centered_inner(&kc, &kc);
    let hyy = centered_inner(&lc, &lc);
    let x_flat = hxx <= 0.0;
    let y_flat = hyy <= 0.0;
    if x_flat || y_flat {
        return Ok(if x_flat && y_flat { 1.0 } else { 0.0 });
    }
    Ok((hxy / (hxx * hyy).sqrt()).clamp(0.0, 1.0))
}
