//! Empirical moment diagnostics: variance, absolute skewness and an
//! empirical moment-generating-function check for sub-exponential tails.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

fn check_samples<V: AsRef<[f64]>>(samples: &[V]) -> Result<usize> {
    if samples.len() < 2 {
        return Err(invalid!("need at least 2 samples, got {}", samples.len()));
    }
    let d = samples[0].as_ref().len();
    if d == 0 || samples.iter().any(|s| s.as_ref().len() != d) {
        return Err(invalid!("samples must share a nonzero dimension"));
    }
    Ok(d)
}

fn coordinate_means<V: AsRef<[f64]>>(samples: &[V], d: usize) -> Vec<f64> {
    let mut mean = vec![0.0; d];
    for s in samples {
        for (m, x) in mean.iter_mut().zip(s.as_ref()) {
            *m += x;
        }
    }
    let n = samples.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// `(1/N) Σ ‖x_i − x̄‖²`.
pub fn empirical_variance<V: AsRef<[f64]>>(samples: &[V]) -> Result<f64> {
    let d = check_samples(samples)?;
    let mean = coordinate_means(samples, d);
    let total: f64 = samples
        .iter()
        .map(|s| s.as_ref().iter().zip(&mean).map(|(x, m)| (x - m) * (x - m)).sum::<f64>())
        .sum();
    Ok(total / samples.len() as f64)
}

/// Per-coordinate `E|X − EX|³ / Var(X)^{3/2}` with `1/N` moments.
pub fn empirical_abs_skewness<V: AsRef<[f64]>>(samples: &[V]) -> Result<Vec<f64>> {
    let d = check_samples(samples)?;
    let mean = coordinate_means(samples, d);
    let mut m2 = vec![0.0; d];
    let mut m3 = vec![0.0; d];
    for s in samples {
        for (k, x) in s.as_ref().iter().enumerate() {
            let c = x - mean[k];
            let a = libm::fabs(c);
            m2[k] += c * c;
            m3[k] += a * a * a;
        }
    }
    let n = samples.len() as f64;
    m2.iter()
        .zip(&m3)
        .enumerate()
        .map(|(k, (&s2, &s3))| {
            let var = s2 / n;
            if !(var > 0.0) {
                return Err(Error::DegenerateCoordinate { coordinate: k });
            }
            Ok((s3 / n) / (var * libm::sqrt(var)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubExponentialReport {
    pub pass: bool,
    /// Largest `empirical MGF / exp(v²λ²/2)` over the grid.
    pub worst_ratio: f64,
}

/// Compares the centered empirical MGF `(1/N) Σ exp(λ(x_i − x̄))` against
/// `exp(v²λ²/2)` at every grid point. Passes when every ratio is at most
/// `tolerance_factor`.
pub fn sub_exponential_check(
    samples: &[f64],
    v: f64,
    lambdas: &[f64],
    tolerance_factor: f64,
) -> Result<SubExponentialReport> {
    if samples.len() < 100 {
        return Err(invalid!("need at least 100 samples, got {}", samples.len()));
    }
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid!("sub-exponential parameter must be positive, got {v}"));
    }
    if lambdas.is_empty() {
        return Err(invalid!("empty lambda grid"));
    }
    if let Some(l) = lambdas.iter().find(|l| !(libm::fabs(**l) < 1.0 / v)) {
        return Err(invalid!("grid point {l} violates |lambda| < 1/v = {}", 1.0 / v));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let mut worst = 0.0f64;
    for &l in lambdas {
        let mgf = samples.iter().map(|x| libm::exp(l * (x - mean))).sum::<f64>() / n;
        let bound = libm::exp(0.5 * v * v * l * l);
        worst = worst.max(mgf / bound);
    }
    Ok(SubExponentialReport { pass: worst <= tolerance_factor, worst_ratio: worst })
}
