//! C_ε, the trimmed-mean deviation bound and median-of-means concentration.

use rand::Rng;
use robustgd_core::aggregation::{scalar_trimmed_mean, trim_count};
use robustgd_core::rng::{domain, keyed_rng};
use robustgd_core::stats::{c_epsilon, verify_median_of_means, Gaussian, MedianOfMeansSetup};

use super::Check;
use crate::error::Result;

pub fn c_epsilon_checks() -> Result<Vec<Check>> {
    let at_sixth = c_epsilon(1.0 / 6.0)?;
    let grid: Vec<f64> = (0..50).map(|i| 0.005 + 0.0098 * i as f64).collect();
    let values = grid.iter().map(|&e| c_epsilon(e)).collect::<robustgd_core::Result<Vec<_>>>()?;
    let increases = values.windows(2).filter(|w| !(w[1] < w[0])).count();
    Ok(vec![
        Check::within("C_eps(1/6)", at_sixth, 3.99, 4.02),
        Check::at_most("C_eps non-decreasing steps on 50-point grid", increases as f64, 0.0),
    ])
}

/// Randomized honest/faulty value sets: honest values within `s` of `μ`,
/// honest mean within `t` of `μ`, at most `⌊βm⌋` faulty values anywhere.
/// Reports the number of cases where the trimmed mean leaves
/// `μ ± (t + 3βs)/(1 − 2β)` by more than rounding.
pub fn trimmed_mean_deviation(constructions: usize, seed: u64) -> Result<Check> {
    let mut violations = 0usize;
    for i in 0..constructions {
        let mut rng = keyed_rng(seed, domain::MONTE_CARLO, 200, i as u64);
        let m = rng.random_range(1..=60);
        let beta = rng.random_range(0.0..0.5);
        let k = trim_count(m, beta)?;
        let q = rng.random_range(0..=k);
        let mu = rng.random_range(-100.0..100.0);
        let s = rng.random_range(0.0..10.0);
        // honest values: uniform, or pushed to the edges of the band
        let edges = rng.random_bool(0.5);
        let honest: Vec<f64> = (0..m - q)
            .map(|_| {
                if edges {
                    mu + if rng.random_bool(0.5) { s } else { -s }
                } else {
                    mu + rng.random_range(-s..=s)
                }
            })
            .collect();
        let t = (honest.iter().sum::<f64>() / honest.len() as f64 - mu).abs();
        let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let style = rng.random_range(0..3);
        let mut values = honest;
        values.extend((0..q).map(|_| match style {
            0 => mu + side * 1e9,
            1 => mu + side * s * rng.random_range(0.0..2.0),
            _ => mu + rng.random_range(-1e3..1e3),
        }));
        let dev = (scalar_trimmed_mean(&values, beta)? - mu).abs();
        let bound = (t + 3.0 * beta * s) / (1.0 - 2.0 * beta);
        let slack = 64.0 * f64::EPSILON * (mu.abs() + s + 1.0);
        if dev > bound + slack {
            violations += 1;
        }
    }
    Ok(Check::at_most("trimmed-mean deviation bound violations", violations as f64, 0.0))
}

/// Median of 21 per-machine means of 50 standard normals, `t = 1`,
/// `ε = 1/6`, with no faulty machines and with two sending `±10⁶`.
pub fn median_of_means_concentration(trials: usize, seed: u64) -> Result<Vec<Check>> {
    let g = Gaussian { mean: 0.0, std_dev: 1.0 };
    let limit = 4.0 * (-2.0f64).exp() + 0.03;
    let clean = MedianOfMeansSetup::new(50, 21, 1.0, 1.0 / 6.0, trials, seed);
    let mut faulty = clean;
    faulty.byzantine = 2;
    faulty.alternate_sign = true;
    faulty.enforce_premise = false;
    let a = verify_median_of_means(&g, &clean)?;
    let b = verify_median_of_means(&g, &faulty)?;
    Ok(vec![
        Check::at_most("median-of-means violation rate, no faulty machines", a.violation_rate, limit),
        Check::at_most("median-of-means violation rate, 2 faulty machines", b.violation_rate, limit),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_runs_pass() {
        assert!(c_epsilon_checks().unwrap().iter().all(|c| c.pass));
        assert!(trimmed_mean_deviation(2000, 1).unwrap().pass);
    }
}
