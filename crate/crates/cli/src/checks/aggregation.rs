//! Aggregation rules against a naive sort-per-coordinate oracle.

use std::time::Instant;

use rand::Rng;
use robustgd_core::aggregation::{coordinate_median, coordinate_trimmed_mean, trim_count};
use robustgd_core::rng::{domain, keyed_rng};
use robustgd_core::vector::VectorBatch;

use super::Check;
use crate::error::Result;

pub type MedianFn = fn(&VectorBatch) -> robustgd_core::Result<Vec<f64>>;
pub type TrimmedFn = fn(&VectorBatch, f64) -> robustgd_core::Result<Vec<f64>>;

pub fn library_median(batch: &VectorBatch) -> robustgd_core::Result<Vec<f64>> {
    Ok(coordinate_median(batch))
}

pub fn library_trimmed_mean(batch: &VectorBatch, beta: f64) -> robustgd_core::Result<Vec<f64>> {
    coordinate_trimmed_mean(batch, beta)
}

fn sorted_column(batch: &VectorBatch, k: usize) -> Vec<f64> {
    let mut col: Vec<f64> = batch.iter().map(|v| v[k]).collect();
    col.sort_by(f64::total_cmp);
    col
}

/// `(median, largest magnitude averaged)` of one sorted column.
fn oracle_median(s: &[f64]) -> (f64, f64) {
    let m = s.len();
    if m % 2 == 1 {
        (s[m / 2], 0.0)
    } else {
        let (a, b) = (s[m / 2 - 1], s[m / 2]);
        ((a + b) / 2.0, a.abs().max(b.abs()))
    }
}

/// `(trimmed mean, largest magnitude averaged)` of one sorted column.
fn oracle_trimmed(s: &[f64], k: usize) -> (f64, f64) {
    let kept = &s[k..s.len() - k];
    let sum: f64 = kept.iter().sum();
    (sum / kept.len() as f64, kept.iter().fold(0.0f64, |a, v| a.max(v.abs())))
}

/// Random batch with `m ≤ 15`, `d ≤ 8` and values in `[−10⁶, 10⁶]`; about a
/// third of batches draw from a handful of values to force ties.
fn random_batch(seed: u64, i: usize) -> (VectorBatch, f64) {
    let mut rng = keyed_rng(seed, domain::MONTE_CARLO, 100, i as u64);
    let m = rng.random_range(1..=15);
    let d = rng.random_range(1..=8);
    let ties = rng.random_bool(0.3);
    let pool: Vec<f64> = (0..3).map(|_| rng.random_range(-1e6..=1e6)).collect();
    let vectors: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            (0..d)
                .map(|_| if ties { pool[rng.random_range(0..pool.len())] } else { rng.random_range(-1e6..=1e6) })
                .collect()
        })
        .collect();
    let beta = rng.random_range(0.0..0.5);
    (VectorBatch::new(&vectors).expect("finite batch"), beta)
}

/// Discrepancies of averaged outputs are measured in units of
/// `ε · max|averaged value|`; odd-size medians must match exactly.
pub fn oracle_equivalence(median: MedianFn, trimmed: TrimmedFn, batches: usize, seed: u64) -> Result<Vec<Check>> {
    const ULPS: f64 = 4.0;
    let start = Instant::now();
    let mut median_worst = 0.0f64;
    let mut median_exact_misses = 0usize;
    let mut trimmed_worst = 0.0f64;
    for i in 0..batches {
        let (batch, beta) = random_batch(seed, i);
        let med = median(&batch)?;
        let k = trim_count(batch.len(), beta)?;
        let tm = trimmed(&batch, beta)?;
        for c in 0..batch.dim() {
            let s = sorted_column(&batch, c);
            let (want, scale) = oracle_median(&s);
            if scale == 0.0 {
                if med[c] != want {
                    median_exact_misses += 1;
                }
            } else {
                median_worst = median_worst.max((med[c] - want).abs() / (f64::EPSILON * scale));
            }
            let (want, scale) = oracle_trimmed(&s, k);
            let err = (tm[c] - want).abs();
            if err > 0.0 {
                let ulps = if scale > 0.0 { err / (f64::EPSILON * scale) } else { f64::INFINITY };
                trimmed_worst = trimmed_worst.max(ulps);
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    Ok(vec![
        Check::at_most("median odd-size mismatches vs sort oracle", median_exact_misses as f64, 0.0),
        Check::at_most("median even-size averaging error (ulps)", median_worst, ULPS),
        Check::at_most("trimmed mean error vs sort oracle (ulps)", trimmed_worst, ULPS),
        Check::at_most("aggregator oracle runtime (s)", elapsed, 5.0),
    ])
}

/// With fewer than half the inputs replaced by ±10¹², every median
/// coordinate stays inside the honest inputs' range.
pub fn median_breakdown(batches: usize, seed: u64) -> Result<Check> {
    let mut violations = 0usize;
    for i in 0..batches {
        let mut rng = keyed_rng(seed, domain::MONTE_CARLO, 101, i as u64);
        let m = 2 * rng.random_range(1..=7) + 1;
        let d = rng.random_range(1..=8);
        let bad = rng.random_range(0..=m / 2);
        let vectors: Vec<Vec<f64>> = (0..m)
            .map(|j| {
                (0..d)
                    .map(|_| {
                        if j < bad {
                            if rng.random_bool(0.5) { 1e12 } else { -1e12 }
                        } else {
                            rng.random_range(-10.0..10.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let med = coordinate_median(&VectorBatch::new(&vectors)?);
        for (c, v) in med.iter().enumerate() {
            let honest = vectors[bad..].iter().map(|x| x[c]);
            let (lo, hi) = honest.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
            if !(lo..=hi).contains(v) {
                violations += 1;
            }
        }
    }
    Ok(Check::at_most("median outside honest range with a faulty minority", violations as f64, 0.0))
}
