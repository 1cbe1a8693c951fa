//! Coordinate-wise aggregation rules applied by the master to the worker
//! messages of one round.
//!
//! All rules treat the `d` coordinates independently. The median of an even
//! number of values is the midpoint of the two middle order statistics, and
//! the `β`-trimmed mean removes `k = ⌊βm⌋` values from each end and divides
//! the remainder by `m - 2k`.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::vector::VectorBatch;

/// How the master combines the `m` messages of a round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AggregationRule {
    Mean,
    CoordinateMedian,
    /// Trim fraction `β ∈ [0, 1/2)` per side.
    CoordinateTrimmedMean(f64),
}

impl AggregationRule {
    /// Checks the rule can be applied to a batch of `m` vectors.
    pub fn validate(&self, m: usize) -> Result<()> {
        if m == 0 {
            return Err(invalid!("aggregation needs at least one vector"));
        }
        if let AggregationRule::CoordinateTrimmedMean(beta) = *self {
            trim_count(m, beta)?;
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            AggregationRule::Mean => "mean",
            AggregationRule::CoordinateMedian => "median",
            AggregationRule::CoordinateTrimmedMean(_) => "trimmed_mean",
        }
    }
}

/// Number of values removed from each end by the `β`-trimmed mean of `m` values.
pub fn trim_count(m: usize, beta: f64) -> Result<usize> {
    if !(0.0..0.5).contains(&beta) {
        return Err(invalid!("trim fraction {beta} outside [0, 1/2)"));
    }
    let k = libm::floor(beta * m as f64) as usize;
    if m < 2 * k + 1 {
        return Err(invalid!("trimming {k} per side from {m} values leaves nothing"));
    }
    Ok(k)
}

fn check_scalars(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(invalid!("empty input"));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(invalid!("value {i} is not finite"));
    }
    Ok(())
}

/// Median of finite values already sorted ascending.
fn sorted_median(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    let mid = m / 2;
    if m % 2 == 1 {
        sorted[mid]
    } else {
        let (a, b) = (sorted[mid - 1], sorted[mid]);
        // midpoint without overflow for values near f64::MAX
        a / 2.0 + b / 2.0
    }
}

fn sorted_trimmed_mean(sorted: &[f64], k: usize) -> f64 {
    let kept = &sorted[k..sorted.len() - k];
    kept.iter().sum::<f64>() / kept.len() as f64
}

fn sort(values: &mut [f64]) {
    values.sort_unstable_by(f64::total_cmp);
}

pub fn scalar_median(values: &[f64]) -> Result<f64> {
    check_scalars(values)?;
    let mut v = values.to_vec();
    sort(&mut v);
    Ok(sorted_median(&v))
}

pub fn scalar_trimmed_mean(values: &[f64], beta: f64) -> Result<f64> {
    check_scalars(values)?;
    let k = trim_count(values.len(), beta)?;
    let mut v = values.to_vec();
    sort(&mut v);
    Ok(sorted_trimmed_mean(&v, k))
}

fn per_coordinate(batch: &VectorBatch, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut column = Vec::with_capacity(batch.len());
    (0..batch.dim())
        .map(|k| {
            batch.column_into(k, &mut column);
            sort(&mut column);
            f(&column)
        })
        .collect()
}

pub fn coordinate_median(batch: &VectorBatch) -> Vec<f64> {
    per_coordinate(batch, sorted_median)
}

pub fn coordinate_trimmed_mean(batch: &VectorBatch, beta: f64) -> Result<Vec<f64>> {
    let k = trim_count(batch.len(), beta)?;
    if k == 0 {
        return Ok(mean(batch));
    }
    Ok(per_coordinate(batch, |col| sorted_trimmed_mean(col, k)))
}

/// Coordinate-wise mean, accumulated as offsets from the first vector so
/// that a batch of identical vectors averages to that vector exactly.
pub fn mean(batch: &VectorBatch) -> Vec<f64> {
    let first = batch.vector(0);
    let mut acc = alloc::vec![0.0; batch.dim()];
    for v in batch.iter().skip(1) {
        for ((a, x), x0) in acc.iter_mut().zip(v).zip(first) {
            *a += x - x0;
        }
    }
    let m = batch.len() as f64;
    first.iter().zip(acc).map(|(x0, a)| x0 + a / m).collect()
}

pub fn aggregate(rule: AggregationRule, batch: &VectorBatch) -> Result<Vec<f64>> {
    match rule {
        AggregationRule::Mean => Ok(mean(batch)),
        AggregationRule::CoordinateMedian => Ok(coordinate_median(batch)),
        AggregationRule::CoordinateTrimmedMean(beta) => coordinate_trimmed_mean(batch, beta),
    }
}
