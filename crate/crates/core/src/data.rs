//! Synthetic datasets split into per-worker shards.
//!
//! Point `j` of worker `i` is drawn from its own stream keyed by
//! `(seed, i, j)`, so any shard can be regenerated alone and parallel
//! generation reproduces sequential generation exactly.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::losses::{sigmoid, Point};
use crate::rng::{domain, keyed_rng, rademacher, standard_normal, uniform_open, StreamRng};
use crate::stats::QuadSampler;
use crate::vector::dot;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureLaw {
    /// Coordinates i.i.d. uniform on `{−1, +1}`.
    Rademacher,
    StandardGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelModel {
    /// `y = xᵀw* + ξ`, `ξ ~ N(0, σ²)`.
    Linear,
    /// `y ~ Bernoulli(σ(xᵀw*))`.
    Logistic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataGenConfig {
    pub n: usize,
    pub m: usize,
    pub sigma: f64,
    pub feature_law: FeatureLaw,
    pub w_star: Vec<f64>,
    pub seed: u64,
}

impl DataGenConfig {
    pub fn dim(&self) -> usize {
        self.w_star.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.w_star.is_empty() {
            return Err(invalid!("w* must have dimension >= 1"));
        }
        if !self.w_star.iter().all(|v| v.is_finite()) {
            return Err(invalid!("w* must be finite"));
        }
        if self.n == 0 || self.m == 0 {
            return Err(invalid!("n and m must be at least 1"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(invalid!("noise sigma must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// One worker's local data.
#[derive(Debug, Clone, PartialEq)]
pub struct Shard {
    pub worker: usize,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShardedDataset {
    pub shards: Vec<Shard>,
    pub config: DataGenConfig,
    pub labels: LabelModel,
}

impl ShardedDataset {
    pub fn total_points(&self) -> usize {
        self.shards.iter().map(|s| s.points.len()).sum()
    }
}

pub fn sample_features(law: FeatureLaw, d: usize, rng: &mut StreamRng) -> Vec<f64> {
    match law {
        FeatureLaw::Rademacher => (0..d).map(|_| rademacher(rng)).collect(),
        FeatureLaw::StandardGaussian => (0..d).map(|_| standard_normal(rng)).collect(),
    }
}

fn sample_point(cfg: &DataGenConfig, labels: LabelModel, rng: &mut StreamRng) -> Point {
    let x = sample_features(cfg.feature_law, cfg.dim(), rng);
    let z = dot(&x, &cfg.w_star);
    let y = match labels {
        LabelModel::Linear => z + cfg.sigma * standard_normal(rng),
        LabelModel::Logistic => {
            if uniform_open(rng) < sigmoid(z) {
                1.0
            } else {
                0.0
            }
        }
    };
    Point { x, y }
}

/// Generates the shard of `worker` alone.
pub fn generate_shard(cfg: &DataGenConfig, labels: LabelModel, worker: usize) -> Shard {
    let points = (0..cfg.n)
        .map(|j| {
            let mut rng = keyed_rng(cfg.seed, domain::DATA_POINT, worker as u64, j as u64);
            sample_point(cfg, labels, &mut rng)
        })
        .collect();
    Shard { worker, points }
}

fn generate(cfg: &DataGenConfig, labels: LabelModel) -> Result<ShardedDataset> {
    cfg.validate()?;
    let shards = (0..cfg.m).map(|i| generate_shard(cfg, labels, i)).collect();
    Ok(ShardedDataset { shards, config: cfg.clone(), labels })
}

fn require_law(cfg: &DataGenConfig, law: FeatureLaw) -> Result<()> {
    if cfg.feature_law != law {
        return Err(invalid!("generator needs {law:?} features, config has {:?}", cfg.feature_law));
    }
    Ok(())
}

pub fn gen_rademacher_regression(cfg: &DataGenConfig) -> Result<ShardedDataset> {
    require_law(cfg, FeatureLaw::Rademacher)?;
    generate(cfg, LabelModel::Linear)
}

pub fn gen_gaussian_regression(cfg: &DataGenConfig) -> Result<ShardedDataset> {
    require_law(cfg, FeatureLaw::StandardGaussian)?;
    generate(cfg, LabelModel::Linear)
}

/// Logistic labels over either feature law; `sigma` is ignored.
pub fn gen_logistic(cfg: &DataGenConfig) -> Result<ShardedDataset> {
    generate(cfg, LabelModel::Logistic)
}

/// Dispatches on the label model and feature law.
pub fn generate_dataset(cfg: &DataGenConfig, labels: LabelModel) -> Result<ShardedDataset> {
    match (labels, cfg.feature_law) {
        (LabelModel::Linear, FeatureLaw::Rademacher) => gen_rademacher_regression(cfg),
        (LabelModel::Linear, FeatureLaw::StandardGaussian) => gen_gaussian_regression(cfg),
        (LabelModel::Logistic, _) => gen_logistic(cfg),
    }
}

/// `count` points from a stream family disjoint from every training shard.
pub fn holdout_points(cfg: &DataGenConfig, labels: LabelModel, count: usize) -> Vec<Point> {
    (0..count)
        .map(|j| {
            let mut rng = keyed_rng(cfg.seed, domain::HOLDOUT, 0, j as u64);
            sample_point(cfg, labels, &mut rng)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionReport {
    pub pass: bool,
    pub problems: Vec<alloc::string::String>,
}

/// Checks that there are `m` shards of `n` points each, carrying distinct
/// worker stream keys in `0..m`, and that no shard duplicates another.
pub fn partition_check(ds: &ShardedDataset) -> Result<PartitionReport> {
    let cfg = &ds.config;
    if ds.shards.is_empty() {
        return Err(invalid!("dataset has no shards"));
    }
    if ds.shards.iter().flat_map(|s| &s.points).any(|p| p.x.len() != cfg.dim()) {
        return Err(invalid!("dataset contains points of the wrong dimension"));
    }
    let mut problems = Vec::new();
    if ds.shards.len() != cfg.m {
        problems.push(alloc::format!("{} shards, expected {}", ds.shards.len(), cfg.m));
    }
    let mut seen = alloc::vec![false; ds.shards.len().max(cfg.m)];
    for (i, s) in ds.shards.iter().enumerate() {
        if s.points.len() != cfg.n {
            problems.push(alloc::format!("shard {i} has {} points, expected {}", s.points.len(), cfg.n));
        }
        match seen.get_mut(s.worker) {
            Some(flag) if !*flag => *flag = true,
            Some(_) => problems.push(alloc::format!("stream key of worker {} used twice", s.worker)),
            None => problems.push(alloc::format!("worker key {} out of range", s.worker)),
        }
        if let Some(j) = ds.shards[..i].iter().position(|o| o.points == s.points) {
            problems.push(alloc::format!("shard {i} duplicates shard {j}"));
        }
    }
    Ok(PartitionReport { pass: problems.is_empty(), problems })
}

/// Per-sample quadratic coefficients `(H, p) = (xxᵀ, −y x)` of the squared
/// loss on regression data; population values are `(I, −w*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionQuadSampler {
    pub config: DataGenConfig,
}

impl QuadSampler for RegressionQuadSampler {
    fn dim(&self) -> usize {
        self.config.dim()
    }

    fn sample(&self, rng: &mut StreamRng) -> (Matrix, Vec<f64>) {
        let p = sample_point(&self.config, LabelModel::Linear, rng);
        let mut h = Matrix::zeros(self.dim());
        h.add_outer(1.0, &p.x);
        let lin = p.x.iter().map(|x| -p.y * x).collect();
        (h, lin)
    }
}
