//! Experiment grids: single runs, α sweeps, sample-size sweeps and rate fits.
//!
//! Cells run in parallel on the current rayon pool. Results are assembled
//! in canonical order (axis value, then seed), so output does not depend
//! on scheduling.

use rayon::prelude::*;
use robustgd_core::aggregation::AggregationRule;

use crate::config::{ExperimentConfig, SweepAxis};
use crate::error::{config_err, Result};
use crate::output::{format_f64, TrajectoryRun};
use crate::scenario::{run_cell, Cell, CellOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Record wall-clock time per cell. Off by default because timings
    /// make otherwise identical outputs differ.
    pub record_timing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scenario: String,
    pub aggregator: String,
    pub attack: String,
    pub alpha: f64,
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub seed: u64,
    pub final_dist: Option<f64>,
    pub final_excess_risk: Option<f64>,
    pub bound_value: Option<f64>,
    pub runtime_ms: Option<f64>,
    /// Held-out accuracy for classification scenarios; not part of the CSV.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Rows whose values of `key` equal `value`, in order.
    pub fn select(&self, key: impl Fn(&SweepRow) -> f64, value: f64) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| key(r) == value)
    }
}

/// Rule name, with the trim fraction for the trimmed mean.
pub fn aggregator_label(rule: AggregationRule) -> String {
    match rule {
        AggregationRule::CoordinateTrimmedMean(beta) => format!("trimmed_mean({})", format_f64(beta)),
        other => other.name().to_string(),
    }
}

fn run_cells(cfg: &ExperimentConfig, cells: &[Cell]) -> Result<Vec<CellOutcome>> {
    cells.par_iter().map(|c| run_cell(cfg, *c)).collect()
}

fn row(cfg: &ExperimentConfig, out: &CellOutcome, opts: RunOptions) -> Result<SweepRow> {
    Ok(SweepRow {
        scenario: cfg.scenario.clone(),
        aggregator: aggregator_label(cfg.aggregator.rule()),
        attack: cfg.attack.name().to_string(),
        alpha: out.cell.alpha,
        n: out.cell.n,
        m: out.cell.m,
        d: cfg.dim()?,
        seed: out.cell.seed,
        final_dist: out.final_dist(),
        final_excess_risk: out.final_excess_risk(),
        bound_value: out.bound_value,
        runtime_ms: opts.record_timing.then_some(out.runtime_ms),
        accuracy: out.accuracy,
    })
}

fn base_cells(cfg: &ExperimentConfig, alpha: f64, n: usize, m: usize) -> impl Iterator<Item = Cell> + '_ {
    cfg.seeds.iter().map(move |&seed| Cell { alpha, n, m, seed })
}

/// Runs the configured experiment once per seed and returns the outcomes
/// in seed order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<CellOutcome>> {
    cfg.validate()?;
    let cells: Vec<Cell> = base_cells(cfg, cfg.alpha, cfg.data.n, cfg.data.m).collect();
    run_cells(cfg, &cells)
}

pub fn run_id(cfg: &ExperimentConfig, cell: &Cell) -> String {
    format!(
        "{}:{}:alpha={}:n={}:m={}:seed={}",
        cfg.scenario,
        aggregator_label(cfg.aggregator.rule()),
        format_f64(cell.alpha),
        cell.n,
        cell.m,
        cell.seed
    )
}

pub fn trajectories(cfg: &ExperimentConfig, outcomes: &[CellOutcome]) -> Vec<TrajectoryRun> {
    outcomes
        .iter()
        .map(|o| TrajectoryRun { run_id: run_id(cfg, &o.cell), records: o.trajectory.clone() })
        .collect()
}

fn alpha_limit_ok(cfg: &ExperimentConfig, alpha: f64) -> Result<()> {
    let robust = cfg.aggregator.rule() != AggregationRule::Mean;
    if robust && alpha >= 0.5 {
        return Err(config_err!("alpha {alpha} must be below 1/2 for median-type rules"));
    }
    Ok(())
}

/// One row per `(α, seed)` at the configured `(n, m)`.
pub fn sweep_alpha(cfg: &ExperimentConfig, alphas: &[f64], opts: RunOptions) -> Result<SweepResult> {
    cfg.validate()?;
    if alphas.is_empty() {
        return Err(config_err!("empty alpha axis"));
    }
    let mut cells = Vec::new();
    for &a in alphas {
        alpha_limit_ok(cfg, a)?;
        cells.extend(base_cells(cfg, a, cfg.data.n, cfg.data.m));
    }
    let outcomes = run_cells(cfg, &cells)?;
    let rows = outcomes.iter().map(|o| row(cfg, o, opts)).collect::<Result<_>>()?;
    Ok(SweepResult { rows })
}

/// One row per `((n, m), seed)` at the configured `α`.
pub fn sweep_sample_size(cfg: &ExperimentConfig, sizes: &[(usize, usize)], opts: RunOptions) -> Result<SweepResult> {
    cfg.validate()?;
    let mut products: Vec<usize> = sizes.iter().map(|(n, m)| n * m).collect();
    products.sort_unstable();
    products.dedup();
    if products.len() < 2 {
        return Err(config_err!(
            "sample-size sweep needs at least two distinct values of n*m; a single (n, m) gives no scaling to fit"
        ));
    }
    let mut cells = Vec::new();
    for &(n, m) in sizes {
        cfg.aggregator.rule().validate(m)?;
        cells.extend(base_cells(cfg, cfg.alpha, n, m));
    }
    let outcomes = run_cells(cfg, &cells)?;
    let rows = outcomes.iter().map(|o| row(cfg, o, opts)).collect::<Result<_>>()?;
    Ok(SweepResult { rows })
}

/// Runs whichever sweep the config's `[sweep]` section names.
pub fn run_sweep(cfg: &ExperimentConfig, opts: RunOptions) -> Result<SweepResult> {
    match cfg.sweep_axis()? {
        SweepAxis::Alpha(a) => sweep_alpha(cfg, &a, opts),
        SweepAxis::SampleSize(s) => sweep_sample_size(cfg, &s, opts),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Averages `ys` over equal `xs`, in order of first appearance.
pub fn seed_average(xs: &[f64], ys: &[f64]) -> Vec<(f64, f64)> {
    let mut groups: Vec<(f64, f64, usize)> = Vec::new();
    for (&x, &y) in xs.iter().zip(ys) {
        match groups.iter_mut().find(|g| g.0 == x) {
            Some(g) => {
                g.1 += y;
                g.2 += 1;
            }
            None => groups.push((x, y, 1)),
        }
    }
    groups.into_iter().map(|(x, s, c)| (x, s / c as f64)).collect()
}

/// Ordinary least squares of the seed-averaged `y` on `x`, each optionally
/// log-transformed.
pub fn rate_fit(xs: &[f64], ys: &[f64], log_x: bool, log_y: bool) -> Result<RateFit> {
    if xs.len() != ys.len() {
        return Err(config_err!("{} x values but {} y values", xs.len(), ys.len()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(config_err!("rate fit needs finite values"));
    }
    let points = seed_average(xs, ys);
    if points.len() < 3 {
        return Err(config_err!("rate fit needs at least 3 distinct x values, got {}", points.len()));
    }
    let tf = |v: f64, log: bool, axis: &str| {
        if !log {
            Ok(v)
        } else if v > 0.0 {
            Ok(v.ln())
        } else {
            Err(config_err!("log scale on {axis} needs positive values, got {v}"))
        }
    };
    let pts: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, y)| Ok((tf(x, log_x, "x")?, tf(y, log_y, "y")?)))
        .collect::<Result<_>>()?;
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(RateFit { slope, intercept, r_squared })
}
