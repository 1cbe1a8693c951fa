//! CSV files written and read by the harness.
//!
//! Floats use the shortest decimal form that parses back to the same
//! value; absent values are empty fields.

use std::path::Path;

use robustgd_core::data::ShardedDataset;
use robustgd_core::simulator::RoundRecord;

use crate::error::{config_err, HarnessError, Result};
use crate::sweep::{SweepResult, SweepRow};

pub const TRAJECTORY_HEADER: [&str; 6] =
    ["run_id", "round", "dist_to_opt", "excess_risk", "pop_grad_norm", "aggregate_deviation"];

pub const SWEEP_HEADER: [&str; 12] = [
    "scenario",
    "aggregator",
    "attack",
    "alpha",
    "n",
    "m",
    "d",
    "seed",
    "final_dist",
    "final_excess_risk",
    "bound_value",
    "runtime_ms",
];

pub fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

fn parse_opt(field: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| config_err!("bad number {field:?}"))
}

fn parse<T: std::str::FromStr>(field: &str) -> Result<T> {
    field.parse().map_err(|_| config_err!("bad field {field:?}"))
}

/// One run's trajectory, tagged with its id.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRun {
    pub run_id: String,
    pub records: Vec<RoundRecord>,
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    csv::Writer::from_path(path).map_err(|e| HarnessError::csv(path, e))
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn write_trajectory_csv(runs: &[TrajectoryRun], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let err = |e| HarnessError::csv(path, e);
    w.write_record(TRAJECTORY_HEADER).map_err(err)?;
    for run in runs {
        for r in &run.records {
            w.write_record([
                run.run_id.clone(),
                r.round.to_string(),
                opt(r.dist_to_opt),
                opt(r.excess_risk),
                opt(r.pop_grad_norm),
                opt(r.aggregate_deviation),
            ])
            .map_err(err)?;
        }
    }
    finish(w, path)
}

fn reader(path: &Path, header: &[&str]) -> Result<csv::Reader<std::fs::File>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    let found = r.headers().map_err(|e| HarnessError::csv(path, e))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(config_err!("{}: unexpected header", path.display()));
    }
    Ok(r)
}

/// Reads a trajectory file back; consecutive rows with one run id form a run.
pub fn read_trajectory_csv(path: &Path) -> Result<Vec<TrajectoryRun>> {
    let mut runs: Vec<TrajectoryRun> = Vec::new();
    for rec in reader(path, &TRAJECTORY_HEADER)?.records() {
        let rec = rec.map_err(|e| HarnessError::csv(path, e))?;
        let record = RoundRecord {
            round: parse(&rec[1])?,
            dist_to_opt: parse_opt(&rec[2])?,
            excess_risk: parse_opt(&rec[3])?,
            pop_grad_norm: parse_opt(&rec[4])?,
            aggregate_deviation: parse_opt(&rec[5])?,
        };
        match runs.last_mut() {
            Some(run) if run.run_id == rec[0] => run.records.push(record),
            _ => runs.push(TrajectoryRun { run_id: rec[0].to_string(), records: vec![record] }),
        }
    }
    Ok(runs)
}

pub fn write_sweep_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let err = |e| HarnessError::csv(path, e);
    w.write_record(SWEEP_HEADER).map_err(err)?;
    for r in &result.rows {
        w.write_record([
            r.scenario.clone(),
            r.aggregator.clone(),
            r.attack.clone(),
            format_f64(r.alpha),
            r.n.to_string(),
            r.m.to_string(),
            r.d.to_string(),
            r.seed.to_string(),
            opt(r.final_dist),
            opt(r.final_excess_risk),
            opt(r.bound_value),
            opt(r.runtime_ms),
        ])
        .map_err(err)?;
    }
    finish(w, path)
}

pub fn read_sweep_csv(path: &Path) -> Result<SweepResult> {
    let mut rows = Vec::new();
    for rec in reader(path, &SWEEP_HEADER)?.records() {
        let rec = rec.map_err(|e| HarnessError::csv(path, e))?;
        rows.push(SweepRow {
            scenario: rec[0].to_string(),
            aggregator: rec[1].to_string(),
            attack: rec[2].to_string(),
            alpha: parse(&rec[3])?,
            n: parse(&rec[4])?,
            m: parse(&rec[5])?,
            d: parse(&rec[6])?,
            seed: parse(&rec[7])?,
            final_dist: parse_opt(&rec[8])?,
            final_excess_risk: parse_opt(&rec[9])?,
            bound_value: parse_opt(&rec[10])?,
            runtime_ms: parse_opt(&rec[11])?,
            accuracy: None,
        });
    }
    Ok(SweepResult { rows })
}

/// Columns `worker_id, index, x_1 … x_d, y`.
pub fn write_dataset_csv(data: &ShardedDataset, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let err = |e| HarnessError::csv(path, e);
    let d = data.config.dim();
    let mut header = vec!["worker_id".to_string(), "index".to_string()];
    header.extend((1..=d).map(|k| format!("x_{k}")));
    header.push("y".into());
    w.write_record(&header).map_err(err)?;
    for shard in &data.shards {
        for (j, p) in shard.points.iter().enumerate() {
            let mut row = vec![shard.worker.to_string(), j.to_string()];
            row.extend(p.x.iter().map(|v| format_f64(*v)));
            row.push(format_f64(p.y));
            w.write_record(&row).map_err(err)?;
        }
    }
    finish(w, path)
}
