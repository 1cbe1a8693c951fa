//! Synchronous master-worker simulation of robust distributed gradient
//! descent and of the robust one-round algorithm.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::adversary::{corrupt_dataset, forge_message, AttackLevel, AttackSpec, ByzantineAssignment};
use crate::aggregation::{aggregate, coordinate_median, AggregationRule};
use crate::data::ShardedDataset;
use crate::error::{invalid, numerical, Error, Result};
use crate::losses::{
    local_empirical_gradient, local_erm_iterative, local_erm_quadratic, ErmSettings, LabelSpace,
    LossModel, Point,
};
use crate::rng::{domain, keyed_rng};
use crate::vector::{all_finite, axpy, distance, norm, VectorBatch};

/// Euclidean projection onto the ball of radius `radius` centred at 0.
pub fn project_l2_ball(w: &[f64], radius: f64) -> Result<Vec<f64>> {
    if !(radius > 0.0) {
        return Err(invalid!("radius must be positive, got {radius}"));
    }
    if !all_finite(w) {
        return Err(invalid!("cannot project a non-finite vector"));
    }
    let r = norm(w);
    if r <= radius {
        Ok(w.to_vec())
    } else {
        Ok(w.iter().map(|x| x * radius / r).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdSettings {
    pub eta: f64,
    pub rounds: usize,
    pub domain_radius: f64,
    pub w0: Vec<f64>,
    /// Each worker uses this fraction of its shard per round, drawn afresh.
    pub minibatch_fraction: Option<f64>,
    /// Keep every round's messages in the result for replay.
    pub record_messages: bool,
}

impl GdSettings {
    /// `η = 1/L_F`, start at 0, radius `10‖w*‖` (or 10 when `w* = 0`).
    pub fn defaults_for<L: LossModel + ?Sized>(model: &L, rounds: usize) -> Self {
        let d = model.dim();
        let radius = model
            .population_optimum()
            .map(|w| 10.0 * norm(w))
            .filter(|r| *r > 0.0)
            .unwrap_or(10.0);
        Self {
            eta: 1.0 / model.smoothness().l_f,
            rounds,
            domain_radius: radius,
            w0: vec![0.0; d],
            minibatch_fraction: None,
            record_messages: false,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(invalid!("step size must be positive, got {}", self.eta));
        }
        if self.rounds == 0 {
            return Err(invalid!("need at least one round"));
        }
        if !(self.domain_radius > 0.0) {
            return Err(invalid!("domain radius must be positive"));
        }
        if self.w0.len() != d {
            return Err(invalid!("w0 has dimension {}, model has {d}", self.w0.len()));
        }
        if !(norm(&self.w0) <= self.domain_radius) {
            return Err(invalid!("w0 lies outside the parameter ball"));
        }
        if let Some(f) = self.minibatch_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(invalid!("minibatch fraction {f} outside (0, 1]"));
            }
        }
        Ok(())
    }
}

/// Population metrics at one iterate. Absent values could not be computed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub dist_to_opt: Option<f64>,
    pub excess_risk: Option<f64>,
    pub pop_grad_norm: Option<f64>,
}

pub fn compute_metrics<L: LossModel + ?Sized>(model: &L, w: &[f64]) -> Metrics {
    Metrics {
        dist_to_opt: model.population_optimum().map(|o| distance(w, o)),
        excess_risk: model.excess_risk(w),
        pop_grad_norm: model.population_gradient(w).map(|g| norm(&g)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub dist_to_opt: Option<f64>,
    pub excess_risk: Option<f64>,
    pub pop_grad_norm: Option<f64>,
    /// `‖g(w^t) − ∇F(w^t)‖`; absent for the final iterate, which is never aggregated.
    pub aggregate_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// Rounds `0..=T`.
    pub trajectory: Vec<RoundRecord>,
    pub final_w: Vec<f64>,
    pub fingerprint: u64,
    pub warnings: Vec<String>,
    /// Per-round worker messages, when requested.
    pub messages: Option<Vec<VectorBatch>>,
}

impl RunResult {
    pub fn final_record(&self) -> &RoundRecord {
        self.trajectory.last().expect("trajectory holds round 0")
    }
}

/// FNV-1a over the bit patterns of everything that determines a run.
struct Fingerprint(u64);

impl Fingerprint {
    fn new() -> Self {
        Self(0xcbf2_9ce4_8422_2325)
    }
    fn u64(&mut self, v: u64) -> &mut Self {
        for b in v.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
        self
    }
    fn f64(&mut self, v: f64) -> &mut Self {
        self.u64(v.to_bits())
    }
    fn str(&mut self, s: &str) -> &mut Self {
        for b in s.bytes() {
            self.u64(b as u64);
        }
        self
    }
}

fn fingerprint(
    data: &ShardedDataset,
    assignment: &ByzantineAssignment,
    attack: &AttackSpec,
    rule: AggregationRule,
    settings: &GdSettings,
    seed: u64,
) -> u64 {
    let mut h = Fingerprint::new();
    let cfg = &data.config;
    h.u64(cfg.n as u64).u64(cfg.m as u64).f64(cfg.sigma).u64(cfg.seed);
    cfg.w_star.iter().for_each(|v| {
        h.f64(*v);
    });
    assignment.byzantine().iter().for_each(|i| {
        h.u64(*i as u64);
    });
    h.str(attack.name());
    match attack {
        AttackSpec::SignFlip(c) | AttackSpec::GaussianMessage(c) => {
            h.f64(*c);
        }
        AttackSpec::ConstantVector(v) => v.iter().for_each(|x| {
            h.f64(*x);
        }),
        _ => {}
    }
    h.str(rule.name());
    if let AggregationRule::CoordinateTrimmedMean(b) = rule {
        h.f64(b);
    }
    h.f64(settings.eta).u64(settings.rounds as u64).f64(settings.domain_radius);
    settings.w0.iter().for_each(|v| {
        h.f64(*v);
    });
    h.f64(settings.minibatch_fraction.unwrap_or(0.0)).u64(seed);
    h.0
}

/// Label space used for corruption. Unbounded regression labels are
/// replaced by the observed label range of the whole dataset.
fn corruption_space<L: LossModel + ?Sized>(model: &L, data: &ShardedDataset) -> LabelSpace {
    match model.label_space() {
        LabelSpace::Interval { lo, hi } if !(lo.is_finite() && hi.is_finite()) => {
            let ys = data.shards.iter().flat_map(|s| s.points.iter().map(|p| p.y));
            let (lo, hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
            LabelSpace::Interval { lo, hi }
        }
        space => space,
    }
}

/// Shards as the workers hold them, with data-level corruption installed
/// on the faulty ones.
fn worker_shards<'a, L: LossModel + ?Sized>(
    model: &L,
    data: &'a ShardedDataset,
    assignment: &ByzantineAssignment,
    attack: &AttackSpec,
    seed: u64,
) -> Result<Vec<alloc::borrow::Cow<'a, [Point]>>> {
    use alloc::borrow::Cow;
    let space = corruption_space(model, data);
    data.shards
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if attack.level() == AttackLevel::Data && assignment.is_byzantine(i) {
                Ok(Cow::Owned(corrupt_dataset(&s.points, attack, space, seed, i)?))
            } else {
                Ok(Cow::Borrowed(s.points.as_slice()))
            }
        })
        .collect()
}

fn check_inputs<L: LossModel + ?Sized>(
    model: &L,
    data: &ShardedDataset,
    assignment: &ByzantineAssignment,
    attack: &AttackSpec,
) -> Result<()> {
    let d = model.dim();
    if data.config.dim() != d {
        return Err(invalid!("dataset dimension {} differs from model dimension {d}", data.config.dim()));
    }
    if data.shards.len() != assignment.workers() {
        return Err(invalid!(
            "{} shards but the Byzantine assignment covers {} workers",
            data.shards.len(),
            assignment.workers()
        ));
    }
    if let Some(i) = data.shards.iter().position(|s| s.points.is_empty()) {
        return Err(invalid!("shard {i} is empty"));
    }
    attack.validate(d)
}

fn minibatch(shard: &[Point], fraction: f64, seed: u64, worker: usize, round: usize) -> Vec<Point> {
    let n = shard.len();
    let k = (libm::ceil(fraction * n as f64) as usize).clamp(1, n);
    let mut rng = keyed_rng(seed, domain::MINIBATCH, worker as u64, round as u64);
    let mut idx = rand::seq::index::sample(&mut rng, n, k).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| shard[i].clone()).collect()
}

/// Robust distributed gradient descent.
///
/// Each round the master broadcasts `w^t`; honest workers reply with
/// `∇F_i(w^t)`, faulty ones with a forged message (message-level attacks)
/// or with their honest computation on corrupted data (data-level attacks).
/// The master aggregates with `rule` and sets
/// `w^{t+1} = Π_W(w^t − η g(w^t))`.
pub fn run_robust_gd<L: LossModel + ?Sized>(
    model: &L,
    data: &ShardedDataset,
    assignment: &ByzantineAssignment,
    attack: &AttackSpec,
    rule: AggregationRule,
    settings: &GdSettings,
    seed: u64,
) -> Result<RunResult> {
    check_inputs(model, data, assignment, attack)?;
    settings.validate(model.dim())?;
    let m = data.shards.len();
    rule.validate(m)?;

    let mut warnings = Vec::new();
    if assignment.breaks_median() && rule != AggregationRule::Mean {
        warnings.push(format!(
            "{} of {m} workers are Byzantine; robust rules need a strict honest majority",
            assignment.count()
        ));
    }
    if let AggregationRule::CoordinateTrimmedMean(beta) = rule {
        if beta < assignment.alpha_realized() {
            warnings.push(format!(
                "trim fraction {beta} is below the Byzantine fraction {}",
                assignment.alpha_realized()
            ));
        }
    }

    let shards = worker_shards(model, data, assignment, attack, seed)?;
    let mut w = settings.w0.clone();
    let mut trajectory = Vec::with_capacity(settings.rounds + 1);
    let mut recorded = settings.record_messages.then(Vec::new);

    for t in 0..settings.rounds {
        let mut messages = Vec::with_capacity(m);
        for (i, shard) in shards.iter().enumerate() {
            let honest = match settings.minibatch_fraction {
                Some(f) if f < 1.0 => local_empirical_gradient(model, &w, &minibatch(shard, f, seed, i, t))?,
                _ => local_empirical_gradient(model, &w, shard)?,
            };
            let msg = if assignment.is_byzantine(i) && attack.level() == AttackLevel::Message {
                forge_message(&honest, attack, t, i, seed)?
            } else {
                if !all_finite(&honest) {
                    return Err(numerical!("worker {i} produced a non-finite gradient in round {t}"));
                }
                honest
            };
            messages.push(msg);
        }
        let batch = VectorBatch::new(&messages)?;
        let g = aggregate(rule, &batch)?;
        if !all_finite(&g) {
            return Err(numerical!("non-finite aggregate in round {t}"));
        }
        let metrics = compute_metrics(model, &w);
        let deviation = model.population_gradient(&w).map(|pg| distance(&g, &pg));
        trajectory.push(record(t, metrics, deviation));
        if let Some(r) = recorded.as_mut() {
            r.push(batch);
        }
        axpy(-settings.eta, &g, &mut w);
        w = project_l2_ball(&w, settings.domain_radius)
            .map_err(|_| numerical!("non-finite iterate after round {t}"))?;
    }
    trajectory.push(record(settings.rounds, compute_metrics(model, &w), None));

    Ok(RunResult {
        trajectory,
        final_w: w,
        fingerprint: fingerprint(data, assignment, attack, rule, settings, seed),
        warnings,
        messages: recorded,
    })
}

fn record(round: usize, m: Metrics, aggregate_deviation: Option<f64>) -> RoundRecord {
    RoundRecord {
        round,
        dist_to_opt: m.dist_to_opt,
        excess_risk: m.excess_risk,
        pop_grad_norm: m.pop_grad_norm,
        aggregate_deviation,
    }
}

/// Recomputes the iterates from recorded messages alone.
pub fn replay_iterates(
    messages: &[VectorBatch],
    rule: AggregationRule,
    settings: &GdSettings,
) -> Result<Vec<Vec<f64>>> {
    let mut w = settings.w0.clone();
    let mut out = vec![w.clone()];
    for batch in messages {
        let g = aggregate(rule, batch)?;
        axpy(-settings.eta, &g, &mut w);
        w = project_l2_ball(&w, settings.domain_radius)?;
        out.push(w.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneRoundSettings {
    /// Used for losses without a closed-form quadratic ERM.
    pub erm: ErmSettings,
    pub start: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneRoundResult {
    pub final_w: Vec<f64>,
    /// What each worker sent, in worker order.
    pub per_worker_erms: Vec<Vec<f64>>,
}

fn local_erm<L: LossModel + ?Sized>(
    model: &L,
    shard: &[Point],
    settings: &OneRoundSettings,
    worker: usize,
) -> Result<Vec<f64>> {
    let named = |e: Error| match e {
        Error::NumericalFailure(msg) => numerical!("worker {worker}: {msg}"),
        other => other,
    };
    match model.empirical_quadratic(shard) {
        Some(q) => local_erm_quadratic(&q.h, &q.p).map_err(named),
        None => local_erm_iterative(model, shard, &settings.erm, &settings.start)
            .map(|o| o.w)
            .map_err(named),
    }
}

/// Robust one-round algorithm: every worker sends its local ERM once and
/// the master returns their coordinate-wise median.
pub fn run_one_round<L: LossModel + ?Sized>(
    model: &L,
    data: &ShardedDataset,
    assignment: &ByzantineAssignment,
    attack: &AttackSpec,
    settings: &OneRoundSettings,
    seed: u64,
) -> Result<OneRoundResult> {
    check_inputs(model, data, assignment, attack)?;
    if settings.start.len() != model.dim() {
        return Err(invalid!("start point has dimension {}, model has {}", settings.start.len(), model.dim()));
    }
    let shards = worker_shards(model, data, assignment, attack, seed)?;
    let mut per_worker = Vec::with_capacity(shards.len());
    for (i, shard) in shards.iter().enumerate() {
        let erm = local_erm(model, shard, settings, i)?;
        let msg = if assignment.is_byzantine(i) && attack.level() == AttackLevel::Message {
            forge_message(&erm, attack, 0, i, seed)?
        } else {
            erm
        };
        per_worker.push(msg);
    }
    let batch = VectorBatch::new(&per_worker)?;
    Ok(OneRoundResult { final_w: coordinate_median(&batch), per_worker_erms: per_worker })
}
