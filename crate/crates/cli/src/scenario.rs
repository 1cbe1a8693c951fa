//! Turning a configuration into concrete runs.

use std::time::Instant;

use robustgd_core::adversary::{select_byzantine_set, AttackSpec, ByzantineAssignment};
use robustgd_core::aggregation::AggregationRule;
use robustgd_core::data::{generate_dataset, holdout_points, DataGenConfig, FeatureLaw, ShardedDataset};
use robustgd_core::losses::{ErmSettings, LinearRegression, Logistic, LossModel};
use robustgd_core::simulator::{
    compute_metrics, run_one_round, run_robust_gd, GdSettings, OneRoundSettings, RoundRecord,
};
use robustgd_core::stats::{
    median_bound_delta, trimmed_bound_delta, BoundInputs, GradientTailProfile,
};
use robustgd_core::vector::norm;

use crate::config::{ExperimentConfig, ModelKind};
use crate::error::Result;

/// Absolute skewness bounds of the regression gradient noise.
const RADEMACHER_SKEWNESS: f64 = 480.0;
const GAUSSIAN_SKEWNESS: f64 = 429.0;

/// One point of an experiment grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub alpha: f64,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub enum Model {
    Linear(LinearRegression),
    Logistic(Logistic),
}

impl Model {
    pub fn loss(&self) -> &dyn LossModel {
        match self {
            Model::Linear(m) => m,
            Model::Logistic(m) => m,
        }
    }

    pub fn accuracy(&self, w: &[f64]) -> Option<f64> {
        match self {
            Model::Linear(_) => None,
            Model::Logistic(m) => Some(m.accuracy(w)),
        }
    }
}

/// The model, the sharded data and the faulty set of one cell.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: Model,
    pub data: ShardedDataset,
    pub assignment: ByzantineAssignment,
    pub attack: AttackSpec,
}

pub fn build_problem(cfg: &ExperimentConfig, cell: Cell) -> Result<Problem> {
    let w_star = cfg.data.w_star()?;
    let d = w_star.len();
    let gen = DataGenConfig {
        n: cell.n,
        m: cell.m,
        sigma: cfg.data.sigma,
        feature_law: cfg.data.feature_law(),
        w_star: w_star.clone(),
        seed: cell.seed,
    };
    let labels = cfg.data.label_model();
    let data = generate_dataset(&gen, labels)?;
    let model = match cfg.data.model {
        ModelKind::Linear => Model::Linear(LinearRegression::new(w_star, cfg.data.sigma)),
        ModelKind::Logistic => {
            Model::Logistic(Logistic::new(w_star, holdout_points(&gen, labels, cfg.data.holdout))?)
        }
    };
    let (assignment, attack) = match cfg.attack.to_spec(d)? {
        Some(spec) => (select_byzantine_set(cell.m, cell.alpha, cell.seed)?, spec),
        // any attack works here since nobody carries it out
        None => (ByzantineAssignment::honest(cell.m), AttackSpec::SignFlip(1.0)),
    };
    Ok(Problem { model, data, assignment, attack })
}

pub fn gd_settings(cfg: &ExperimentConfig, model: &dyn LossModel) -> Option<GdSettings> {
    let gd = cfg.gd.as_ref()?;
    let mut s = GdSettings::defaults_for(model, gd.rounds);
    if let Some(eta) = gd.eta {
        s.eta = eta;
    }
    if let Some(r) = gd.domain_radius {
        s.domain_radius = r;
    }
    s.minibatch_fraction = gd.minibatch_fraction;
    Some(s)
}

pub fn one_round_settings(cfg: &ExperimentConfig, model: &dyn LossModel) -> OneRoundSettings {
    let mut erm = ErmSettings::for_smoothness(model.smoothness().l_f);
    if let Some(o) = &cfg.one_round {
        erm.eta = o.eta.unwrap_or(erm.eta);
        erm.max_iters = o.max_iters.unwrap_or(erm.max_iters);
        erm.grad_tol = o.grad_tol.unwrap_or(erm.grad_tol);
    }
    OneRoundSettings { erm, start: vec![0.0; model.dim()] }
}

/// Outcome of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub cell: Cell,
    pub trajectory: Vec<RoundRecord>,
    pub final_w: Vec<f64>,
    /// Held-out accuracy, for classification models.
    pub accuracy: Option<f64>,
    pub bound_value: Option<f64>,
    pub runtime_ms: f64,
    pub warnings: Vec<String>,
}

impl CellOutcome {
    pub fn final_dist(&self) -> Option<f64> {
        self.trajectory.last().and_then(|r| r.dist_to_opt)
    }

    pub fn final_excess_risk(&self) -> Option<f64> {
        self.trajectory.last().and_then(|r| r.excess_risk)
    }
}

pub fn run_cell(cfg: &ExperimentConfig, cell: Cell) -> Result<CellOutcome> {
    let start = Instant::now();
    let problem = build_problem(cfg, cell)?;
    let loss = problem.model.loss();
    let rule = cfg.aggregator.rule();
    let (trajectory, final_w, warnings, radius) = match gd_settings(cfg, loss) {
        Some(settings) => {
            let r = run_robust_gd(
                loss,
                &problem.data,
                &problem.assignment,
                &problem.attack,
                rule,
                &settings,
                cell.seed,
            )?;
            (r.trajectory, r.final_w, r.warnings, settings.domain_radius)
        }
        None => {
            let settings = one_round_settings(cfg, loss);
            let r = run_one_round(loss, &problem.data, &problem.assignment, &problem.attack, &settings, cell.seed)?;
            let records = [(0, &settings.start), (1, &r.final_w)]
                .into_iter()
                .map(|(round, w)| {
                    let m = compute_metrics(loss, w);
                    RoundRecord {
                        round,
                        dist_to_opt: m.dist_to_opt,
                        excess_risk: m.excess_risk,
                        pop_grad_norm: m.pop_grad_norm,
                        aggregate_deviation: None,
                    }
                })
                .collect();
            let radius = GdSettings::defaults_for(loss, 1).domain_radius;
            (records, r.final_w, Vec::new(), radius)
        }
    };
    let accuracy = problem.model.accuracy(&final_w);
    let bound_value = bound_for(cfg, &problem, cell, rule, radius);
    Ok(CellOutcome {
        cell,
        trajectory,
        final_w,
        accuracy,
        bound_value,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        warnings,
    })
}

/// Tail parameters of the regression gradient at the starting point `0`:
/// `V² = (d ∓ 1)‖w*‖² + dσ²`, `S` from the closed-form skewness bounds and
/// `v = √(σ² + ‖w*‖²)`. Explicit values from the config take precedence.
pub fn tail_profile(cfg: &ExperimentConfig, problem: &Problem) -> GradientTailProfile {
    let b = cfg.bound;
    let derived = match &problem.model {
        Model::Linear(lin) => {
            let d = lin.w_star.len() as f64;
            let r2 = norm(&lin.w_star).powi(2);
            let s2 = lin.sigma * lin.sigma;
            let (shift, skew) = match problem.data.config.feature_law {
                FeatureLaw::Rademacher => (-1.0, RADEMACHER_SKEWNESS),
                FeatureLaw::StandardGaussian => (1.0, GAUSSIAN_SKEWNESS),
            };
            GradientTailProfile {
                std_bound: Some(((d + shift) * r2 + d * s2).sqrt()),
                skewness_bound: Some(skew),
                sub_exponential: Some((s2 + r2).sqrt()),
            }
        }
        Model::Logistic(_) => GradientTailProfile::default(),
    };
    GradientTailProfile {
        std_bound: b.std_bound.or(derived.std_bound),
        skewness_bound: b.skewness_bound.or(derived.skewness_bound),
        sub_exponential: b.sub_exponential.or(derived.sub_exponential),
    }
}

/// The bound matching the aggregation rule, when its inputs are known and
/// admissible; the mean rule has none.
fn bound_for(cfg: &ExperimentConfig, problem: &Problem, cell: Cell, rule: AggregationRule, radius: f64) -> Option<f64> {
    let inputs = BoundInputs {
        alpha: problem.assignment.alpha_realized(),
        beta: None,
        n: cell.n,
        m: cell.m,
        d: problem.model.loss().dim(),
        epsilon: cfg.bound.epsilon,
        l_hat: problem.model.loss().smoothness().l_hat,
        diameter: 2.0 * radius,
        tail: tail_profile(cfg, problem),
    };
    match rule {
        AggregationRule::Mean => None,
        AggregationRule::CoordinateMedian => median_bound_delta(&inputs).ok().map(|b| b.value),
        AggregationRule::CoordinateTrimmedMean(beta) => {
            trimmed_bound_delta(&BoundInputs { beta: Some(beta), ..inputs }).ok().map(|b| b.value)
        }
    }
}
