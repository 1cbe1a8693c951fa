//! End-to-end runs of the simulator on synthetic scenarios.

use robustgd_core::adversary::{select_byzantine_set, AttackSpec};
use robustgd_core::losses::{local_erm_iterative, local_erm_quadratic, ErmSettings};
use robustgd_core::simulator::{run_one_round, run_robust_gd, GdSettings, OneRoundSettings};
use robustgd_core::vector::distance;

use super::Check;
use crate::config::{
    AggregatorConfig, AttackConfig, BoundConfig, DataConfig, ExperimentConfig, FeatureKind, GdConfig, ModelKind,
};
use crate::error::Result;
use crate::scenario::{build_problem, Cell};
use crate::sweep::{run_experiment, seed_average, sweep_alpha, sweep_sample_size, rate_fit, RunOptions};

fn seeds(k: u64) -> Vec<u64> {
    (1..=k).collect()
}

/// Linear regression with Rademacher features, `σ = 1`, `w* = 1`, `η = 1`.
pub fn regression_config(d: usize, n: usize, m: usize, rounds: usize) -> ExperimentConfig {
    ExperimentConfig {
        scenario: "regression".into(),
        seeds: seeds(10),
        alpha: 0.0,
        data: DataConfig {
            model: ModelKind::Linear,
            features: FeatureKind::Rademacher,
            n,
            m,
            d: Some(d),
            w_star: None,
            sigma: 1.0,
            holdout: 0,
        },
        attack: AttackConfig::None,
        aggregator: AggregatorConfig::Mean,
        gd: Some(GdConfig { rounds, eta: Some(1.0), domain_radius: None, minibatch_fraction: None }),
        one_round: None,
        bound: BoundConfig::default(),
        sweep: None,
    }
}

fn mean_final_dist(cfg: &ExperimentConfig) -> Result<f64> {
    let out = run_experiment(cfg)?;
    Ok(out.iter().map(|o| o.final_dist().unwrap_or(f64::NAN)).sum::<f64>() / out.len() as f64)
}

/// Sign-flip attack (`c = 10`) on 20% of 20 workers, `d = 20`, `n = 200`,
/// `T = 50`: robust rules against the mean and the attack-free mean.
pub fn robust_convergence() -> Result<Vec<Check>> {
    let start = std::time::Instant::now();
    let mut attacked = regression_config(20, 200, 20, 50);
    attacked.alpha = 0.2;
    attacked.attack = AttackConfig::SignFlip { scale: 10.0 };
    let clean = mean_final_dist(&regression_config(20, 200, 20, 50))?;
    let mean = mean_final_dist(&attacked)?;
    let mut checks = Vec::new();
    for (label, agg) in [
        ("median", AggregatorConfig::Median),
        ("trimmed mean (beta 0.2)", AggregatorConfig::TrimmedMean { beta: 0.2 }),
    ] {
        let err = mean_final_dist(&ExperimentConfig { aggregator: agg, ..attacked.clone() })?;
        checks.push(Check::at_most(format!("{label} error / attacked mean error"), err / mean, 0.1));
        checks.push(Check::at_most(format!("{label} error / attack-free mean error"), err / clean, 3.0));
    }
    checks.push(Check::at_most("robust convergence runtime (s)", start.elapsed().as_secs_f64(), 60.0));
    Ok(checks)
}

/// Seed-averaged median-GD error over `α ∈ {0.05, …, 0.4}` under sign flip.
pub fn alpha_scaling() -> Result<Vec<Check>> {
    let mut cfg = regression_config(20, 200, 20, 50);
    cfg.attack = AttackConfig::SignFlip { scale: 10.0 };
    cfg.aggregator = AggregatorConfig::Median;
    let alphas = [0.05, 0.1, 0.2, 0.3, 0.4];
    let result = sweep_alpha(&cfg, &alphas, RunOptions::default())?;
    let xs: Vec<f64> = result.rows.iter().map(|r| r.alpha).collect();
    let ys: Vec<f64> = result.rows.iter().map(|r| r.final_dist.unwrap_or(f64::NAN)).collect();
    let avg = seed_average(&xs, &ys);
    let drops = avg.windows(2).filter(|w| !(w[1].1 > w[0].1)).count();
    let fit = rate_fit(&xs, &ys, false, false)?;
    Ok(vec![
        Check::at_most("median error non-increasing steps in alpha", drops as f64, 0.0),
        Check::new("median error vs alpha OLS slope", fit.slope, "> 0", fit.slope > 0.0),
        Check::new("median error vs alpha r^2", fit.r_squared, ">= 0.8", fit.r_squared >= 0.8),
    ])
}

/// Mean-GD at `α = 0`, `d = 10`: log-log slope of error against `nm`.
pub fn sample_size_scaling() -> Result<Check> {
    let mut cfg = regression_config(10, 100, 10, 50);
    cfg.seeds = seeds(20);
    let sizes = [(100, 10), (200, 20), (400, 40)];
    let result = sweep_sample_size(&cfg, &sizes, RunOptions::default())?;
    let xs: Vec<f64> = result.rows.iter().map(|r| (r.n * r.m) as f64).collect();
    let ys: Vec<f64> = result.rows.iter().map(|r| r.final_dist.unwrap_or(f64::NAN)).collect();
    let fit = rate_fit(&xs, &ys, true, true)?;
    Ok(Check::within("log-log slope of error vs nm", fit.slope, -0.65, -0.35))
}

/// Whether `dists` decreases (weakly) until it first reaches its terminal
/// plateau and stays within twice the plateau afterwards. The plateau is
/// the largest value over the last 10 rounds.
pub fn contracts_to_plateau(dists: &[f64]) -> bool {
    let tail = &dists[dists.len().saturating_sub(10)..];
    let plateau = tail.iter().cloned().fold(0.0, f64::max);
    let cross = dists.iter().position(|&v| v <= plateau).unwrap_or(dists.len());
    let monotone = dists[..cross.min(dists.len() - 1) + 1].windows(2).all(|w| w[1] <= w[0]);
    monotone && dists[cross..].iter().all(|&v| v <= 2.0 * plateau)
}

/// Median-GD at `α = 0`, `η = 1/L_F = 1`, `d = 10`, `n = 200`, `m = 20`,
/// `T = 50`, on 10 seeds.
pub fn contraction() -> Result<Check> {
    let mut cfg = regression_config(10, 200, 20, 50);
    cfg.aggregator = AggregatorConfig::Median;
    let out = run_experiment(&cfg)?;
    let failures = out
        .iter()
        .filter(|o| {
            let d: Vec<f64> = o.trajectory.iter().map(|r| r.dist_to_opt.unwrap_or(f64::NAN)).collect();
            !contracts_to_plateau(&d)
        })
        .count();
    Ok(Check::at_most("seeds failing contraction-then-plateau", failures as f64, 0.0))
}

/// Quadratic loss, `d = 5`, `n = 500`, `m = 21`, 4 workers sending
/// `10⁶ · 1`: one-round median against 50 rounds of median-GD.
pub fn one_round() -> Result<Vec<Check>> {
    let mut cfg = regression_config(5, 500, 21, 50);
    cfg.aggregator = AggregatorConfig::Median;
    cfg.attack = AttackConfig::ConstantVector { values: None, value: Some(1e6) };
    let alpha = 4.0 / 21.0;
    let mut one_round_err = 0.0;
    let mut gd_err = 0.0;
    let mut erm_gap = 0.0f64;
    for &seed in &cfg.seeds {
        let problem = build_problem(&cfg, Cell { alpha, n: 500, m: 21, seed })?;
        let loss = problem.model.loss();
        let assignment = select_byzantine_set(21, alpha, seed)?;
        debug_assert_eq!(assignment.count(), 4);
        let attack = AttackSpec::ConstantVector(vec![1e6; 5]);
        let w_star = loss.population_optimum().expect("regression has w*").to_vec();

        let settings = OneRoundSettings { erm: ErmSettings::for_smoothness(1.0), start: vec![0.0; 5] };
        let r = run_one_round(loss, &problem.data, &assignment, &attack, &settings, seed)?;
        one_round_err += distance(&r.final_w, &w_star);

        let mut gd = GdSettings::defaults_for(loss, 50);
        gd.eta = 1.0;
        let g = run_robust_gd(loss, &problem.data, &assignment, &attack, cfg.aggregator.rule(), &gd, seed)?;
        gd_err += distance(&g.final_w, &w_star);

        for (i, shard) in problem.data.shards.iter().enumerate() {
            if assignment.is_byzantine(i) {
                continue;
            }
            let q = loss.empirical_quadratic(&shard.points).expect("squared loss is quadratic");
            let closed = local_erm_quadratic(&q.h, &q.p)?;
            let iterative = local_erm_iterative(loss, &shard.points, &ErmSettings::for_smoothness(1.0), &[0.0; 5])?;
            let gap = closed.iter().zip(&iterative.w).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            erm_gap = erm_gap.max(gap);
        }
    }
    let k = cfg.seeds.len() as f64;
    Ok(vec![
        Check::at_most("one-round error / median-GD error", (one_round_err / k) / (gd_err / k), 3.0),
        Check::at_most("closed-form vs iterative local ERM (max abs)", erm_gap, 1e-6),
    ])
}

/// Logistic data with Gaussian features, `d = 10`, `m = 20`, `n = 500`,
/// label flip on 20% of workers, `T = 100`, `η = 1/L_F`: held-out accuracy
/// gain of the robust rules over the mean.
pub fn logistic_label_flip() -> Result<Vec<Check>> {
    let cfg = ExperimentConfig {
        scenario: "logistic".into(),
        seeds: seeds(10),
        alpha: 0.2,
        data: DataConfig {
            model: ModelKind::Logistic,
            features: FeatureKind::Gaussian,
            n: 500,
            m: 20,
            d: Some(10),
            w_star: None,
            sigma: 0.0,
            holdout: 10_000,
        },
        attack: AttackConfig::LabelFlip,
        aggregator: AggregatorConfig::Mean,
        gd: Some(GdConfig { rounds: 100, eta: None, domain_radius: None, minibatch_fraction: None }),
        one_round: None,
        bound: BoundConfig::default(),
        sweep: None,
    };
    let accuracy = |agg: AggregatorConfig| -> Result<f64> {
        let out = run_experiment(&ExperimentConfig { aggregator: agg, ..cfg.clone() })?;
        Ok(out.iter().map(|o| o.accuracy.unwrap_or(f64::NAN)).sum::<f64>() / out.len() as f64)
    };
    let mean = accuracy(AggregatorConfig::Mean)?;
    let mut checks = Vec::new();
    for (label, agg) in [
        ("median", AggregatorConfig::Median),
        ("trimmed mean (beta 0.2)", AggregatorConfig::TrimmedMean { beta: 0.2 }),
    ] {
        let gain = 100.0 * (accuracy(agg)? - mean);
        checks.push(Check::new(
            format!("{label} accuracy gain over mean (points), mean accuracy {:.4}", mean),
            gain,
            ">= 5",
            gain >= 5.0,
        ));
    }
    Ok(checks)
}
