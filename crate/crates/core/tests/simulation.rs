use robustgd_core::adversary::{select_byzantine_set, AttackSpec, ByzantineAssignment};
use robustgd_core::aggregation::AggregationRule;
use robustgd_core::data::{gen_rademacher_regression, DataGenConfig, FeatureLaw, RegressionQuadSampler};
use robustgd_core::linalg::Matrix;
use robustgd_core::losses::{linreg_gradient, local_erm_quadratic, LinearRegression, LossModel};
use robustgd_core::simulator::{run_one_round, run_robust_gd, GdSettings, OneRoundSettings};
use robustgd_core::losses::ErmSettings;
use robustgd_core::stats::estimate_one_round_sigma;
use robustgd_core::vector::{distance, norm, sub};

fn regression(n: usize, m: usize, d: usize, seed: u64) -> (DataGenConfig, LinearRegression) {
    let cfg = DataGenConfig {
        n,
        m,
        sigma: 1.0,
        feature_law: FeatureLaw::Rademacher,
        w_star: (0..d).map(|k| 1.0 - 0.1 * k as f64).collect(),
        seed,
    };
    let model = LinearRegression::new(cfg.w_star.clone(), cfg.sigma);
    (cfg, model)
}

/// Starts far from `w*` (`‖w*‖ = 10`) so that the noise floor
/// `σ√(d/(nm)) ≈ 0.05` sits well below 1% of the initial distance.
#[test]
fn mean_gd_contracts_by_two_orders_of_magnitude() {
    let (mut cfg, _) = regression(200, 20, 10, 4);
    cfg.w_star = vec![10.0 / 10f64.sqrt(); 10];
    let model = LinearRegression::new(cfg.w_star.clone(), cfg.sigma);
    let data = gen_rademacher_regression(&cfg).unwrap();
    let settings = GdSettings { eta: 1.0, ..GdSettings::defaults_for(&model, 30) };
    let r = run_robust_gd(
        &model,
        &data,
        &ByzantineAssignment::honest(20),
        &AttackSpec::SignFlip(1.0),
        AggregationRule::Mean,
        &settings,
        4,
    )
    .unwrap();
    let first = r.trajectory[0].dist_to_opt.unwrap();
    let last = r.final_record().dist_to_opt.unwrap();
    assert!(last * 100.0 <= first, "{first} -> {last}");
}

#[test]
fn median_resists_huge_constant_messages_where_mean_does_not() {
    let (cfg, model) = regression(200, 15, 5, 8);
    let data = gen_rademacher_regression(&cfg).unwrap();
    let assignment = select_byzantine_set(15, 0.2, 8).unwrap();
    let attack = AttackSpec::ConstantVector(vec![1e6; 5]);
    let settings = GdSettings { eta: 1.0, ..GdSettings::defaults_for(&model, 40) };
    let run = |rule| run_robust_gd(&model, &data, &assignment, &attack, rule, &settings, 8).unwrap();
    let mean = run(AggregationRule::Mean);
    let median = run(AggregationRule::CoordinateMedian);
    // the mean is dragged to the boundary of the parameter ball
    assert!((norm(&mean.final_w) - settings.domain_radius).abs() < 1e-9);
    assert!(median.final_record().dist_to_opt.unwrap() < 0.3);
}

#[test]
fn sample_gradients_average_to_population_gradient() {
    let (cfg, model) = regression(20_000, 10, 4, 21);
    let data = gen_rademacher_regression(&cfg).unwrap();
    let w = vec![0.3, -0.2, 1.5, 0.0];
    let pop = model.population_gradient(&w).unwrap();
    let points: Vec<_> = data.shards.iter().flat_map(|s| &s.points).collect();
    let n = points.len() as f64;
    let grads: Vec<Vec<f64>> = points.iter().map(|p| linreg_gradient(&w, p).unwrap()).collect();
    for k in 0..4 {
        let mean = grads.iter().map(|g| g[k]).sum::<f64>() / n;
        let var = grads.iter().map(|g| (g[k] - mean).powi(2)).sum::<f64>() / n;
        let se = (var / n).sqrt();
        assert!((mean - pop[k]).abs() <= 3.0 * se, "coordinate {k}: {mean} vs {}", pop[k]);
    }
}

/// With `(H, p) = (xxᵀ, −yx)` and `±1` features the one-round noise vector
/// is `xξ`, so `σ̃² = dσ²`.
#[test]
fn one_round_sigma_matches_closed_form() {
    let (cfg, _) = regression(1, 1, 6, 2);
    let sampler = RegressionQuadSampler { config: cfg.clone() };
    let p_pop: Vec<f64> = cfg.w_star.iter().map(|v| -v).collect();
    let s = estimate_one_round_sigma(&sampler, &Matrix::identity(6), &p_pop, 200_000, 3).unwrap();
    let want = 6f64.sqrt();
    assert!((s - want).abs() / want < 0.02, "{s} vs {want}");
}

#[test]
fn one_round_median_tracks_mean_of_local_erms() {
    let mut median_err = 0.0;
    let mut mean_err = 0.0;
    for seed in 1..=10 {
        let (cfg, model) = regression(500, 21, 5, seed);
        let data = gen_rademacher_regression(&cfg).unwrap();
        let settings = OneRoundSettings { erm: ErmSettings::for_smoothness(1.0), start: vec![0.0; 5] };
        let r = run_one_round(&model, &data, &ByzantineAssignment::honest(21), &AttackSpec::SignFlip(1.0), &settings, seed)
            .unwrap();
        median_err += distance(&r.final_w, &cfg.w_star);
        let mut avg = vec![0.0; 5];
        for s in &data.shards {
            let q = model.empirical_quadratic(&s.points).unwrap();
            let w = local_erm_quadratic(&q.h, &q.p).unwrap();
            avg.iter_mut().zip(&w).for_each(|(a, v)| *a += v / 21.0);
        }
        mean_err += norm(&sub(&avg, &cfg.w_star));
    }
    assert!(median_err <= 3.0 * mean_err, "{median_err} vs {mean_err}");
}

#[test]
fn runs_are_reproducible_and_seed_sensitive() {
    let (cfg, model) = regression(50, 9, 3, 5);
    let data = gen_rademacher_regression(&cfg).unwrap();
    let assignment = select_byzantine_set(9, 0.2, 5).unwrap();
    let attack = AttackSpec::GaussianMessage(3.0);
    let mut settings = GdSettings::defaults_for(&model, 10);
    settings.minibatch_fraction = Some(0.4);
    let rule = AggregationRule::CoordinateTrimmedMean(0.25);
    let a = run_robust_gd(&model, &data, &assignment, &attack, rule, &settings, 5).unwrap();
    let b = run_robust_gd(&model, &data, &assignment, &attack, rule, &settings, 5).unwrap();
    assert_eq!(a, b);
    let c = run_robust_gd(&model, &data, &assignment, &attack, rule, &settings, 6).unwrap();
    assert_ne!(a.fingerprint, c.fingerprint);
    assert_ne!(a.final_w, c.final_w);
}
