use robustgd::config::{AggregatorConfig, AttackConfig, ExperimentConfig};
use robustgd::checks::convergence::regression_config;
use robustgd::output::{read_sweep_csv, write_sweep_csv};
use robustgd::sweep::{run_experiment, run_sweep, sweep_alpha, sweep_sample_size, RunOptions};
use robustgd::HarnessError;

fn small() -> ExperimentConfig {
    let mut cfg = regression_config(4, 50, 10, 10);
    cfg.seeds = vec![5, 6, 7];
    cfg.attack = AttackConfig::SignFlip { scale: 10.0 };
    cfg.aggregator = AggregatorConfig::Median;
    cfg
}

#[test]
fn zero_alpha_sweep_equals_baseline_runs() {
    let cfg = small();
    let sweep = sweep_alpha(&cfg, &[0.0], RunOptions::default()).unwrap();
    let base = run_experiment(&cfg).unwrap();
    assert_eq!(sweep.rows.len(), 3);
    for (row, run) in sweep.rows.iter().zip(&base) {
        assert_eq!(row.seed, run.cell.seed);
        assert_eq!(row.final_dist, run.final_dist());
        assert_eq!(row.final_excess_risk, run.final_excess_risk());
    }
}

#[test]
fn rows_are_canonical_and_carry_bounds() {
    let cfg = small();
    let sweep = sweep_alpha(&cfg, &[0.3, 0.1], RunOptions::default()).unwrap();
    let keys: Vec<(f64, u64)> = sweep.rows.iter().map(|r| (r.alpha, r.seed)).collect();
    assert_eq!(keys, vec![(0.3, 5), (0.3, 6), (0.3, 7), (0.1, 5), (0.1, 6), (0.1, 7)]);
    assert!(sweep.rows.iter().all(|r| r.bound_value.is_some_and(|b| b > 0.0)));
    assert!(sweep.rows.iter().all(|r| r.runtime_ms.is_none()));

    let timed = sweep_alpha(&cfg, &[0.1], RunOptions { record_timing: true }).unwrap();
    assert!(timed.rows.iter().all(|r| r.runtime_ms.is_some()));

    let mean = ExperimentConfig { aggregator: AggregatorConfig::Mean, ..cfg };
    let sweep = sweep_alpha(&mean, &[0.1], RunOptions::default()).unwrap();
    assert!(sweep.rows.iter().all(|r| r.bound_value.is_none()));
}

#[test]
fn median_sweeps_reject_a_faulty_majority() {
    let err = sweep_alpha(&small(), &[0.5], RunOptions::default()).unwrap_err();
    assert!(matches!(err, HarnessError::Config(_)));
}

#[test]
fn sweep_csv_round_trip_is_exact() {
    let mut cfg = small();
    cfg.alpha = 0.0;
    let sweep = sweep_sample_size(&cfg, &[(20, 5), (40, 10), (80, 20)], RunOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    write_sweep_csv(&sweep, &a).unwrap();
    let back = read_sweep_csv(&a).unwrap();
    for (x, y) in back.rows.iter().zip(&sweep.rows) {
        assert_eq!(x.final_dist.map(f64::to_bits), y.final_dist.map(f64::to_bits));
        assert_eq!(x.bound_value.map(f64::to_bits), y.bound_value.map(f64::to_bits));
    }
    write_sweep_csv(&back, &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn sweeps_are_thread_count_independent() {
    let mut cfg = small();
    cfg.sweep = Some(robustgd::config::SweepConfig { alpha: Some(vec![0.0, 0.2]), sample_sizes: None });
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_sweep(&cfg, RunOptions::default()).unwrap())
    };
    assert_eq!(run(1), run(4));
}

/// Doubling `n` twice at fixed `m` halves the seed-averaged error within ±30%.
#[test]
fn quadrupling_nm_halves_error() {
    let mut cfg = regression_config(5, 100, 10, 40);
    cfg.seeds = (1..=20).collect();
    let sweep = sweep_sample_size(&cfg, &[(100, 10), (400, 10)], RunOptions::default()).unwrap();
    let avg = |n: usize| {
        let rows: Vec<_> = sweep.rows.iter().filter(|r| r.n == n).collect();
        rows.iter().map(|r| r.final_dist.unwrap()).sum::<f64>() / rows.len() as f64
    };
    let ratio = avg(400) / avg(100);
    assert!((0.35..=0.65).contains(&ratio), "{ratio}");
}

#[test]
fn shipped_configs_load() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        count += 1;
    }
    assert!(count >= 3);
}
