//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode};

use robustgd::checks::{aggregation, convergence, data, statistics, Check};
use robustgd::Result;

const DETERMINISM_CONFIG: &str = r#"
scenario = "determinism"
seeds = [3, 1, 2]
alpha = 0.2

[data]
model = "linear"
features = "rademacher"
n = 60
m = 11
d = 4
sigma = 1.0

[attack]
kind = "gaussian_message"
scale = 5.0

[aggregator]
rule = "trimmed_mean"
beta = 0.2

[gd]
rounds = 15
minibatch_fraction = 0.5

[sweep]
alpha = [0.0, 0.1, 0.2, 0.3]
"#;

fn cli(args: &[&str]) -> std::result::Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_robustgd"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

/// `run` and `sweep` twice at 1 thread and once at 8; counts differing files.
fn determinism() -> Result<Vec<Check>> {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = dir.path().join("config.toml");
    std::fs::write(&config, DETERMINISM_CONFIG).expect("write config");
    let cfg = config.to_str().unwrap();
    let mut checks = Vec::new();
    for (cmd, file) in [("run", "trajectory.csv"), ("sweep", "sweep.csv")] {
        let mut outputs = Vec::new();
        for (i, threads) in ["1", "1", "8"].iter().enumerate() {
            let out = dir.path().join(format!("{cmd}{i}"));
            let out = out.to_str().unwrap();
            if let Err(e) = cli(&[cmd, "--config", cfg, "--out", out, "--threads", threads]) {
                eprintln!("{cmd} failed: {e}");
                outputs.push(None);
                continue;
            }
            outputs.push(std::fs::read(Path::new(out).join(file)).ok());
        }
        let nonempty = outputs[0].as_ref().is_some_and(|b| b.len() > 100);
        let differing = outputs.iter().filter(|o| *o != &outputs[0]).count();
        checks.push(Check::new(
            format!("{cmd} CSVs differing from first execution (threads 1, 1, 8)"),
            differing as f64,
            "0, first output nonempty",
            differing == 0 && nonempty,
        ));
    }
    Ok(checks)
}

type Criterion = (&'static str, fn() -> Result<Vec<Check>>);

fn criteria() -> Vec<Criterion> {
    vec![
        ("aggregator oracle equivalence", || {
            aggregation::oracle_equivalence(aggregation::library_median, aggregation::library_trimmed_mean, 1000, 1)
        }),
        ("trimmed-mean deterministic deviation bound", || {
            Ok(vec![statistics::trimmed_mean_deviation(10_000, 3)?])
        }),
        ("C_eps value and monotonicity", statistics::c_epsilon_checks),
        ("gradient-noise variance and skewness", || data::gradient_noise_statistics(1_000_000, 5)),
        ("sub-exponential gradient coordinates", || data::sub_exponential_gradients(1_000_000, 6)),
        ("median-of-means concentration", || statistics::median_of_means_concentration(2000, 4)),
        ("robust convergence under sign flip", convergence::robust_convergence),
        ("error increasing in alpha", convergence::alpha_scaling),
        ("error scaling in nm", || Ok(vec![convergence::sample_size_scaling()?])),
        ("contraction to plateau", || Ok(vec![convergence::contraction()?])),
        ("one-round median", convergence::one_round),
        ("logistic label-flip accuracy gap", convergence::logistic_label_flip),
        ("gradients vs finite differences", || data::gradient_finite_differences(100, 7)),
        ("determinism across thread counts", determinism),
    ]
}

fn main() -> ExitCode {
    let mut failed = 0;
    for (i, (title, run)) in criteria().into_iter().enumerate() {
        let n = i + 1;
        match run() {
            Ok(checks) => {
                let pass = checks.iter().all(|c| c.pass);
                println!("criterion {n:>2} {}: {title}", if pass { "PASS" } else { "FAIL" });
                for c in &checks {
                    println!("      {c}");
                }
                if !pass {
                    failed += 1;
                }
            }
            Err(e) => {
                println!("criterion {n:>2} FAIL: {title} (error: {e})");
                failed += 1;
            }
        }
    }
    println!("{} of 14 criteria passed", 14 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
