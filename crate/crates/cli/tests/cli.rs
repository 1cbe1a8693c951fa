use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
scenario = "cli"
seeds = [1, 2]
alpha = 0.1

[data]
model = "linear"
features = "gaussian"
n = 40
m = 10
d = 3

[attack]
kind = "sign_flip"
scale = 4.0

[aggregator]
rule = "median"

[gd]
rounds = 8

[sweep]
sample_sizes = [[20, 5], [40, 10], [80, 20]]
"#;

fn robustgd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robustgd")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("c.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_sweep_and_gen_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().to_str().unwrap();
    for cmd in ["run", "sweep", "gen"] {
        let o = robustgd(&[cmd, "--config", &cfg, "--out", out]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("run_id,round,dist_to_opt,excess_risk,pop_grad_norm,aggregate_deviation\n"));
    // 2 seeds x 9 records, last round without aggregate deviation
    assert_eq!(traj.lines().count(), 1 + 2 * 9);
    assert!(traj.lines().nth(9).unwrap().ends_with(','));

    let sweep = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = sweep.lines().collect();
    assert_eq!(rows.len(), 1 + 3 * 2);
    assert!(rows[1].starts_with("cli,median,sign_flip,0.1,20,5,3,1,"));
    // runtime column is empty without --timings
    assert!(rows.iter().skip(1).all(|r| r.ends_with(',')));

    let data = std::fs::read_to_string(dir.path().join("dataset.csv")).unwrap();
    assert!(data.starts_with("worker_id,index,x_1,x_2,x_3,y\n"));
    assert_eq!(data.lines().count(), 1 + 400);
}

#[test]
fn seed_flag_replaces_seed_list() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let o = robustgd(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap(), "--seed", "7"]);
    assert!(o.status.success());
    let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 1 + 9);
    assert!(traj.contains("seed=7"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let bad = write_config(dir.path(), &CONFIG.replace("rounds = 8", "rounds = 8\nspeed = 2"));
    assert_eq!(robustgd(&["run", "--config", &bad, "--out", out]).status.code(), Some(1));

    let single = write_config(dir.path(), &CONFIG.replace("[[20, 5], [40, 10], [80, 20]]", "[[20, 5]]"));
    let o = robustgd(&["sweep", "--config", &single, "--out", out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("single (n, m)"));

    let blowup = write_config(dir.path(), &CONFIG.replace("rounds = 8", "rounds = 8\neta = 1e308\ndomain_radius = 1e308"));
    assert_eq!(robustgd(&["run", "--config", &blowup, "--out", out]).status.code(), Some(2));

    assert_eq!(robustgd(&["verify", "nonsense"]).status.code(), Some(1));
    assert_eq!(robustgd(&["run", "--out", out]).status.code(), Some(1));
    assert_eq!(robustgd(&["run", "--config", "/nonexistent/c.toml"]).status.code(), Some(1));

    let o = robustgd(&["verify", "aggregation"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).lines().all(|l| l.contains("PASS")));
}

#[test]
fn bound_subcommand() {
    let o = robustgd(&[
        "bound", "--alpha", "0.1", "--beta", "0.1", "--n", "400", "--m", "20", "--d", "5", "--l-hat", "10",
        "--diameter", "1", "--std-bound", "3", "--skewness", "1.6", "--sub-exponential", "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    let value = |key: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(&format!("{key}="))).unwrap();
        line[key.len() + 1..].parse().unwrap()
    };
    assert!((value("c_epsilon") - 4.002386373).abs() < 1e-8);
    assert!((value("delta_median") - 1.6210538012181336).abs() < 1e-9);
    assert!((value("delta_trimmed") - 9.014654760403622).abs() < 1e-9);
    assert!(text.contains("delta_trimmed.higher_order_omitted=true"));

    let o = robustgd(&["bound", "--alpha", "0.7", "--n", "1", "--m", "1", "--d", "1", "--l-hat", "1", "--diameter", "1"]);
    assert_eq!(o.status.code(), Some(1));
}
