use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use robustgd::checks::{run_suite, Suite};
use robustgd::config::ExperimentConfig;
use robustgd::output::{write_dataset_csv, write_sweep_csv, write_trajectory_csv};
use robustgd::scenario::{build_problem, Cell};
use robustgd::sweep::{run_experiment, run_sweep, trajectories, RunOptions};
use robustgd::{HarnessError, Result};
use robustgd_core::stats::{
    c_epsilon, feasibility_margin, median_bound_delta, trimmed_bound_delta, BoundInputs, GradientTailProfile,
    TheoreticalBound,
};

#[derive(Parser)]
#[command(name = "robustgd", version, about = "Byzantine-robust distributed gradient descent simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Replace the configured seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write trajectory.csv.
    Run(Common),
    /// Run the configured sweep and write sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Fill the runtime_ms column (makes output vary between runs).
        #[arg(long)]
        timings: bool,
    },
    /// Evaluate C_eps, the feasibility margin and the error bounds.
    Bound(BoundArgs),
    /// Run verification suites; all of them when none is named.
    Verify {
        suite: Option<String>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Generate the configured dataset and write dataset.csv.
    Gen(Common),
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 1.0 / 6.0)]
    epsilon: f64,
    #[arg(long)]
    l_hat: f64,
    #[arg(long)]
    diameter: f64,
    /// V, bound on the gradient standard deviation.
    #[arg(long)]
    std_bound: Option<f64>,
    /// S, bound on the coordinate absolute skewness.
    #[arg(long)]
    skewness: Option<f64>,
    /// v, sub-exponential parameter of the partial derivatives.
    #[arg(long)]
    sub_exponential: Option<f64>,
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| HarnessError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = common.seed {
        cfg.seeds = vec![seed];
    }
    Ok(cfg)
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(HarnessError::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn out_file(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn print_bound(b: &TheoreticalBound) {
    let label = match b.kind {
        robustgd_core::stats::BoundKind::Median => "delta_median",
        robustgd_core::stats::BoundKind::TrimmedMean => "delta_trimmed",
    };
    println!("{label}={}", b.value);
    for (name, v) in &b.components {
        println!("{label}.{name}={v}");
    }
    if b.higher_order_omitted {
        println!("{label}.higher_order_omitted=true");
    }
}

fn bound(args: &BoundArgs) -> Result<()> {
    let inputs = BoundInputs {
        alpha: args.alpha,
        beta: args.beta,
        n: args.n,
        m: args.m,
        d: args.d,
        epsilon: args.epsilon,
        l_hat: args.l_hat,
        diameter: args.diameter,
        tail: GradientTailProfile {
            std_bound: args.std_bound,
            skewness_bound: args.skewness,
            sub_exponential: args.sub_exponential,
        },
    };
    inputs.validate()?;
    println!("c_epsilon={}", c_epsilon(args.epsilon)?);
    if args.skewness.is_some() {
        println!("feasibility_margin={}", feasibility_margin(&inputs)?);
    }
    if args.std_bound.is_some() && args.skewness.is_some() {
        print_bound(&median_bound_delta(&inputs)?);
    }
    if args.beta.is_some() && args.sub_exponential.is_some() {
        print_bound(&trimmed_bound_delta(&inputs)?);
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(common) => {
            let cfg = load(&common)?;
            let outcomes = with_threads(common.threads, || run_experiment(&cfg))?;
            for o in &outcomes {
                for w in &o.warnings {
                    eprintln!("warning (seed {}): {w}", o.cell.seed);
                }
            }
            let path = out_file(&common.out, "trajectory.csv");
            write_trajectory_csv(&trajectories(&cfg, &outcomes), &path)?;
            println!("{}", path.display());
        }
        Command::Sweep { common, timings } => {
            let cfg = load(&common)?;
            let opts = RunOptions { record_timing: timings };
            let result = with_threads(common.threads, || run_sweep(&cfg, opts))?;
            let path = out_file(&common.out, "sweep.csv");
            write_sweep_csv(&result, &path)?;
            println!("{}", path.display());
        }
        Command::Bound(args) => bound(&args)?,
        Command::Verify { suite, threads } => {
            let suites = match suite {
                Some(name) => vec![name.parse::<Suite>()?],
                None => Suite::ALL.to_vec(),
            };
            let mut failed = Vec::new();
            for s in suites {
                let report = with_threads(threads, || run_suite(s))?;
                print!("{report}");
                if !report.pass() {
                    failed.push(s.name());
                }
            }
            if !failed.is_empty() {
                return Err(HarnessError::Verification(format!("suites failed: {}", failed.join(", "))));
            }
        }
        Command::Gen(common) => {
            let cfg = load(&common)?;
            let cell = Cell { alpha: 0.0, n: cfg.data.n, m: cfg.data.m, seed: cfg.seeds[0] };
            let problem = with_threads(common.threads, || build_problem(&cfg, cell))?;
            let path = out_file(&common.out, "dataset.csv");
            write_dataset_csv(&problem.data, &path)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
