//! Gradient-noise statistics of the synthetic data, finite-difference
//! gradient checks and shard bookkeeping.

use rand::Rng;
use rayon::prelude::*;
use robustgd_core::data::{
    gen_rademacher_regression, generate_shard, partition_check, DataGenConfig, FeatureLaw, LabelModel,
};
use robustgd_core::linalg::Matrix;
use robustgd_core::losses::{
    linreg_gradient, logistic_gradient, quad_gradient, LinearRegression, Logistic, LossModel, Point,
    QuadraticForm,
};
use robustgd_core::rng::{domain, keyed_rng, standard_normal};
use robustgd_core::stats::{empirical_abs_skewness, empirical_variance, sub_exponential_check};
use robustgd_core::vector::{distance, norm, sub};

use super::Check;
use crate::error::Result;

const D: usize = 5;
const SHARDS: usize = 100;

/// `w* = (1, …, 1)` and a `w` at distance 1 from it.
fn test_point() -> (Vec<f64>, Vec<f64>) {
    let w_star = vec![1.0; D];
    let mut w = w_star.clone();
    let dir = [0.5, -0.5, 0.5, 0.5, 0.0];
    for (wi, di) in w.iter_mut().zip(dir) {
        *wi += di;
    }
    (w_star, w)
}

/// `samples` centred gradient-noise vectors `∇f(w; z) − (w − w*)`.
fn noise_samples(law: FeatureLaw, samples: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let (w_star, w) = test_point();
    let cfg = DataGenConfig { n: samples.div_ceil(SHARDS), m: SHARDS, sigma: 1.0, feature_law: law, w_star, seed };
    cfg.validate()?;
    let pop = sub(&w, &cfg.w_star);
    let shards: Vec<_> = (0..SHARDS).into_par_iter().map(|i| generate_shard(&cfg, LabelModel::Linear, i)).collect();
    shards
        .iter()
        .flat_map(|s| &s.points)
        .take(samples)
        .map(|p| Ok(sub(&linreg_gradient(&w, p)?, &pop)))
        .collect()
}

/// Trace of the gradient-noise covariance and worst coordinate skewness,
/// for Rademacher and Gaussian features at `d = 5`, `‖w − w*‖ = 1`, `σ = 1`.
pub fn gradient_noise_statistics(samples: usize, seed: u64) -> Result<Vec<Check>> {
    let start = std::time::Instant::now();
    let mut checks = Vec::new();
    for (law, label, variance, skew) in [
        (FeatureLaw::Rademacher, "rademacher", 9.0, 480.0),
        (FeatureLaw::StandardGaussian, "gaussian", 11.0, 429.0),
    ] {
        let noise = noise_samples(law, samples, seed)?;
        let v = empirical_variance(&noise)?;
        let s = empirical_abs_skewness(&noise)?.into_iter().fold(0.0, f64::max);
        checks.push(Check::within(format!("{label} gradient-noise variance"), v, 0.98 * variance, 1.02 * variance));
        checks.push(Check::at_most(format!("{label} max coordinate abs skewness"), s, skew));
    }
    checks.push(Check::at_most("gradient-noise statistics runtime (s)", start.elapsed().as_secs_f64(), 30.0));
    Ok(checks)
}

/// Each gradient coordinate passes the MGF check with `v = √(σ² + ‖w − w*‖²)`.
pub fn sub_exponential_gradients(samples: usize, seed: u64) -> Result<Vec<Check>> {
    let noise = noise_samples(FeatureLaw::Rademacher, samples, seed)?;
    let v = 2f64.sqrt();
    let lambdas: Vec<f64> = [-0.5, -0.3, -0.1, 0.1, 0.3, 0.5].iter().map(|l| l / v).collect();
    (0..D)
        .map(|k| {
            let coord: Vec<f64> = noise.iter().map(|g| g[k]).collect();
            let r = sub_exponential_check(&coord, v, &lambdas, 1.1)?;
            Ok(Check::at_most(format!("gradient coordinate {k} MGF ratio"), r.worst_ratio, 1.1))
        })
        .collect()
}

fn central_difference(f: impl Fn(&[f64]) -> f64, w: &[f64], h: f64) -> Vec<f64> {
    (0..w.len())
        .map(|k| {
            let mut a = w.to_vec();
            let mut b = w.to_vec();
            a[k] += h;
            b[k] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}

/// `‖g_fd − g‖ / max(‖g‖, 1)`.
fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    distance(analytic, numeric) / norm(analytic).max(1.0)
}

/// Central differences with step `10⁻⁶` against the analytic gradients of
/// the squared, logistic and quadratic-form losses.
pub fn gradient_finite_differences(instances: usize, seed: u64) -> Result<Vec<Check>> {
    const H: f64 = 1e-6;
    let mut worst = [0.0f64; 3];
    for i in 0..instances {
        let mut rng = keyed_rng(seed, domain::MONTE_CARLO, 300, i as u64);
        let d = rng.random_range(1..=10);
        let mut vec_of = |scale: f64| -> Vec<f64> { (0..d).map(|_| scale * standard_normal(&mut rng)).collect() };
        let w = vec_of(1.0);
        let x = vec_of(1.0);
        let w_star = vec_of(1.0);
        let y = rng.random_range(-3.0..3.0);

        let lin = LinearRegression::new(w_star.clone(), 1.0);
        let p = Point::new(x.clone(), y);
        let g = linreg_gradient(&w, &p)?;
        worst[0] = worst[0].max(relative_error(&g, &central_difference(|v| lin.sample_value(v, &p), &w, H)));

        let logit = Logistic::new(w_star, vec![Point::new(x.clone(), 1.0)])?;
        let p = Point::new(x, if rng.random_bool(0.5) { 1.0 } else { 0.0 });
        let g = logistic_gradient(&w, &p)?;
        worst[1] = worst[1].max(relative_error(&g, &central_difference(|v| logit.sample_value(v, &p), &w, H)));

        let mut h = Matrix::zeros(d);
        for r in 0..d {
            for c in 0..=r {
                let v = standard_normal(&mut rng);
                h[(r, c)] = v;
                h[(c, r)] = v;
            }
        }
        let p: Vec<f64> = (0..d).map(|_| standard_normal(&mut rng)).collect();
        let q = QuadraticForm { h, p, c: rng.random_range(-1.0..1.0) };
        let g = quad_gradient(&w, &q)?;
        worst[2] = worst[2].max(relative_error(&g, &central_difference(|v| q.value(v), &w, H)));
    }
    Ok(["squared", "logistic", "quadratic"]
        .iter()
        .zip(worst)
        .map(|(name, e)| Check::at_most(format!("{name} loss gradient vs finite differences"), e, 1e-5))
        .collect())
}

pub fn shard_partition(seed: u64) -> Result<Check> {
    let cfg = DataGenConfig {
        n: 100,
        m: 20,
        sigma: 1.0,
        feature_law: FeatureLaw::Rademacher,
        w_star: vec![1.0; D],
        seed,
    };
    let report = partition_check(&gen_rademacher_regression(&cfg)?)?;
    Ok(Check::at_most("shard partition problems", report.problems.len() as f64, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_runs_pass() {
        assert!(gradient_finite_differences(20, 1).unwrap().iter().all(|c| c.pass));
        assert!(shard_partition(1).unwrap().pass);
        let (w_star, w) = test_point();
        assert!((distance(&w, &w_star) - 1.0).abs() < 1e-15);
    }
}
