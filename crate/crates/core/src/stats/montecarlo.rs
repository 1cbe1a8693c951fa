//! Seeded Monte Carlo verifiers.
//!
//! Trial `i` draws from the stream keyed by `(seed, i)`, so a verifier's
//! output depends only on its inputs, never on evaluation order.

use alloc::vec::Vec;

use super::bounds::BERRY_ESSEEN;
use super::normal::c_epsilon;
use crate::aggregation::scalar_median;
use crate::error::{invalid, Result};
use crate::linalg::{Lu, Matrix};
use crate::rng::{domain, keyed_rng, standard_normal, StreamRng};
use crate::vector::{dot, sub};

/// A one-dimensional law with known mean, standard deviation and absolute skewness.
pub trait ScalarDistribution {
    fn mean(&self) -> f64;
    fn std_dev(&self) -> f64;
    fn abs_skewness(&self) -> f64;
    fn sample(&self, rng: &mut StreamRng) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub mean: f64,
    pub std_dev: f64,
}

impl ScalarDistribution for Gaussian {
    fn mean(&self) -> f64 {
        self.mean
    }
    fn std_dev(&self) -> f64 {
        self.std_dev
    }
    fn abs_skewness(&self) -> f64 {
        2.0 * libm::sqrt(2.0 / core::f64::consts::PI)
    }
    fn sample(&self, rng: &mut StreamRng) -> f64 {
        self.mean + self.std_dev * standard_normal(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMass(pub f64);

impl ScalarDistribution for PointMass {
    fn mean(&self) -> f64 {
        self.0
    }
    fn std_dev(&self) -> f64 {
        0.0
    }
    fn abs_skewness(&self) -> f64 {
        0.0
    }
    fn sample(&self, _: &mut StreamRng) -> f64 {
        self.0
    }
}

/// Setup of a median-of-means concentration experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianOfMeansSetup {
    /// Samples per machine.
    pub n: usize,
    /// Machines.
    pub m: usize,
    /// Byzantine machines; `α = byzantine / m`.
    pub byzantine: usize,
    pub t: f64,
    pub epsilon: f64,
    pub trials: usize,
    pub seed: u64,
    /// Byzantine machines report `μ ± outlier`.
    pub outlier: f64,
    /// Alternate the outlier sign across Byzantine machines instead of all `+`.
    pub alternate_sign: bool,
    /// Reject setups whose premise `α + √(t/(m(1−α))) + 0.4748γ/√n ≤ 1/2 − ε` fails.
    pub enforce_premise: bool,
}

impl MedianOfMeansSetup {
    pub fn new(n: usize, m: usize, t: f64, epsilon: f64, trials: usize, seed: u64) -> Self {
        Self {
            n,
            m,
            byzantine: 0,
            t,
            epsilon,
            trials,
            seed,
            outlier: 1e6,
            alternate_sign: false,
            enforce_premise: true,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.byzantine as f64 / self.m as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianOfMeansReport {
    pub trials: usize,
    pub violations: usize,
    pub violation_rate: f64,
    /// Failure probability guaranteed by the concentration bound, `4e^{−2t}`.
    pub bound_rate: f64,
    /// Deviation radius `C_ε σ/√n (α + √(t/(m(1−α))) + 0.4748γ/√n)`.
    pub radius: f64,
    /// `(1/2 − ε) − (α + √(t/(m(1−α))) + 0.4748γ/√n)`.
    pub premise_margin: f64,
}

/// Counts how often the median of per-machine means misses the population
/// mean by more than the concentration radius.
pub fn verify_median_of_means<D: ScalarDistribution>(
    dist: &D,
    setup: &MedianOfMeansSetup,
) -> Result<MedianOfMeansReport> {
    let MedianOfMeansSetup { n, m, byzantine, t, epsilon, trials, .. } = *setup;
    if n == 0 || m == 0 {
        return Err(invalid!("n and m must be at least 1"));
    }
    if trials < 500 {
        return Err(invalid!("need at least 500 trials, got {trials}"));
    }
    if 2 * byzantine >= m {
        return Err(invalid!("{byzantine} Byzantine machines out of {m} is not a minority"));
    }
    if !(t >= 0.0) {
        return Err(invalid!("t must be nonnegative"));
    }
    let alpha = setup.alpha();
    let gamma = dist.abs_skewness();
    let inner = alpha
        + libm::sqrt(t / (m as f64 * (1.0 - alpha)))
        + BERRY_ESSEEN * gamma / libm::sqrt(n as f64);
    let premise_margin = (0.5 - epsilon) - inner;
    let c = c_epsilon(epsilon)?;
    if setup.enforce_premise && premise_margin < 0.0 {
        return Err(invalid!("premise violated: margin {premise_margin} < 0"));
    }
    let radius = c * dist.std_dev() / libm::sqrt(n as f64) * inner;
    let mu = dist.mean();

    let mut means = Vec::with_capacity(m);
    let mut violations = 0;
    for trial in 0..trials {
        let mut rng = keyed_rng(setup.seed, domain::MONTE_CARLO, trial as u64, 0);
        means.clear();
        for machine in 0..m {
            if machine < byzantine {
                let sign = if setup.alternate_sign && machine % 2 == 1 { -1.0 } else { 1.0 };
                means.push(mu + sign * setup.outlier);
            } else {
                let s: f64 = (0..n).map(|_| dist.sample(&mut rng)).sum();
                means.push(s / n as f64);
            }
        }
        let med = scalar_median(&means)?;
        if libm::fabs(med - mu) > radius {
            violations += 1;
        }
    }
    Ok(MedianOfMeansReport {
        trials,
        violations,
        violation_rate: violations as f64 / trials as f64,
        bound_rate: 4.0 * libm::exp(-2.0 * t),
        radius,
        premise_margin,
    })
}

/// Source of per-sample quadratic loss coefficients `(H, p)`.
pub trait QuadSampler {
    fn dim(&self) -> usize;
    fn sample(&self, rng: &mut StreamRng) -> (Matrix, Vec<f64>);
}

/// Monte Carlo estimate of
/// `σ̃ = (E‖H_F⁻¹((H − H_F) H_F⁻¹ p_F − (p − p_F))‖²)^{1/2}`
/// using linear solves against `H_F`.
pub fn estimate_one_round_sigma<S: QuadSampler>(
    sampler: &S,
    h_pop: &Matrix,
    p_pop: &[f64],
    draws: usize,
    seed: u64,
) -> Result<f64> {
    let d = sampler.dim();
    if h_pop.dim() != d || p_pop.len() != d {
        return Err(invalid!("population (H, p) dimension does not match sampler dimension {d}"));
    }
    if draws < 100 {
        return Err(invalid!("need at least 100 draws, got {draws}"));
    }
    let lu = Lu::factor(h_pop)?;
    let a = lu.solve(p_pop);
    let mut total = 0.0;
    for i in 0..draws {
        let mut rng = keyed_rng(seed, domain::MONTE_CARLO, i as u64, 1);
        let (h, p) = sampler.sample(&mut rng);
        let dh = h.sub(h_pop);
        let r = sub(&dh.mul_vec(&a), &sub(&p, p_pop));
        let s = lu.solve(&r);
        total += dot(&s, &s);
    }
    Ok(libm::sqrt(total / draws as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn point_mass_never_violates() {
        let setup = MedianOfMeansSetup::new(10, 21, 1.0, 0.1, 500, 1);
        let r = verify_median_of_means(&PointMass(3.5), &setup).unwrap();
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn premise_is_enforced_unless_disabled() {
        let mut setup = MedianOfMeansSetup::new(50, 21, 1.0, 1.0 / 6.0, 500, 1);
        setup.byzantine = 2;
        let g = Gaussian { mean: 0.0, std_dev: 1.0 };
        assert!(verify_median_of_means(&g, &setup).is_err());
        setup.enforce_premise = false;
        let r = verify_median_of_means(&g, &setup).unwrap();
        assert!(r.premise_margin < 0.0);
    }

    #[test]
    fn translation_equivariant() {
        let setup = MedianOfMeansSetup::new(50, 41, 1.0, 0.05, 600, 11);
        let a = verify_median_of_means(&Gaussian { mean: 0.0, std_dev: 1.0 }, &setup).unwrap();
        let b = verify_median_of_means(&Gaussian { mean: 64.0, std_dev: 1.0 }, &setup).unwrap();
        assert_eq!(a.violations, b.violations);
    }

    struct Fixed(Matrix, Vec<f64>);
    impl QuadSampler for Fixed {
        fn dim(&self) -> usize {
            self.1.len()
        }
        fn sample(&self, _: &mut StreamRng) -> (Matrix, Vec<f64>) {
            (self.0.clone(), self.1.clone())
        }
    }

    struct NoisyFirst(Matrix, Vec<f64>);
    impl QuadSampler for NoisyFirst {
        fn dim(&self) -> usize {
            self.1.len()
        }
        fn sample(&self, rng: &mut StreamRng) -> (Matrix, Vec<f64>) {
            let mut p = self.1.clone();
            p[0] += standard_normal(rng);
            (self.0.clone(), p)
        }
    }

    #[test]
    fn one_round_sigma_examples() {
        let h = Matrix::scaled_identity(3, 2.0);
        let p = vec![1.0, -2.0, 0.5];
        let fixed = Fixed(h.clone(), p.clone());
        assert_eq!(estimate_one_round_sigma(&fixed, &h, &p, 100, 0).unwrap(), 0.0);

        let noisy = NoisyFirst(h.clone(), p.clone());
        let s = estimate_one_round_sigma(&noisy, &h, &p, 200_000, 5).unwrap();
        assert!((s - 0.5).abs() < 0.005, "{s}");

        let singular = Matrix::zeros(3);
        assert!(estimate_one_round_sigma(&fixed, &singular, &p, 100, 0).is_err());
    }
}
