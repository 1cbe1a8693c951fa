//! Loss models, local empirical gradients and local ERM solvers.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, numerical, Result};
use crate::linalg::{solve, Matrix};
use crate::vector::{axpy, dot, norm, sub};

/// One labelled example.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub x: Vec<f64>,
    pub y: f64,
}

impl Point {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        Self { x, y }
    }
}

/// Smoothness constants of a loss.
///
/// `λ_F ≤ L_F ≤ L̂` whenever all three are known; `lambda_f = 0` means no
/// strong convexity is claimed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessProfile {
    pub l_f: f64,
    pub lambda_f: f64,
    pub l_hat: f64,
    pub gradient_bound: Option<f64>,
}

/// What a label corruption may draw from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LabelSpace {
    /// Integer classes `0..=max_label`.
    Classes { max_label: u32 },
    /// Real-valued labels in `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
}

/// A per-sample loss `f(w; z)` together with what is known about its
/// population counterpart `F(w) = E f(w; z)`.
pub trait LossModel: Sync {
    fn dim(&self) -> usize;

    fn sample_value(&self, w: &[f64], point: &Point) -> f64;

    /// Adds `scale · ∇f(w; point)` to `out`. Dimensions are not checked.
    fn add_sample_gradient(&self, w: &[f64], point: &Point, scale: f64, out: &mut [f64]);

    fn smoothness(&self) -> SmoothnessProfile;

    fn population_optimum(&self) -> Option<&[f64]> {
        None
    }

    fn population_gradient(&self, _w: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// `F(w) − F(w*)` when it can be computed.
    fn excess_risk(&self, _w: &[f64]) -> Option<f64> {
        None
    }

    /// Exact quadratic form of the empirical risk on `shard`, for losses
    /// that are quadratic in `w`.
    fn empirical_quadratic(&self, _shard: &[Point]) -> Option<QuadraticForm> {
        None
    }

    fn label_space(&self) -> LabelSpace;

    fn sample_gradient(&self, w: &[f64], point: &Point) -> Result<Vec<f64>> {
        check_dims(self.dim(), w, point)?;
        let mut g = vec![0.0; w.len()];
        self.add_sample_gradient(w, point, 1.0, &mut g);
        Ok(g)
    }
}

fn check_dims(d: usize, w: &[f64], point: &Point) -> Result<()> {
    if w.len() != d || point.x.len() != d {
        return Err(invalid!(
            "dimension mismatch: model {d}, w {}, x {}",
            w.len(),
            point.x.len()
        ));
    }
    Ok(())
}

/// `∇ ½(y − xᵀw)² = x (xᵀw − y)`.
pub fn linreg_gradient(w: &[f64], point: &Point) -> Result<Vec<f64>> {
    check_dims(w.len(), w, point)?;
    let r = dot(&point.x, w) - point.y;
    Ok(point.x.iter().map(|x| x * r).collect())
}

/// `∇F(w) = w − w*` for features with identity covariance.
pub fn linreg_population_gradient(w: &[f64], w_star: &[f64]) -> Vec<f64> {
    sub(w, w_star)
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + libm::log1p(libm::exp(-libm::fabs(z)))
}

/// Gradient of the logistic negative log-likelihood, `x (σ(xᵀw) − y)` for `y ∈ {0, 1}`.
pub fn logistic_gradient(w: &[f64], point: &Point) -> Result<Vec<f64>> {
    check_dims(w.len(), w, point)?;
    let r = sigmoid(dot(&point.x, w)) - point.y;
    Ok(point.x.iter().map(|x| x * r).collect())
}

/// `½ wᵀHw + pᵀw + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub h: Matrix,
    pub p: Vec<f64>,
    pub c: f64,
}

impl QuadraticForm {
    pub fn value(&self, w: &[f64]) -> f64 {
        0.5 * dot(w, &self.h.mul_vec(w)) + dot(&self.p, w) + self.c
    }
}

/// `H w + p`.
pub fn quad_gradient(w: &[f64], q: &QuadraticForm) -> Result<Vec<f64>> {
    if w.len() != q.h.dim() || q.p.len() != q.h.dim() {
        return Err(invalid!("dimension mismatch: H is {0}x{0}, w {1}, p {2}", q.h.dim(), w.len(), q.p.len()));
    }
    let mut g = q.h.mul_vec(w);
    axpy(1.0, &q.p, &mut g);
    Ok(g)
}

/// `∇F_i(w) = (1/n) Σ_j ∇f(w; z_j)` over a worker's shard.
pub fn local_empirical_gradient<L: LossModel + ?Sized>(
    model: &L,
    w: &[f64],
    shard: &[Point],
) -> Result<Vec<f64>> {
    if shard.is_empty() {
        return Err(invalid!("empty shard"));
    }
    if w.len() != model.dim() {
        return Err(invalid!("w has dimension {} but the model has {}", w.len(), model.dim()));
    }
    if let Some(p) = shard.iter().find(|p| p.x.len() != w.len()) {
        return Err(invalid!("point of dimension {} in a {}-dimensional shard", p.x.len(), w.len()));
    }
    let mut g = vec![0.0; w.len()];
    let s = 1.0 / shard.len() as f64;
    for p in shard {
        model.add_sample_gradient(w, p, s, &mut g);
    }
    Ok(g)
}

/// Empirical risk `F_i(w)` over a shard.
pub fn local_empirical_risk<L: LossModel + ?Sized>(model: &L, w: &[f64], shard: &[Point]) -> f64 {
    shard.iter().map(|p| model.sample_value(w, p)).sum::<f64>() / shard.len() as f64
}

/// Minimizer `ŵ = −H⁻¹p` of a strongly convex quadratic.
pub fn local_erm_quadratic(h: &Matrix, p: &[f64]) -> Result<Vec<f64>> {
    if p.len() != h.dim() {
        return Err(invalid!("p has length {} for a {}x{} H", p.len(), h.dim(), h.dim()));
    }
    if !h.is_symmetric(1e-12) {
        return Err(invalid!("H is not symmetric"));
    }
    h.check_positive_definite()?;
    let neg_p: Vec<f64> = p.iter().map(|v| -v).collect();
    let w = solve(h, &neg_p)?;
    let mut residual = h.mul_vec(&w);
    axpy(1.0, p, &mut residual);
    let tol = 1e-8 * (h.norm() * norm(&w) + norm(p));
    if norm(&residual) > tol {
        return Err(numerical!("ERM residual {:e} exceeds {tol:e}", norm(&residual)));
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErmSettings {
    pub eta: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl ErmSettings {
    /// `η = 1/L_F`, `grad_tol = 1e-8`, at most `10⁵` iterations.
    pub fn for_smoothness(l_f: f64) -> Self {
        Self { eta: 1.0 / l_f, max_iters: 100_000, grad_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErmOutcome {
    pub w: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Full-batch gradient descent on `F_i` from `start` until
/// `‖∇F_i‖ ≤ grad_tol` or `max_iters`.
pub fn local_erm_iterative<L: LossModel + ?Sized>(
    model: &L,
    shard: &[Point],
    settings: &ErmSettings,
    start: &[f64],
) -> Result<ErmOutcome> {
    if !(settings.eta > 0.0) {
        return Err(invalid!("step size must be positive"));
    }
    let mut w = start.to_vec();
    let mut g = local_empirical_gradient(model, &w, shard)?;
    let mut grad_norm = norm(&g);
    let mut iterations = 0;
    while grad_norm > settings.grad_tol && iterations < settings.max_iters {
        axpy(-settings.eta, &g, &mut w);
        if !crate::vector::all_finite(&w) {
            return Err(numerical!("non-finite iterate after {} iterations", iterations + 1));
        }
        g = local_empirical_gradient(model, &w, shard)?;
        grad_norm = norm(&g);
        iterations += 1;
    }
    Ok(ErmOutcome { w, grad_norm, iterations })
}

/// Squared loss `½(y − xᵀw)²` on data `y = xᵀw* + ξ` with identity feature
/// covariance and noise variance `σ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRegression {
    pub w_star: Vec<f64>,
    pub sigma: f64,
    /// Per-coordinate Lipschitz constants of the partial derivatives are
    /// `|x_k| ‖x‖`; for `±1` features this stacks to `L̂ = d`.
    pub l_hat: f64,
}

impl LinearRegression {
    pub fn new(w_star: Vec<f64>, sigma: f64) -> Self {
        let d = w_star.len() as f64;
        Self { w_star, sigma, l_hat: d }
    }
}

impl LossModel for LinearRegression {
    fn dim(&self) -> usize {
        self.w_star.len()
    }

    fn sample_value(&self, w: &[f64], point: &Point) -> f64 {
        let r = point.y - dot(&point.x, w);
        0.5 * r * r
    }

    fn add_sample_gradient(&self, w: &[f64], point: &Point, scale: f64, out: &mut [f64]) {
        let r = dot(&point.x, w) - point.y;
        axpy(scale * r, &point.x, out);
    }

    fn smoothness(&self) -> SmoothnessProfile {
        SmoothnessProfile { l_f: 1.0, lambda_f: 1.0, l_hat: self.l_hat, gradient_bound: None }
    }

    fn population_optimum(&self) -> Option<&[f64]> {
        Some(&self.w_star)
    }

    fn population_gradient(&self, w: &[f64]) -> Option<Vec<f64>> {
        Some(linreg_population_gradient(w, &self.w_star))
    }

    /// `F(w) = ½‖w − w*‖² + ½σ²`, so the excess risk is `½‖w − w*‖²`.
    fn excess_risk(&self, w: &[f64]) -> Option<f64> {
        let e = sub(w, &self.w_star);
        Some(0.5 * dot(&e, &e))
    }

    fn empirical_quadratic(&self, shard: &[Point]) -> Option<QuadraticForm> {
        let d = self.dim();
        if shard.is_empty() {
            return None;
        }
        let s = 1.0 / shard.len() as f64;
        let mut h = Matrix::zeros(d);
        let mut p = vec![0.0; d];
        let mut c = 0.0;
        for pt in shard {
            h.add_outer(s, &pt.x);
            axpy(-s * pt.y, &pt.x, &mut p);
            c += 0.5 * s * pt.y * pt.y;
        }
        Some(QuadraticForm { h, p, c })
    }

    fn label_space(&self) -> LabelSpace {
        LabelSpace::Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }
}

/// Binary logistic regression, `y ∈ {0, 1}` with `P(y = 1 | x) = σ(xᵀw*)`.
///
/// Population quantities are estimated on a fixed held-out sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Logistic {
    pub w_star: Vec<f64>,
    pub holdout: Vec<Point>,
    smoothness: SmoothnessProfile,
    risk_at_optimum: f64,
}

impl Logistic {
    /// `L_F ≤ λ_max(E xxᵀ)/4`, with the second moment estimated on `holdout`.
    pub fn new(w_star: Vec<f64>, holdout: Vec<Point>) -> Result<Self> {
        let d = w_star.len();
        if holdout.is_empty() {
            return Err(invalid!("logistic model needs a nonempty held-out set"));
        }
        if holdout.iter().any(|p| p.x.len() != d) {
            return Err(invalid!("held-out point dimension differs from w* dimension {d}"));
        }
        let mut second = Matrix::zeros(d);
        let s = 1.0 / holdout.len() as f64;
        let mut max_sq = 0.0f64;
        for p in &holdout {
            second.add_outer(s, &p.x);
            max_sq = max_sq.max(dot(&p.x, &p.x));
        }
        let l_f = largest_eigenvalue(&second) / 4.0;
        let smoothness = SmoothnessProfile {
            l_f,
            lambda_f: 0.0,
            // |∂_k f(w) − ∂_k f(w')| ≤ |x_k| ‖x‖ ‖w − w'‖ / 4
            l_hat: max_sq / 4.0,
            gradient_bound: None,
        };
        let mut model = Self { w_star, holdout, smoothness, risk_at_optimum: 0.0 };
        model.risk_at_optimum = local_empirical_risk(&model, &model.w_star, &model.holdout);
        Ok(model)
    }

    /// Fraction of held-out points whose label matches `xᵀw > 0`.
    pub fn accuracy(&self, w: &[f64]) -> f64 {
        let hits = self
            .holdout
            .iter()
            .filter(|p| (dot(&p.x, w) > 0.0) == (p.y > 0.5))
            .count();
        hits as f64 / self.holdout.len() as f64
    }
}

impl LossModel for Logistic {
    fn dim(&self) -> usize {
        self.w_star.len()
    }

    fn sample_value(&self, w: &[f64], point: &Point) -> f64 {
        let z = dot(&point.x, w);
        softplus(z) - point.y * z
    }

    fn add_sample_gradient(&self, w: &[f64], point: &Point, scale: f64, out: &mut [f64]) {
        let r = sigmoid(dot(&point.x, w)) - point.y;
        axpy(scale * r, &point.x, out);
    }

    fn smoothness(&self) -> SmoothnessProfile {
        self.smoothness
    }

    fn population_optimum(&self) -> Option<&[f64]> {
        Some(&self.w_star)
    }

    fn population_gradient(&self, w: &[f64]) -> Option<Vec<f64>> {
        local_empirical_gradient(self, w, &self.holdout).ok()
    }

    fn excess_risk(&self, w: &[f64]) -> Option<f64> {
        Some(local_empirical_risk(self, w, &self.holdout) - self.risk_at_optimum)
    }

    fn label_space(&self) -> LabelSpace {
        LabelSpace::Classes { max_label: 1 }
    }
}

/// Power iteration on a symmetric positive semidefinite matrix.
fn largest_eigenvalue(a: &Matrix) -> f64 {
    let d = a.dim();
    let mut v: Vec<f64> = (0..d).map(|i| 1.0 + i as f64 * 1e-3).collect();
    let mut lambda = 0.0;
    for _ in 0..500 {
        let av = a.mul_vec(&v);
        let n = norm(&av);
        if n == 0.0 {
            return 0.0;
        }
        let next = dot(&v, &av) / dot(&v, &v);
        v = av.iter().map(|x| x / n).collect();
        if libm::fabs(next - lambda) <= 1e-12 * next {
            return next;
        }
        lambda = next;
    }
    lambda
}
