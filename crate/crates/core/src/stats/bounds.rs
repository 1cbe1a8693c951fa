//! Closed-form error bounds for the median and trimmed-mean aggregators.

use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use super::normal::c_epsilon;
use crate::error::{invalid, Error, Result};

/// Berry–Esseen constant multiplying the skewness term.
pub const BERRY_ESSEEN: f64 = 0.4748;

/// Tail parameters of the per-sample gradient. `None` marks an unknown value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GradientTailProfile {
    /// `V` with `Var(∇f(w; z)) ≤ V²`.
    pub std_bound: Option<f64>,
    /// `S`, bound on the coordinate-wise absolute skewness.
    pub skewness_bound: Option<f64>,
    /// `v`, sub-exponential parameter of each partial derivative.
    pub sub_exponential: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub alpha: f64,
    pub beta: Option<f64>,
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub epsilon: f64,
    /// Stacked coordinate Lipschitz constant `L̂`.
    pub l_hat: f64,
    /// Diameter `D` of the parameter space.
    pub diameter: f64,
    pub tail: GradientTailProfile,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.alpha) {
            return Err(invalid!("alpha {} outside [0, 1/2)", self.alpha));
        }
        if self.n == 0 || self.m == 0 || self.d == 0 {
            return Err(invalid!("n, m and d must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(invalid!("epsilon {} outside (0, 1/2)", self.epsilon));
        }
        if !(self.l_hat > 0.0 && self.l_hat.is_finite()) {
            return Err(invalid!("L_hat must be positive"));
        }
        if !(self.diameter > 0.0 && self.diameter.is_finite()) {
            return Err(invalid!("diameter must be positive"));
        }
        let tail = [self.tail.std_bound, self.tail.skewness_bound, self.tail.sub_exponential];
        if tail.iter().flatten().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(invalid!("tail parameters must be finite and nonnegative"));
        }
        Ok(())
    }

    fn nm(&self) -> f64 {
        self.n as f64 * self.m as f64
    }

    /// `log(1 + n m L̂ D)`.
    fn log_cover(&self) -> f64 {
        libm::log1p(self.nm() * self.l_hat * self.diameter)
    }

    fn skewness(&self) -> Result<f64> {
        self.tail
            .skewness_bound
            .ok_or_else(|| Error::Unsupported("skewness bound S is unknown".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// Error of the coordinate-wise median gradient.
    Median,
    /// Leading term of the error of the coordinate-wise trimmed-mean gradient.
    TrimmedMean,
}

/// An evaluated bound with its additive components exposed.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoreticalBound {
    pub kind: BoundKind,
    pub value: f64,
    pub components: Vec<(&'static str, f64)>,
    pub inputs: BoundInputs,
    /// Margin of the feasibility condition; negative means the premise of
    /// the median guarantee does not hold for these inputs.
    pub feasibility_margin: Option<f64>,
    /// The trimmed-mean bound drops an `Õ(β/n + 1/(nm))` addend.
    pub higher_order_omitted: bool,
}

impl TheoreticalBound {
    fn from_components(
        kind: BoundKind,
        components: Vec<(&'static str, f64)>,
        inputs: BoundInputs,
    ) -> Self {
        let value = components.iter().map(|(_, v)| v).sum();
        Self {
            kind,
            value,
            components,
            inputs,
            feasibility_margin: None,
            higher_order_omitted: false,
        }
    }

    pub fn component(&self, name: &str) -> Option<f64> {
        self.components.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

/// `(1/2 − ε) − [α + √(d log(1 + nmL̂D) / (m(1 − α))) + 0.4748 S/√n]`.
///
/// Nonnegative iff the median guarantee's feasibility condition holds.
pub fn feasibility_margin(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let s = inputs.skewness()?;
    let cover = libm::sqrt(inputs.d as f64 * inputs.log_cover() / (inputs.m as f64 * (1.0 - inputs.alpha)));
    let skew = BERRY_ESSEEN * s / libm::sqrt(inputs.n as f64);
    Ok((0.5 - inputs.epsilon) - (inputs.alpha + cover + skew))
}

/// Explicit bound `Δ` on `‖g(w) − ∇F(w)‖` for the coordinate-wise median:
///
/// `2√2/(nm) + √2 C_ε V/√n · (α + √(d log(1+nmL̂D)/(m(1−α))) + 0.4748 S/√n)`.
///
/// A violated feasibility condition is recorded on the result, not raised.
pub fn median_bound_delta(inputs: &BoundInputs) -> Result<TheoreticalBound> {
    inputs.validate()?;
    let v = inputs
        .tail
        .std_bound
        .ok_or_else(|| Error::Unsupported("gradient std bound V is unknown".into()))?;
    let s = inputs.skewness()?;
    let n = inputs.n as f64;
    let prefactor = SQRT_2 * c_epsilon(inputs.epsilon)? * v / libm::sqrt(n);
    let cover = libm::sqrt(inputs.d as f64 * inputs.log_cover() / (inputs.m as f64 * (1.0 - inputs.alpha)));
    let components = alloc::vec![
        ("resolution", 2.0 * SQRT_2 / inputs.nm()),
        ("alpha", prefactor * inputs.alpha),
        ("sampling", prefactor * cover),
        ("skewness", prefactor * BERRY_ESSEEN * s / libm::sqrt(n)),
    ];
    let mut bound = TheoreticalBound::from_components(BoundKind::Median, components, *inputs);
    bound.feasibility_margin = Some(feasibility_margin(inputs)?);
    Ok(bound)
}

/// Leading term of `Δ'` for the coordinate-wise trimmed mean:
///
/// `(v/ε)(3√2 β d/√n + 2d/√(nm)) √(log(1+nmL̂D) + log(m)/d)`.
pub fn trimmed_bound_delta(inputs: &BoundInputs) -> Result<TheoreticalBound> {
    inputs.validate()?;
    let v = inputs
        .tail
        .sub_exponential
        .ok_or_else(|| Error::Unsupported("sub-exponential parameter v is unknown".into()))?;
    let beta = inputs
        .beta
        .ok_or_else(|| invalid!("trimmed-mean bound needs a trim fraction beta"))?;
    if !(0.0..0.5).contains(&beta) {
        return Err(invalid!("beta {beta} outside [0, 1/2)"));
    }
    if beta < inputs.alpha {
        return Err(invalid!("beta {beta} is below the Byzantine fraction alpha {}", inputs.alpha));
    }
    let d = inputs.d as f64;
    let n = inputs.n as f64;
    let log_term = libm::sqrt(inputs.log_cover() + libm::log(inputs.m as f64) / d);
    let pre = v / inputs.epsilon * log_term;
    let components = alloc::vec![
        ("beta", pre * 3.0 * SQRT_2 * beta * d / libm::sqrt(n)),
        ("sampling", pre * 2.0 * d / libm::sqrt(inputs.nm())),
    ];
    let mut bound = TheoreticalBound::from_components(BoundKind::TrimmedMean, components, *inputs);
    bound.higher_order_omitted = true;
    Ok(bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> BoundInputs {
        BoundInputs {
            alpha: 0.1,
            beta: Some(0.1),
            n: 400,
            m: 20,
            d: 5,
            epsilon: 1.0 / 6.0,
            l_hat: 10.0,
            diameter: 1.0,
            tail: GradientTailProfile {
                std_bound: Some(3.0),
                skewness_bound: Some(1.6),
                sub_exponential: Some(2.0),
            },
        }
    }

    // Values from a 40-digit evaluation of the same closed forms (mpmath).
    #[test]
    fn median_delta_reference() {
        let b = median_bound_delta(&base()).unwrap();
        assert!((b.value - 1.621_053_801_218_133_6).abs() < 1e-12, "{}", b.value);
        let sum: f64 = b.components.iter().map(|c| c.1).sum();
        assert_eq!(sum, b.value);
    }

    #[test]
    fn trimmed_delta_reference() {
        let b = trimmed_bound_delta(&base()).unwrap();
        assert!((b.value - 9.014_654_760_403_622).abs() < 1e-12, "{}", b.value);
        assert!(b.higher_order_omitted);
    }

    #[test]
    fn median_degenerate_variance() {
        let mut i = base();
        i.alpha = 0.0;
        i.tail.std_bound = Some(0.0);
        let b = median_bound_delta(&i).unwrap();
        assert!((b.value - 2.0 * SQRT_2 / 8000.0).abs() < 1e-18);
    }

    #[test]
    fn median_alpha_component_is_linear() {
        let mut i = base();
        let a = median_bound_delta(&i).unwrap().value;
        i.alpha = 0.2;
        let b = median_bound_delta(&i).unwrap().value;
        let c = c_epsilon(1.0 / 6.0).unwrap();
        let want = SQRT_2 * c * 3.0 * 0.1 / 20.0;
        // the sampling term also depends on alpha through 1/(1-alpha)
        let cover = |alpha: f64| {
            SQRT_2 * c * 3.0 / 20.0 * (5.0 * (8000.0f64 * 10.0).ln_1p() / (20.0 * (1.0 - alpha))).sqrt()
        };
        let got = b - a - (cover(0.2) - cover(0.1));
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn trimmed_zero_beta_and_linearity() {
        let mut i = base();
        i.alpha = 0.0;
        i.beta = Some(0.0);
        let b = trimmed_bound_delta(&i).unwrap();
        let want = 2.0 / (1.0 / 6.0) * 2.0 * 5.0 / 8000.0f64.sqrt()
            * ((8000.0f64 * 10.0).ln_1p() + 20.0f64.ln() / 5.0).sqrt();
        assert!((b.value - want).abs() < 1e-12);
        i.tail.sub_exponential = Some(6.0);
        let tripled = trimmed_bound_delta(&i).unwrap().value;
        assert!((tripled - 3.0 * b.value).abs() < 1e-12);
    }

    #[test]
    fn missing_parameters_and_preconditions() {
        let mut i = base();
        i.tail.skewness_bound = None;
        assert!(matches!(median_bound_delta(&i), Err(Error::Unsupported(_))));
        assert!(matches!(feasibility_margin(&i), Err(Error::Unsupported(_))));
        let mut i = base();
        i.beta = Some(0.05);
        assert!(matches!(trimmed_bound_delta(&i), Err(Error::InvalidArgument(_))));
        let mut i = base();
        i.tail.sub_exponential = None;
        assert!(matches!(trimmed_bound_delta(&i), Err(Error::Unsupported(_))));
    }

    #[test]
    fn feasibility_examples() {
        let i = BoundInputs {
            alpha: 0.0,
            beta: None,
            n: 1_000_000,
            m: 1_000_000,
            d: 1,
            epsilon: 1.0 / 6.0,
            l_hat: 1.0,
            diameter: 1.0,
            tail: GradientTailProfile { skewness_bound: Some(0.0), ..Default::default() },
        };
        let margin = feasibility_margin(&i).unwrap();
        let want = 1.0 / 3.0 - (1e12f64.ln_1p() / 1e6).sqrt();
        assert!((margin - want).abs() < 1e-14);
        assert!(margin > 0.32 && margin < 1.0 / 3.0);

        let mut prev = f64::INFINITY;
        for k in 0..40 {
            let mut j = i;
            j.alpha = k as f64 * 0.01;
            let m = feasibility_margin(&j).unwrap();
            assert!(m < prev);
            prev = m;
        }
    }

    #[test]
    fn monotonicity() {
        let value = |f: &dyn Fn(&mut BoundInputs)| {
            let mut i = base();
            f(&mut i);
            (median_bound_delta(&i).unwrap().value, trimmed_bound_delta(&i).unwrap().value)
        };
        let (m0, t0) = value(&|_| {});
        let (m1, _) = value(&|i| i.alpha = 0.05);
        assert!(m1 <= m0);
        let (m2, t2) = value(&|i| i.d = 10);
        assert!(m2 >= m0 && t2 >= t0);
        let (m3, t3) = value(&|i| i.n = 800);
        assert!(m3 <= m0 && t3 <= t0);
        let (m4, t4) = value(&|i| i.m = 40);
        assert!(m4 <= m0 && t4 <= t0);
        let (_, t5) = value(&|i| i.epsilon = 0.25);
        assert!(t5 <= t0);
        let (_, t6) = value(&|i| i.beta = Some(0.2));
        assert!(t6 >= t0);
        let (m7, _) = value(&|i| i.tail.skewness_bound = Some(5.0));
        assert!(m7 >= m0);
    }
}
