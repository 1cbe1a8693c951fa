use core::f64::consts::{PI, SQRT_2};

use crate::error::{invalid, Result};

// Rational approximation coefficients (Acklam), relative error ~1.15e-9 before refinement.
const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];
const P_LOW: f64 = 0.02425;

/// Initial guess for the lower half, `0 < p <= 1/2`.
fn rational_lower(p: f64) -> f64 {
    if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// `Φ⁻¹(p)`: rational approximation followed by one Halley step against
/// `erfc`, giving absolute error well below `1e-8` on `(0, 1)`.
pub fn inverse_normal_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid!("probability {p} outside (0, 1)"));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // 1 - p is exact for p in (1/2, 1), and the lower tail keeps erfc accurate
    let (q, sign) = if p > 0.5 { (1.0 - p, -1.0) } else { (p, 1.0) };
    let mut x = rational_lower(q);
    let e = normal_cdf(x) - q;
    let u = e * libm::sqrt(2.0 * PI) * libm::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    Ok(sign * x)
}

/// `C_ε = √(2π) exp(½ (Φ⁻¹(1 − ε))²)` for `ε ∈ (0, 1/2)`.
pub fn c_epsilon(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(invalid!("margin epsilon {epsilon} outside (0, 1/2)"));
    }
    let z = inverse_normal_cdf(1.0 - epsilon)?;
    Ok(libm::sqrt(2.0 * PI) * libm::exp(0.5 * z * z))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bisection on the CDF; independent of the rational approximation.
    fn bisect_inverse(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0f64, 40.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if normal_cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn known_values() {
        assert_eq!(inverse_normal_cdf(0.5).unwrap(), 0.0);
        // reference values from a 50-digit erf inversion
        assert!((inverse_normal_cdf(0.8333333).unwrap() - 0.967_421_432_688_830_5).abs() < 1e-8);
        assert!((inverse_normal_cdf(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-8);
        assert!((inverse_normal_cdf(1e-10).unwrap() + 6.361_340_902_404_056).abs() < 1e-8);
    }

    #[test]
    fn matches_bisection_oracle_across_range() {
        let mut p = 1e-12;
        while p < 1.0 - 1e-12 {
            let got = inverse_normal_cdf(p).unwrap();
            let want = bisect_inverse(p);
            assert!((got - want).abs() < 1e-8, "p={p}: {got} vs {want}");
            p = if p < 0.01 { p * 3.0 } else { p + 0.00731 };
        }
    }

    #[test]
    fn rejects_out_of_range() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(inverse_normal_cdf(p).is_err());
        }
        assert!(c_epsilon(0.0).is_err());
        assert!(c_epsilon(0.5).is_err());
    }

    #[test]
    fn c_epsilon_values() {
        let c = c_epsilon(1.0 / 6.0).unwrap();
        assert!((3.99..=4.02).contains(&c), "{c}");
        assert!((c_epsilon(0.1).unwrap() - 5.698).abs() < 1e-3);
        let limit = c_epsilon(0.4999999).unwrap();
        assert!((limit - (2.0 * PI).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn c_epsilon_decreasing() {
        let mut prev = f64::INFINITY;
        for i in 1..200 {
            let c = c_epsilon(i as f64 / 400.0).unwrap();
            assert!(c < prev && c >= (2.0 * PI).sqrt());
            prev = c;
        }
    }
}
