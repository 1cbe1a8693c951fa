//! Statistical calculators and verifiers for the robust aggregators.

mod bounds;
mod moments;
mod montecarlo;
mod normal;

pub use bounds::{
    feasibility_margin, median_bound_delta, trimmed_bound_delta, BoundInputs, BoundKind,
    GradientTailProfile, TheoreticalBound, BERRY_ESSEEN,
};
pub use moments::{
    empirical_abs_skewness, empirical_variance, sub_exponential_check, SubExponentialReport,
};
pub use montecarlo::{
    estimate_one_round_sigma, verify_median_of_means, Gaussian, MedianOfMeansReport,
    MedianOfMeansSetup, PointMass, QuadSampler, ScalarDistribution,
};
pub use normal::{c_epsilon, inverse_normal_cdf, normal_cdf};
