//! Built-in verification suites. Every check reports what it measured,
//! the threshold it was held to and whether it passed.

use std::fmt;
use std::str::FromStr;

use crate::error::{config_err, HarnessError, Result};

pub mod aggregation;
pub mod convergence;
pub mod data;
pub mod statistics;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub threshold: String,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: f64, threshold: impl Into<String>, pass: bool) -> Self {
        Self { name: name.into(), measured, threshold: threshold.into(), pass }
    }

    /// Passes when `measured <= limit`.
    pub fn at_most(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self::new(name, measured, format!("<= {limit}"), measured <= limit)
    }

    /// Passes when `measured` lies in `[lo, hi]`.
    pub fn within(name: impl Into<String>, measured: f64, lo: f64, hi: f64) -> Self {
        Self::new(name, measured, format!("in [{lo}, {hi}]"), (lo..=hi).contains(&measured))
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{status}  {}: measured {} (required {})", self.name, self.measured, self.threshold)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Aggregation,
    Statistics,
    Data,
    Convergence,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Aggregation, Suite::Statistics, Suite::Data, Suite::Convergence];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Aggregation => "aggregation",
            Suite::Statistics => "statistics",
            Suite::Data => "data",
            Suite::Convergence => "convergence",
        }
    }
}

impl FromStr for Suite {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| config_err!("unknown suite {s:?}; expected aggregation, statistics, data or convergence"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "[{}] {c}", self.suite.name())?;
        }
        Ok(())
    }
}

pub fn verify_suite(name: &str) -> Result<SuiteReport> {
    let suite: Suite = name.parse()?;
    run_suite(suite)
}

pub fn run_suite(suite: Suite) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Aggregation => {
            let mut c = aggregation::oracle_equivalence(
                aggregation::library_median,
                aggregation::library_trimmed_mean,
                1000,
                1,
            )?;
            c.push(aggregation::median_breakdown(1000, 2)?);
            c
        }
        Suite::Statistics => {
            let mut c = statistics::c_epsilon_checks()?;
            c.push(statistics::trimmed_mean_deviation(10_000, 3)?);
            c.extend(statistics::median_of_means_concentration(2000, 4)?);
            c
        }
        Suite::Data => {
            let mut c = data::gradient_noise_statistics(1_000_000, 5)?;
            c.extend(data::sub_exponential_gradients(1_000_000, 6)?);
            c.extend(data::gradient_finite_differences(100, 7)?);
            c.push(data::shard_partition(8)?);
            c
        }
        Suite::Convergence => {
            let mut c = convergence::robust_convergence()?;
            c.extend(convergence::alpha_scaling()?);
            c.push(convergence::sample_size_scaling()?);
            c.push(convergence::contraction()?);
            c.extend(convergence::one_round()?);
            c.extend(convergence::logistic_label_flip()?);
            c
        }
    };
    Ok(SuiteReport { suite, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!(matches!(verify_suite("everything"), Err(HarnessError::Config(_))));
    }

    #[test]
    fn check_display() {
        let c = Check::at_most("x", 1.5, 2.0);
        assert!(c.pass);
        assert_eq!(c.to_string(), "PASS  x: measured 1.5 (required <= 2)");
        assert!(!Check::within("y", 3.0, 0.0, 1.0).pass);
    }
}
