//! Experiment configuration files (TOML).
//!
//! ```toml
//! scenario = "signflip"
//! seeds = [1, 2, 3]
//! alpha = 0.2
//!
//! [data]
//! model = "linear"          # or "logistic"
//! features = "rademacher"   # or "gaussian"
//! n = 200
//! m = 20
//! d = 20                    # w_star defaults to the all-ones vector
//! sigma = 1.0
//!
//! [attack]
//! kind = "sign_flip"
//! scale = 10.0
//!
//! [aggregator]
//! rule = "trimmed_mean"
//! beta = 0.2
//!
//! [gd]
//! rounds = 50
//! eta = 1.0
//!
//! [sweep]
//! alpha = [0.05, 0.1, 0.2]
//! ```
//!
//! Unknown keys are rejected.

use std::path::Path;

use robustgd_core::adversary::AttackSpec;
use robustgd_core::aggregation::AggregationRule;
use robustgd_core::data::{FeatureLaw, LabelModel};
use serde::Deserialize;

use crate::error::{config_err, HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub alpha: f64,
    pub data: DataConfig,
    #[serde(default)]
    pub attack: AttackConfig,
    pub aggregator: AggregatorConfig,
    pub gd: Option<GdConfig>,
    pub one_round: Option<OneRoundConfig>,
    #[serde(default)]
    pub bound: BoundConfig,
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Rademacher,
    Gaussian,
}

fn default_sigma() -> f64 {
    1.0
}

fn default_holdout() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub model: ModelKind,
    pub features: FeatureKind,
    pub n: usize,
    pub m: usize,
    pub d: Option<usize>,
    pub w_star: Option<Vec<f64>>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Held-out points for logistic population metrics.
    #[serde(default = "default_holdout")]
    pub holdout: usize,
}

impl DataConfig {
    pub fn dim(&self) -> Result<usize> {
        match (&self.w_star, self.d) {
            (Some(w), Some(d)) if w.len() != d => {
                Err(config_err!("data.d = {d} but data.w_star has {} entries", w.len()))
            }
            (Some(w), _) => Ok(w.len()),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(config_err!("data needs d or w_star")),
        }
    }

    pub fn w_star(&self) -> Result<Vec<f64>> {
        let d = self.dim()?;
        Ok(self.w_star.clone().unwrap_or_else(|| vec![1.0; d]))
    }

    pub fn feature_law(&self) -> FeatureLaw {
        match self.features {
            FeatureKind::Rademacher => FeatureLaw::Rademacher,
            FeatureKind::Gaussian => FeatureLaw::StandardGaussian,
        }
    }

    pub fn label_model(&self) -> LabelModel {
        match self.model {
            ModelKind::Linear => LabelModel::Linear,
            ModelKind::Logistic => LabelModel::Logistic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackConfig {
    /// Every worker is honest regardless of `alpha`.
    #[default]
    None,
    LabelFlip,
    RandomLabels,
    SignFlip { scale: f64 },
    /// Either an explicit vector or one value repeated in every coordinate.
    ConstantVector { values: Option<Vec<f64>>, value: Option<f64> },
    GaussianMessage { scale: f64 },
}

impl AttackConfig {
    pub fn to_spec(&self, d: usize) -> Result<Option<AttackSpec>> {
        let spec = match self {
            AttackConfig::None => return Ok(None),
            AttackConfig::LabelFlip => AttackSpec::LabelFlip,
            AttackConfig::RandomLabels => AttackSpec::RandomLabels,
            AttackConfig::SignFlip { scale } => AttackSpec::SignFlip(*scale),
            AttackConfig::GaussianMessage { scale } => AttackSpec::GaussianMessage(*scale),
            AttackConfig::ConstantVector { values, value } => match (values, value) {
                (Some(v), None) => AttackSpec::ConstantVector(v.clone()),
                (None, Some(c)) => AttackSpec::ConstantVector(vec![*c; d]),
                _ => return Err(config_err!("constant_vector attack needs exactly one of values, value")),
            },
        };
        spec.validate(d)?;
        Ok(Some(spec))
    }

    pub fn name(&self) -> &'static str {
        match self {
            AttackConfig::None => "none",
            AttackConfig::LabelFlip => "label_flip",
            AttackConfig::RandomLabels => "random_labels",
            AttackConfig::SignFlip { .. } => "sign_flip",
            AttackConfig::ConstantVector { .. } => "constant_vector",
            AttackConfig::GaussianMessage { .. } => "gaussian_message",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum AggregatorConfig {
    Mean,
    Median,
    TrimmedMean { beta: f64 },
}

impl AggregatorConfig {
    pub fn rule(&self) -> AggregationRule {
        match *self {
            AggregatorConfig::Mean => AggregationRule::Mean,
            AggregatorConfig::Median => AggregationRule::CoordinateMedian,
            AggregatorConfig::TrimmedMean { beta } => AggregationRule::CoordinateTrimmedMean(beta),
        }
    }
}

impl From<AggregationRule> for AggregatorConfig {
    fn from(rule: AggregationRule) -> Self {
        match rule {
            AggregationRule::Mean => AggregatorConfig::Mean,
            AggregationRule::CoordinateMedian => AggregatorConfig::Median,
            AggregationRule::CoordinateTrimmedMean(beta) => AggregatorConfig::TrimmedMean { beta },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GdConfig {
    pub rounds: usize,
    /// Defaults to `1/L_F`.
    pub eta: Option<f64>,
    /// Defaults to `10‖w*‖`.
    pub domain_radius: Option<f64>,
    pub minibatch_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneRoundConfig {
    /// Settings of the local gradient-descent ERM solver, used when the
    /// loss has no closed-form minimizer.
    pub eta: Option<f64>,
    pub max_iters: Option<usize>,
    pub grad_tol: Option<f64>,
}

fn default_epsilon() -> f64 {
    1.0 / 6.0
}

/// Inputs of the bound column. Tail parameters left out are derived from
/// the data model where a closed form is known.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub std_bound: Option<f64>,
    pub skewness_bound: Option<f64>,
    pub sub_exponential: Option<f64>,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self { epsilon: default_epsilon(), std_bound: None, skewness_bound: None, sub_exponential: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub alpha: Option<Vec<f64>>,
    /// `[n, m]` pairs.
    pub sample_sizes: Option<Vec<(usize, usize)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    Alpha(Vec<f64>),
    SampleSize(Vec<(usize, usize)>),
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| config_err!("{}", e.message()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(msg) => config_err!("{}: {msg}", path.display()),
            other => other,
        })
    }

    pub fn dim(&self) -> Result<usize> {
        self.data.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenario.is_empty() {
            return Err(config_err!("scenario name is empty"));
        }
        if self.seeds.is_empty() {
            return Err(config_err!("seeds must be nonempty"));
        }
        check_alpha(self.alpha)?;
        let d = self.dim()?;
        let data = &self.data;
        if data.n == 0 || data.m == 0 {
            return Err(config_err!("data.n and data.m must be at least 1"));
        }
        if !(data.sigma >= 0.0 && data.sigma.is_finite()) {
            return Err(config_err!("data.sigma must be finite and nonnegative"));
        }
        if data.model == ModelKind::Logistic && data.holdout == 0 {
            return Err(config_err!("logistic data needs a nonempty holdout"));
        }
        if !data.w_star()?.iter().all(|v| v.is_finite()) {
            return Err(config_err!("data.w_star must be finite"));
        }
        self.attack.to_spec(d)?;
        let rule = self.aggregator.rule();
        match (&self.gd, &self.one_round) {
            (Some(gd), None) => {
                if gd.rounds == 0 {
                    return Err(config_err!("gd.rounds must be at least 1"));
                }
                let positive = |v: Option<f64>, name: &str| match v {
                    Some(x) if !(x > 0.0 && x.is_finite()) => Err(config_err!("gd.{name} must be positive")),
                    _ => Ok(()),
                };
                positive(gd.eta, "eta")?;
                positive(gd.domain_radius, "domain_radius")?;
                if let Some(f) = gd.minibatch_fraction {
                    if !(f > 0.0 && f <= 1.0) {
                        return Err(config_err!("gd.minibatch_fraction must lie in (0, 1]"));
                    }
                }
            }
            (None, Some(_)) => {
                if rule != AggregationRule::CoordinateMedian {
                    return Err(config_err!("one-round runs aggregate with the median rule"));
                }
            }
            (Some(_), Some(_)) => return Err(config_err!("give either [gd] or [one_round], not both")),
            (None, None) => return Err(config_err!("missing [gd] or [one_round] section")),
        }
        if !(self.bound.epsilon > 0.0 && self.bound.epsilon < 0.5) {
            return Err(config_err!("bound.epsilon must lie in (0, 1/2)"));
        }
        for m in self.worker_counts() {
            rule.validate(m)?;
        }
        if self.sweep.is_some() {
            match self.sweep_axis()? {
                SweepAxis::Alpha(values) => {
                    for a in values {
                        check_alpha(a)?;
                    }
                }
                SweepAxis::SampleSize(pairs) => {
                    if pairs.iter().any(|&(n, m)| n == 0 || m == 0) {
                        return Err(config_err!("sweep sample sizes must be positive"));
                    }
                }
            }
        }
        Ok(())
    }

    fn worker_counts(&self) -> Vec<usize> {
        let mut ms = vec![self.data.m];
        if let Some(SweepConfig { sample_sizes: Some(p), .. }) = &self.sweep {
            ms.extend(p.iter().map(|&(_, m)| m));
        }
        ms
    }

    pub fn sweep_axis(&self) -> Result<SweepAxis> {
        let sweep = self.sweep.as_ref().ok_or_else(|| config_err!("missing [sweep] section"))?;
        match (&sweep.alpha, &sweep.sample_sizes) {
            (Some(a), None) if !a.is_empty() => Ok(SweepAxis::Alpha(a.clone())),
            (None, Some(p)) if !p.is_empty() => Ok(SweepAxis::SampleSize(p.clone())),
            _ => Err(config_err!("[sweep] needs exactly one nonempty axis: alpha or sample_sizes")),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(config_err!("alpha {alpha} outside [0, 1)"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
scenario = "s"
seeds = [1, 2]
alpha = 0.2

[data]
model = "linear"
features = "rademacher"
n = 50
m = 10
d = 3

[attack]
kind = "sign_flip"
scale = 10.0

[aggregator]
rule = "trimmed_mean"
beta = 0.2

[gd]
rounds = 5
"#;

    #[test]
    fn parses_documented_example() {
        let cfg = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(cfg.seeds, vec![1, 2]);
        assert_eq!(cfg.attack, AttackConfig::SignFlip { scale: 10.0 });
        assert_eq!(cfg.aggregator.rule(), AggregationRule::CoordinateTrimmedMean(0.2));
        assert_eq!(cfg.data.w_star().unwrap(), vec![1.0; 3]);
        assert_eq!(cfg.data.sigma, 1.0);
        assert_eq!(cfg.bound.epsilon, 1.0 / 6.0);
    }

    #[test]
    fn unknown_keys_fail() {
        let text = BASE.replace("rounds = 5", "rounds = 5\nlearning_rate = 1.0");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(HarnessError::Config(_))));
        let text = BASE.replace("scale = 10.0", "scale = 10.0\nfactor = 2");
        assert!(ExperimentConfig::from_toml(&text).is_err());
        let text = BASE.replace("seeds", "colour = 1\nseeds");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn invalid_values_fail() {
        for (from, to) in [
            ("seeds = [1, 2]", "seeds = []"),
            ("alpha = 0.2", "alpha = 1.5"),
            ("beta = 0.2", "beta = 0.5"),
            ("d = 3", "d = 3\nw_star = [1.0, 2.0]"),
            ("rounds = 5", "rounds = 0"),
            ("kind = \"sign_flip\"", "kind = \"teleport\""),
        ] {
            let text = BASE.replace(from, to);
            assert!(ExperimentConfig::from_toml(&text).is_err(), "{to}");
        }
    }

    #[test]
    fn sweep_axis_is_exclusive() {
        let text = format!("{BASE}\n[sweep]\nalpha = [0.0, 0.1]\n");
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.sweep_axis().unwrap(), SweepAxis::Alpha(vec![0.0, 0.1]));
        let text = format!("{BASE}\n[sweep]\nalpha = [0.1]\nsample_sizes = [[10, 5]]\n");
        assert!(ExperimentConfig::from_toml(&text).is_err());
        let text = format!("{BASE}\n[sweep]\nsample_sizes = [[10, 5], [20, 10]]\n");
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.sweep_axis().unwrap(), SweepAxis::SampleSize(vec![(10, 5), (20, 10)]));
    }

    #[test]
    fn constant_vector_forms() {
        let text = BASE.replace("kind = \"sign_flip\"\nscale = 10.0", "kind = \"constant_vector\"\nvalue = 1e6");
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.attack.to_spec(3).unwrap(), Some(AttackSpec::ConstantVector(vec![1e6; 3])));
        let text = BASE.replace("kind = \"sign_flip\"\nscale = 10.0", "kind = \"constant_vector\"\nvalues = [1.0]");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }
}
