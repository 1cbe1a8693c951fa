//! Byzantine workers: who they are and what they send.
//!
//! Data-level attacks rewrite a faulty worker's labels once, before training,
//! after which the worker computes honestly on the corrupted shard.
//! Message-level attacks replace the worker's message every round. Faulty
//! workers share one seed namespace, so they may collude.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{invalid, Result};
use crate::losses::{LabelSpace, Point};
use crate::rng::{domain, keyed_rng, standard_normal};

#[derive(Debug, Clone, PartialEq)]
pub enum AttackSpec {
    /// Classification `y → max_label − y`; regression `y → −y`.
    LabelFlip,
    /// Labels redrawn uniformly from the label space.
    RandomLabels,
    /// Send `−c ·` the honest message, `c > 0`.
    SignFlip(f64),
    /// Send a fixed vector.
    ConstantVector(Vec<f64>),
    /// Send `scale · z` with `z` standard normal.
    GaussianMessage(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackLevel {
    Data,
    Message,
}

impl AttackSpec {
    pub fn level(&self) -> AttackLevel {
        match self {
            AttackSpec::LabelFlip | AttackSpec::RandomLabels => AttackLevel::Data,
            _ => AttackLevel::Message,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            AttackSpec::SignFlip(c) if !(*c > 0.0 && c.is_finite()) => {
                Err(invalid!("sign-flip scale must be positive and finite, got {c}"))
            }
            AttackSpec::ConstantVector(v) if v.len() != d => {
                Err(invalid!("constant attack vector has dimension {}, model has {d}", v.len()))
            }
            AttackSpec::ConstantVector(v) if !v.iter().all(|x| x.is_finite()) => {
                Err(invalid!("constant attack vector must be finite"))
            }
            AttackSpec::GaussianMessage(s) if !s.is_finite() => {
                Err(invalid!("gaussian attack scale must be finite"))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AttackSpec::LabelFlip => "label_flip",
            AttackSpec::RandomLabels => "random_labels",
            AttackSpec::SignFlip(_) => "sign_flip",
            AttackSpec::ConstantVector(_) => "constant_vector",
            AttackSpec::GaussianMessage(_) => "gaussian_message",
        }
    }
}

/// The faulty set `B ⊂ [m]` with `|B| = ⌊αm⌋`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ByzantineAssignment {
    m: usize,
    byzantine: Vec<usize>,
}

impl ByzantineAssignment {
    /// An explicit faulty set; indices are sorted and deduplicated.
    pub fn from_indices(m: usize, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(i) = indices.iter().find(|&&i| i >= m) {
            return Err(invalid!("Byzantine index {i} out of range for {m} workers"));
        }
        Ok(Self { m, byzantine: indices })
    }

    pub fn honest(m: usize) -> Self {
        Self { m, byzantine: Vec::new() }
    }

    pub fn workers(&self) -> usize {
        self.m
    }

    pub fn byzantine(&self) -> &[usize] {
        &self.byzantine
    }

    pub fn count(&self) -> usize {
        self.byzantine.len()
    }

    pub fn is_byzantine(&self, worker: usize) -> bool {
        self.byzantine.binary_search(&worker).is_ok()
    }

    pub fn alpha_realized(&self) -> f64 {
        self.byzantine.len() as f64 / self.m as f64
    }

    /// Faulty workers are not a strict minority, so median-type rules lose
    /// their guarantee.
    pub fn breaks_median(&self) -> bool {
        2 * self.byzantine.len() >= self.m
    }
}

/// `⌊αm⌋`, tolerant of `α m` landing a rounding error below an integer.
pub fn byzantine_count(m: usize, alpha: f64) -> usize {
    libm::floor(alpha * m as f64 + 1e-9) as usize
}

/// Uniformly random `⌊αm⌋`-subset of the workers, deterministic in `(m, α, seed)`.
pub fn select_byzantine_set(m: usize, alpha: f64, seed: u64) -> Result<ByzantineAssignment> {
    if m == 0 {
        return Err(invalid!("need at least one worker"));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid!("Byzantine fraction {alpha} outside [0, 1)"));
    }
    let q = byzantine_count(m, alpha).min(m);
    let mut rng = keyed_rng(seed, domain::BYZANTINE_SET, m as u64, q as u64);
    let chosen = rand::seq::index::sample(&mut rng, m, q).into_vec();
    ByzantineAssignment::from_indices(m, chosen)
}

/// Applies a data-level attack to a faulty worker's shard. Features are
/// never touched.
pub fn corrupt_dataset(
    shard: &[Point],
    attack: &AttackSpec,
    labels: LabelSpace,
    seed: u64,
    worker: usize,
) -> Result<Vec<Point>> {
    if attack.level() != AttackLevel::Data {
        return Err(invalid!("{} is not a data-level attack", attack.name()));
    }
    let mut rng = keyed_rng(seed, domain::LABEL_CORRUPTION, worker as u64, 0);
    shard
        .iter()
        .map(|p| {
            let y = match (attack, labels) {
                (AttackSpec::LabelFlip, LabelSpace::Classes { max_label }) => max_label as f64 - p.y,
                (AttackSpec::LabelFlip, LabelSpace::Interval { .. }) => -p.y,
                (AttackSpec::RandomLabels, LabelSpace::Classes { max_label }) => {
                    rng.random_range(0..=max_label) as f64
                }
                (AttackSpec::RandomLabels, LabelSpace::Interval { lo, hi }) => {
                    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                        return Err(invalid!("random labels need a finite label interval"));
                    }
                    lo + (hi - lo) * rng.random::<f64>()
                }
                _ => unreachable!("level checked above"),
            };
            Ok(Point { x: p.x.clone(), y })
        })
        .collect()
}

/// The message a faulty worker sends in `round` instead of `true_message`.
pub fn forge_message(
    true_message: &[f64],
    attack: &AttackSpec,
    round: usize,
    worker: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let d = true_message.len();
    attack.validate(d)?;
    let out: Vec<f64> = match attack {
        AttackSpec::SignFlip(c) => true_message.iter().map(|g| -c * g).collect(),
        AttackSpec::ConstantVector(v) => v.clone(),
        AttackSpec::GaussianMessage(scale) => {
            let mut rng = keyed_rng(seed, domain::FORGED_MESSAGE, worker as u64, round as u64);
            (0..d).map(|_| scale * standard_normal(&mut rng)).collect()
        }
        AttackSpec::LabelFlip | AttackSpec::RandomLabels => {
            return Err(invalid!("{} is not a message-level attack", attack.name()))
        }
    };
    if !out.iter().all(|x| x.is_finite()) {
        return Err(invalid!("forged message from worker {worker} in round {round} is not finite"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn selection() {
        assert_eq!(select_byzantine_set(10, 0.0, 1).unwrap().count(), 0);
        let a = select_byzantine_set(20, 0.2, 5).unwrap();
        assert_eq!(a.count(), 4);
        assert_eq!(a, select_byzantine_set(20, 0.2, 5).unwrap());
        assert!((a.alpha_realized() - 0.2).abs() < 1e-15);
        assert!(!a.breaks_median());
        let all = select_byzantine_set(4, 0.99, 5).unwrap();
        assert_eq!(all.count(), 3);
        assert!(all.breaks_median());
        assert!(select_byzantine_set(4, 1.0, 5).is_err());
        // floor(0.3 * 20) must be 6 despite rounding
        assert_eq!(select_byzantine_set(20, 0.3, 1).unwrap().count(), 6);
        assert_eq!(byzantine_count(21, 2.0 / 21.0), 2);
    }

    #[test]
    fn label_corruption() {
        let shard = vec![Point::new(vec![1.0, 2.0], 0.0), Point::new(vec![3.0, 4.0], 1.0)];
        let flipped = corrupt_dataset(&shard, &AttackSpec::LabelFlip, LabelSpace::Classes { max_label: 1 }, 0, 0).unwrap();
        assert_eq!(flipped[0].y, 1.0);
        assert_eq!(flipped[1].y, 0.0);
        assert_eq!(flipped[1].x, shard[1].x);

        let reg = vec![Point::new(vec![1.0], 2.5)];
        let neg = corrupt_dataset(&reg, &AttackSpec::LabelFlip, LabelSpace::Interval { lo: -1.0, hi: 1.0 }, 0, 0).unwrap();
        assert_eq!(neg[0].y, -2.5);

        assert!(corrupt_dataset(&reg, &AttackSpec::SignFlip(1.0), LabelSpace::Classes { max_label: 1 }, 0, 0).is_err());
        let unbounded = LabelSpace::Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };
        assert!(corrupt_dataset(&reg, &AttackSpec::RandomLabels, unbounded, 0, 0).is_err());
    }

    /// Chi-square statistic of 10-class random labels stays below the
    /// 99.9% quantile of chi-square(9) (27.88).
    #[test]
    fn random_labels_are_uniform() {
        let shard: Vec<Point> = (0..50_000).map(|_| Point::new(vec![0.0], 3.0)).collect();
        let out = corrupt_dataset(&shard, &AttackSpec::RandomLabels, LabelSpace::Classes { max_label: 9 }, 17, 2).unwrap();
        let mut counts = [0usize; 10];
        for p in &out {
            counts[p.y as usize] += 1;
        }
        let expected = 5000.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 27.88, "{chi2} {counts:?}");
    }

    #[test]
    fn forging() {
        let g = [1.0, -2.0];
        assert_eq!(forge_message(&g, &AttackSpec::SignFlip(1.0), 0, 0, 0).unwrap(), vec![-1.0, 2.0]);
        assert_eq!(forge_message(&g, &AttackSpec::ConstantVector(vec![0.0, 0.0]), 3, 1, 0).unwrap(), vec![0.0, 0.0]);
        let a = forge_message(&g, &AttackSpec::GaussianMessage(10.0), 4, 2, 99).unwrap();
        assert_eq!(a, forge_message(&g, &AttackSpec::GaussianMessage(10.0), 4, 2, 99).unwrap());
        assert_ne!(a, forge_message(&g, &AttackSpec::GaussianMessage(10.0), 5, 2, 99).unwrap());
        assert!(forge_message(&g, &AttackSpec::SignFlip(0.0), 0, 0, 0).is_err());
        assert!(forge_message(&g, &AttackSpec::ConstantVector(vec![1.0]), 0, 0, 0).is_err());
        assert!(forge_message(&[1e300, 0.0], &AttackSpec::SignFlip(1e10), 0, 0, 0).is_err());
        assert!(forge_message(&g, &AttackSpec::LabelFlip, 0, 0, 0).is_err());
    }
}
