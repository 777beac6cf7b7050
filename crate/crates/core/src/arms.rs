//! Arm reward laws, problem instances, and the metered sampling oracle.
//!
//! Every algorithm in this crate observes arms only through a
//! [`SamplingOracle`]. The oracle owns the random state and counts every
//! pull, so reported sample totals can always be trusted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a discrete law.
const MASS_TOLERANCE: f64 = 1e-12;

/// Reward distribution of a single arm. All support lies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ArmSpec {
    Bernoulli {
        p: f64,
    },
    Deterministic {
        v: f64,
    },
    #[serde(alias = "discrete")]
    TruncatedDiscrete {
        support: Vec<f64>,
        probs: Vec<f64>,
    },
}

impl ArmSpec {
    pub fn bernoulli(p: f64) -> Self {
        ArmSpec::Bernoulli { p }
    }

    pub fn deterministic(v: f64) -> Self {
        ArmSpec::Deterministic { v }
    }

    pub fn discrete(points: &[(f64, f64)]) -> Self {
        ArmSpec::TruncatedDiscrete {
            support: points.iter().map(|&(x, _)| x).collect(),
            probs: points.iter().map(|&(_, p)| p).collect(),
        }
    }

    /// Checks the parameter invariants, returning a human-readable reason on failure.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        match self {
            ArmSpec::Bernoulli { p } if !in_unit(*p) => Err(format!("bernoulli p={p} outside [0,1]")),
            ArmSpec::Deterministic { v } if !in_unit(*v) => {
                Err(format!("deterministic v={v} outside [0,1]"))
            }
            ArmSpec::TruncatedDiscrete { support, probs } => {
                if support.is_empty() {
                    return Err("discrete law has no support points".into());
                }
                if support.len() != probs.len() {
                    return Err(format!(
                        "discrete law has {} support points but {} probabilities",
                        support.len(),
                        probs.len()
                    ));
                }
                if let Some(x) = support.iter().find(|x| !in_unit(**x)) {
                    return Err(format!("support point {x} outside [0,1]"));
                }
                if let Some(p) = probs.iter().find(|p| !in_unit(**p)) {
                    return Err(format!("probability {p} outside [0,1]"));
                }
                let mass: f64 = probs.iter().sum();
                if (mass - 1.0).abs() > MASS_TOLERANCE {
                    return Err(format!("probabilities sum to {mass}, expected 1"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Analytic mean of the law.
    pub fn mean(&self) -> f64 {
        match self {
            ArmSpec::Bernoulli { p } => *p,
            ArmSpec::Deterministic { v } => *v,
            ArmSpec::TruncatedDiscrete { support, probs } => {
                support.iter().zip(probs).map(|(x, p)| x * p).sum()
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ArmSpec::Bernoulli { p } => {
                if rng.random::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            ArmSpec::Deterministic { v } => *v,
            ArmSpec::TruncatedDiscrete { support, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (x, p) in support.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *x;
                    }
                }
                // u landed in the rounding slack above the accumulated mass
                *support.last().expect("validated non-empty support")
            }
        }
    }

    /// Sum of `count` independent draws, generated from the exact law of the sum.
    fn sample_sum<R: Rng + ?Sized>(&self, count: u64, rng: &mut R) -> f64 {
        match self {
            ArmSpec::Bernoulli { p } => binomial(count, *p, rng) as f64,
            ArmSpec::Deterministic { v } => *v * count as f64,
            ArmSpec::TruncatedDiscrete { support, probs } => {
                // multinomial counts via a chain of conditional binomials
                let mut remaining = count;
                let mut mass_left = 1.0;
                let mut total = 0.0;
                let last = support.len() - 1;
                for (j, (x, p)) in support.iter().zip(probs).enumerate() {
                    if remaining == 0 {
                        break;
                    }
                    let hits = if j == last {
                        remaining
                    } else {
                        let q = if mass_left > 0.0 { (p / mass_left).clamp(0.0, 1.0) } else { 1.0 };
                        binomial(remaining, q, rng)
                    };
                    total += x * hits as f64;
                    remaining -= hits;
                    mass_left -= p;
                }
                total
            }
        }
    }
}

fn binomial<R: Rng + ?Sized>(count: u64, p: f64, rng: &mut R) -> u64 {
    if count == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        count
    } else {
        Binomial::new(count, p)
            .expect("p checked to lie in (0,1)")
            .sample(rng)
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    arms: Vec<ArmSpec>,
}

/// An ordered, non-empty list of arms together with their true means.
///
/// The means are ground truth: algorithms never read them, only the
/// verifiers and the harness do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct Instance {
    arms: Vec<ArmSpec>,
    means: Vec<f64>,
}

impl Instance {
    /// Builds an instance, rejecting the first invalid spec by index.
    pub fn new(specs: Vec<ArmSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::EmptyInstance);
        }
        for (index, spec) in specs.iter().enumerate() {
            spec.validate()
                .map_err(|reason| Error::InvalidArm { index, reason })?;
        }
        let means = specs.iter().map(ArmSpec::mean).collect();
        Ok(Instance { arms: specs, means })
    }

    /// Convenience constructor for an instance of deterministic arms.
    pub fn deterministic(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().copied().map(ArmSpec::deterministic).collect())
    }

    /// Convenience constructor for an instance of Bernoulli arms.
    pub fn bernoulli(ps: &[f64]) -> Result<Self> {
        Self::new(ps.iter().copied().map(ArmSpec::bernoulli).collect())
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn arms(&self) -> &[ArmSpec] {
        &self.arms
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl TryFrom<InstanceFile> for Instance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        Instance::new(file.arms)
    }
}

impl From<Instance> for InstanceFile {
    fn from(instance: Instance) -> Self {
        InstanceFile { arms: instance.arms }
    }
}

/// Seeded, metered access to the arms of an [`Instance`].
///
/// Single owner; run one oracle per trial when parallelizing.
#[derive(Debug, Clone)]
pub struct SamplingOracle<'a> {
    instance: &'a Instance,
    rng: ChaCha8Rng,
    pulls_per_arm: Vec<u64>,
    pulls_total: u64,
}

impl<'a> SamplingOracle<'a> {
    pub fn new(instance: &'a Instance, seed: u64) -> Self {
        SamplingOracle {
            instance,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pulls_per_arm: vec![0; instance.len()],
            pulls_total: 0,
        }
    }

    pub fn num_arms(&self) -> usize {
        self.instance.len()
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index < self.instance.len() {
            Ok(())
        } else {
            Err(Error::ArmOutOfRange { index, len: self.instance.len() })
        }
    }

    /// Draws one reward from arm `index`.
    pub fn pull(&mut self, index: usize) -> Result<f64> {
        self.check_index(index)?;
        self.pulls_per_arm[index] += 1;
        self.pulls_total += 1;
        Ok(self.instance.arms[index].sample(&mut self.rng))
    }

    /// Draws `count` rewards from arm `index` and returns their sum.
    ///
    /// Counts as `count` pulls. The sum is drawn from its exact law
    /// (binomial or multinomial) rather than by looping, which keeps
    /// schedules with millions of pulls per arm tractable.
    pub fn pull_many(&mut self, index: usize, count: u64) -> Result<f64> {
        self.check_index(index)?;
        self.pulls_per_arm[index] += count;
        self.pulls_total += count;
        Ok(self.instance.arms[index].sample_sum(count, &mut self.rng))
    }

    pub fn total_samples(&self) -> u64 {
        self.pulls_total
    }

    pub fn pulls(&self, index: usize) -> u64 {
        self.pulls_per_arm.get(index).copied().unwrap_or(0)
    }

    pub fn pulls_per_arm(&self) -> &[u64] {
        &self.pulls_per_arm
    }
}
