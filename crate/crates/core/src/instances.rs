//! Instance generators: uniform random workloads and staircase hard instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arms::{ArmSpec, Instance};
use crate::error::{Error, Result};

/// `n` Bernoulli arms with means drawn uniformly from `[0, 1]`.
pub fn gen_uniform_random(n: usize, seed: u64) -> Result<Instance> {
    if n == 0 {
        return Err(Error::EmptyInstance);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Instance::new((0..n).map(|_| ArmSpec::bernoulli(rng.random_range(0.0..=1.0))).collect())
}

/// Staircase hard instance.
///
/// `levels` groups of `m` Bernoulli arms; group `t` has base mean
/// `p_t = base + 2ε(t-1)` and one planted arm at `p_t + 2ε`. A
/// deterministic arm with mean 0 sits at index 0, so group `t` (1-based)
/// occupies indices `(t-1)m + 1 ..= tm`.
#[derive(Debug, Clone, PartialEq)]
pub struct StaircaseInstance {
    pub epsilon: f64,
    pub levels: usize,
    pub m: usize,
    pub p_levels: Vec<f64>,
    /// 1-based position of the planted arm within each group.
    pub planted: Vec<usize>,
    pub instance: Instance,
}

/// Sidecar metadata written next to a staircase instance file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaircaseSidecar {
    #[serde(rename = "T")]
    pub levels: usize,
    pub m: usize,
    pub planted: Vec<usize>,
}

impl StaircaseInstance {
    /// Builds a staircase with an explicit number of groups and base mean.
    ///
    /// With `levels = 1` this is a single planted best-arm instance at base `base`.
    pub fn build(epsilon: f64, m: usize, levels: usize, base: f64, seed: u64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        if m == 0 || levels == 0 {
            return Err(Error::InvalidParameter("staircase needs m >= 1 and at least one level".into()));
        }
        let p_levels: Vec<f64> = (0..levels).map(|t| base + 2.0 * epsilon * t as f64).collect();
        let top = p_levels[levels - 1] + 2.0 * epsilon;
        if base < 0.0 || top > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "staircase means span [{base}, {top}], outside [0, 1]"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let planted: Vec<usize> = (0..levels).map(|_| rng.random_range(1..=m)).collect();

        let mut specs = Vec::with_capacity(levels * m + 1);
        specs.push(ArmSpec::deterministic(0.0));
        for (p, &c) in p_levels.iter().zip(&planted) {
            for i in 1..=m {
                let mean = if i == c { (p + 2.0 * epsilon).min(1.0) } else { *p };
                specs.push(ArmSpec::bernoulli(mean));
            }
        }
        Ok(StaircaseInstance { epsilon, levels, m, p_levels, planted, instance: Instance::new(specs)? })
    }

    /// Number of arms in the reduction, excluding the sentinel arm 0.
    pub fn arm_count(&self) -> usize {
        self.levels * self.m
    }

    /// Global index of the planted arm of group `t` (1-based).
    pub fn planted_index(&self, t: usize) -> usize {
        (t - 1) * self.m + self.planted[t - 1]
    }

    pub fn sidecar(&self) -> StaircaseSidecar {
        StaircaseSidecar { levels: self.levels, m: self.m, planted: self.planted.clone() }
    }
}

/// Number of staircase groups for `epsilon`: `⌊1/(4ε)⌋ + 1`.
pub fn staircase_levels(epsilon: f64) -> usize {
    // the nudge keeps exact reciprocals such as ε = 1/16 from flooring low
    (1.0 / (4.0 * epsilon) + 1e-9).floor() as usize + 1
}

/// Staircase with bases `1/4, 1/4 + 2ε, …` up to at most `3/4`.
pub fn gen_staircase(epsilon: f64, m: usize, seed: u64) -> Result<StaircaseInstance> {
    if !(epsilon > 0.0 && epsilon <= 0.125) {
        return Err(Error::InvalidParameter(format!("staircase epsilon must lie in (0, 1/8], got {epsilon}")));
    }
    StaircaseInstance::build(epsilon, m, staircase_levels(epsilon), 0.25, seed)
}

/// Recovers the planted positions from a skyline over a staircase instance:
/// the guess for group `t` is the position of the largest skyline member in
/// that group. Arm 0 is ignored.
pub fn decode_guesses(skyline: &[usize], levels: usize, m: usize) -> Result<Vec<usize>> {
    let mut guesses = vec![None; levels];
    for &s in skyline.iter().filter(|&&s| s >= 1 && s <= levels * m) {
        let t = (s - 1) / m;
        let pos = (s - 1) % m + 1;
        let g = &mut guesses[t];
        *g = Some(g.map_or(pos, |p: usize| p.max(pos)));
    }
    guesses
        .into_iter()
        .enumerate()
        .map(|(t, g)| g.ok_or(Error::DecodeFailure { level: t + 1 }))
        .collect()
}
