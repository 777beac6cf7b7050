//! Sampling primitives: Hoeffding mean estimation and PAC best-arm search.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::arms::SamplingOracle;
use crate::error::{check_unit_open, Error, Result};

/// Pulls needed for a two-sided Hoeffding estimate: `⌈ln(2/δ) / (2ε²)⌉`.
pub fn hoeffding_samples(epsilon: f64, delta: f64) -> Result<u64> {
    check_unit_open("epsilon", epsilon)?;
    check_unit_open("delta", delta)?;
    Ok(((2.0 / delta).ln() / (2.0 * epsilon * epsilon)).ceil() as u64)
}

/// Outcome of a single [`est_mean`] call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub arm: usize,
    pub estimate: f64,
    pub samples_used: u64,
    pub epsilon: f64,
    pub delta: f64,
}

/// Estimates the mean of arm `arm` to within `epsilon` with probability `1 - delta`.
pub fn est_mean(
    oracle: &mut SamplingOracle<'_>,
    arm: usize,
    epsilon: f64,
    delta: f64,
) -> Result<EstimateRecord> {
    let samples = hoeffding_samples(epsilon, delta)?;
    let sum = oracle.pull_many(arm, samples)?;
    Ok(EstimateRecord {
        arm,
        estimate: (sum / samples as f64).clamp(0.0, 1.0),
        samples_used: samples,
        epsilon,
        delta,
    })
}

/// A PAC best-arm routine: returns an `epsilon`-best arm of `block` with
/// probability at least `1 - delta`.
pub trait BestArmFinder {
    fn find_best(
        &self,
        oracle: &mut SamplingOracle<'_>,
        block: RangeInclusive<usize>,
        epsilon: f64,
        delta: f64,
    ) -> Result<usize>;
}

fn check_block(block: &RangeInclusive<usize>) -> Result<()> {
    if block.is_empty() {
        Err(Error::EmptyBlock { lo: *block.start(), hi: *block.end() })
    } else {
        Ok(())
    }
}

/// Median elimination.
///
/// Round `r` samples every survivor `⌈(4/ε_r²) ln(3/δ_r)⌉` times with fresh
/// draws and keeps the `⌈size/2⌉` arms with the highest empirical means,
/// ties going to the lower index. The schedule starts at `ε/4, δ/2` and
/// moves to `3ε_r/4, δ_r/2` each round.
///
/// Pull count is seed-independent. For `δ ≤ 0.1` it stays below
/// `MEDIAN_ELIMINATION_BUDGET_CONSTANT · (|block|/ε²) · ln(1/δ)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MedianElimination;

/// Documented constant `C` in the median elimination budget bound.
///
/// The geometric schedule gives roughly `64 Σ_r (8/9)^r (ln(3/δ) + r ln 2)`
/// pulls per arm in units of `1/ε²`, about 2400·ln(1/δ) at δ = 0.1.
pub const MEDIAN_ELIMINATION_BUDGET_CONSTANT: f64 = 3000.0;

impl MedianElimination {
    /// Pulls per surviving arm in a round with accuracy `eps_r` and confidence `delta_r`.
    pub fn round_samples(eps_r: f64, delta_r: f64) -> u64 {
        ((4.0 / (eps_r * eps_r)) * (3.0 / delta_r).ln()).ceil() as u64
    }
}

impl BestArmFinder for MedianElimination {
    fn find_best(
        &self,
        oracle: &mut SamplingOracle<'_>,
        block: RangeInclusive<usize>,
        epsilon: f64,
        delta: f64,
    ) -> Result<usize> {
        check_block(&block)?;
        check_unit_open("epsilon", epsilon)?;
        check_unit_open("delta", delta)?;

        let mut survivors: Vec<usize> = block.collect();
        let mut eps_r = epsilon / 4.0;
        let mut delta_r = delta / 2.0;
        while survivors.len() > 1 {
            let samples = Self::round_samples(eps_r, delta_r);
            let mut scored = Vec::with_capacity(survivors.len());
            for &arm in &survivors {
                let mean = oracle.pull_many(arm, samples)? / samples as f64;
                scored.push((arm, mean));
            }
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            scored.truncate(survivors.len().div_ceil(2));
            survivors = scored.into_iter().map(|(arm, _)| arm).collect();
            survivors.sort_unstable();
            eps_r *= 0.75;
            delta_r /= 2.0;
        }
        Ok(survivors[0])
    }
}

/// Uniform sampling: estimate every arm to `±ε/2` with failure `δ/|block|`
/// and return the empirical argmax (lowest index on ties).
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformSampling;

impl BestArmFinder for UniformSampling {
    fn find_best(
        &self,
        oracle: &mut SamplingOracle<'_>,
        block: RangeInclusive<usize>,
        epsilon: f64,
        delta: f64,
    ) -> Result<usize> {
        check_block(&block)?;
        let size = block.clone().count();
        if size == 1 {
            return Ok(*block.start());
        }
        let mut best = (*block.start(), f64::NEG_INFINITY);
        for arm in block {
            let rec = est_mean(oracle, arm, epsilon / 2.0, delta / size as f64)?;
            if rec.estimate > best.1 {
                best = (arm, rec.estimate);
            }
        }
        Ok(best.0)
    }
}

/// Selects which [`BestArmFinder`] the skyline algorithm uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinderKind {
    #[default]
    MedianElimination,
    Uniform,
}

impl BestArmFinder for FinderKind {
    fn find_best(
        &self,
        oracle: &mut SamplingOracle<'_>,
        block: RangeInclusive<usize>,
        epsilon: f64,
        delta: f64,
    ) -> Result<usize> {
        match self {
            FinderKind::MedianElimination => MedianElimination.find_best(oracle, block, epsilon, delta),
            FinderKind::Uniform => UniformSampling.find_best(oracle, block, epsilon, delta),
        }
    }
}

/// Default strategy entry point.
pub fn find_best(
    oracle: &mut SamplingOracle<'_>,
    block: RangeInclusive<usize>,
    epsilon: f64,
    delta: f64,
) -> Result<usize> {
    MedianElimination.find_best(oracle, block, epsilon, delta)
}
