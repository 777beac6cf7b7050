//! Level/block skyline identification, truncation, and the naive baseline.
//!
//! [`identify_skyline`] keeps arm 0 in the skyline and repeatedly searches
//! contiguous blocks for arms that step up by a clear margin over the last
//! skyline member to their left. Blocks that fail the step-up test are
//! dropped whole; blocks that pass contribute their best arm and hand the
//! arms to its left down to the next level as smaller sub-blocks.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::arms::SamplingOracle;
use crate::error::{check_unit_open, Error, Result};
use crate::subroutines::{est_mean, hoeffding_samples, BestArmFinder, EstimateRecord, FinderKind};

/// Accuracy and confidence of a skyline run plus algorithm options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default)]
    pub finder: FinderKind,
    /// Apply [`truncate_skyline`] to the result of [`identify_skyline`].
    #[serde(default)]
    pub truncate: bool,
}

impl Config {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        let config = Config { epsilon, delta, finder: FinderKind::default(), truncate: false };
        config.validate()?;
        Ok(config)
    }

    pub fn with_truncate(mut self, truncate: bool) -> Self {
        self.truncate = truncate;
        self
    }

    pub fn with_finder(mut self, finder: FinderKind) -> Self {
        self.finder = finder;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_unit_open("epsilon", self.epsilon)?;
        check_unit_open("delta", self.delta)
    }
}

/// A contiguous, inclusive range of arms processed at some level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub level: usize,
    /// 1-based position of the block within its level.
    pub ordinal: usize,
    pub lo: usize,
    pub hi: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.hi + 1 - self.lo
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn range(&self) -> RangeInclusive<usize> {
        self.lo..=self.hi
    }
}

/// Everything decided while processing one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub block: Block,
    pub delta_level: f64,
    pub delta_round: f64,
    pub prev: usize,
    pub lower: f64,
    pub chosen: usize,
    pub estimate: f64,
    pub upper: Option<f64>,
    pub contributed: bool,
    pub target_children: Option<f64>,
    /// Child blocks handed to the next level.
    pub children: usize,
    /// Arms right of `chosen` dropped when the block contributed.
    pub dropped_right: usize,
    pub samples_this_round: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelTrace {
    pub level: usize,
    pub delta_level: f64,
    pub block_count: usize,
    pub active_arms: usize,
    pub block_sizes: Vec<usize>,
    pub rounds: Vec<RoundRecord>,
}

/// Full record of an [`identify_skyline`] run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    /// Estimate of arm 0 taken before the level loop.
    pub first: Option<EstimateRecord>,
    pub levels: Vec<LevelTrace>,
}

impl RunTrace {
    pub fn levels_used(&self) -> usize {
        self.levels.len()
    }

    pub fn rounds(&self) -> impl Iterator<Item = &RoundRecord> {
        self.levels.iter().flat_map(|l| l.rounds.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkylineResult {
    /// Strictly increasing arm indices; always starts with 0.
    pub skyline: Vec<usize>,
    pub estimates: BTreeMap<usize, f64>,
    pub trace: RunTrace,
    pub samples_total: u64,
}

/// Hard cap on the number of levels: `2⌈log₂ n⌉ + 2`.
pub fn level_cap(num_arms: usize) -> usize {
    let log2 = num_arms.max(1).next_power_of_two().trailing_zeros() as usize;
    2 * log2 + 2
}

/// Splits `[lo .. k-1]` into `min(k - lo, max(1, ⌊b⌋))` consecutive blocks
/// with `b = (4/ε)(U - L)`.
///
/// Block sizes differ by at most one, larger blocks first. When `k - lo ≥ b`
/// every block has at least `⌊(k - lo)/b⌋` arms and there are never more
/// than `b` of them; when `k - lo < b` every arm becomes its own block.
///
/// Children are numbered from 1 at `block.level + 1`; the caller renumbers
/// them within the full next level.
pub fn split_block(block: &Block, k: usize, lower: f64, upper: f64, epsilon: f64) -> Result<Vec<Block>> {
    if !(block.lo..=block.hi).contains(&k) {
        return Err(Error::InvalidParameter(format!(
            "split point {k} outside block {}..={}",
            block.lo, block.hi
        )));
    }
    if upper <= lower {
        return Err(Error::InvalidParameter(format!("upper bound {upper} must exceed lower bound {lower}")));
    }
    let width = k - block.lo;
    if width == 0 {
        return Ok(Vec::new());
    }
    let target = (4.0 / epsilon) * (upper - lower);
    let count = (target.floor() as usize).clamp(1, width);
    let (base, extra) = (width / count, width % count);
    let mut lo = block.lo;
    let children = (0..count)
        .map(|idx| {
            let size = base + usize::from(idx < extra);
            let child = Block { level: block.level + 1, ordinal: idx + 1, lo, hi: lo + size - 1 };
            lo += size;
            child
        })
        .collect();
    Ok(children)
}

/// Identifies an `ε`-skyline with probability at least `1 - δ`.
///
/// Arm 0 is estimated with `(ε/12, δ/2)` and always kept. Level `ℓ` runs
/// its `b_ℓ` blocks in ascending order with `δ_ℓ = δ/2^{ℓ+1}` and
/// `δ_{ℓ,m} = δ_ℓ/b_ℓ`. A block contributes its best arm `k` when
/// `μ̂[k] ≥ μ̂[prev] + 3ε/4`, otherwise it is dropped.
pub fn identify_skyline(oracle: &mut SamplingOracle<'_>, config: &Config) -> Result<SkylineResult> {
    config.validate()?;
    let eps = config.epsilon;
    let n = oracle.num_arms();
    if n == 0 {
        return Err(Error::EmptyInstance);
    }
    let start_samples = oracle.total_samples();
    let sub_eps = eps / 12.0;

    let first = est_mean(oracle, 0, sub_eps, config.delta / 2.0)?;
    let mut estimates = BTreeMap::from([(0usize, first.estimate)]);

    let mut blocks = if n > 1 {
        vec![Block { level: 1, ordinal: 1, lo: 1, hi: n - 1 }]
    } else {
        Vec::new()
    };
    let cap = level_cap(n);
    let mut levels = Vec::new();
    let mut level = 1usize;

    while !blocks.is_empty() {
        if level > cap {
            return Err(Error::LevelCapExceeded { cap });
        }
        let block_count = blocks.len();
        let delta_level = config.delta / 2f64.powi(level as i32 + 1);
        let delta_round = delta_level / block_count as f64;
        let mut next = Vec::new();
        let mut rounds = Vec::with_capacity(block_count);

        for block in &blocks {
            let before = oracle.total_samples();
            let (&prev, &prev_estimate) = estimates
                .range(..block.lo)
                .next_back()
                .expect("arm 0 precedes every block");
            let lower = eps / 2.0 + prev_estimate;
            let chosen = config.finder.find_best(oracle, block.range(), sub_eps, delta_round / 2.0)?;
            let estimate = est_mean(oracle, chosen, sub_eps, delta_round / 2.0)?.estimate;

            let mut record = RoundRecord {
                block: *block,
                delta_level,
                delta_round,
                prev,
                lower,
                chosen,
                estimate,
                upper: None,
                contributed: false,
                target_children: None,
                children: 0,
                dropped_right: 0,
                samples_this_round: 0,
            };
            if lower + eps / 4.0 <= estimate {
                estimates.insert(chosen, estimate);
                let upper = estimate + eps / 6.0;
                let children = split_block(block, chosen, lower, upper, eps)?;
                record.upper = Some(upper);
                record.contributed = true;
                record.target_children = Some((4.0 / eps) * (upper - lower));
                record.children = children.len();
                record.dropped_right = block.hi - chosen;
                next.extend(children);
            }
            record.samples_this_round = oracle.total_samples() - before;
            rounds.push(record);
        }

        levels.push(LevelTrace {
            level,
            delta_level,
            block_count,
            active_arms: blocks.iter().map(Block::len).sum(),
            block_sizes: blocks.iter().map(Block::len).collect(),
            rounds,
        });
        for (idx, child) in next.iter_mut().enumerate() {
            child.ordinal = idx + 1;
        }
        blocks = next;
        level += 1;
    }

    let mut skyline: Vec<usize> = estimates.keys().copied().collect();
    if config.truncate {
        skyline = truncate_skyline(&skyline, &estimates, eps)?;
    }
    Ok(SkylineResult {
        skyline,
        estimates,
        trace: RunTrace { first: Some(first), levels },
        samples_total: oracle.total_samples() - start_samples,
    })
}

/// Prunes a skyline left to right: the next member is removed while
/// `μ̂[s] + 3ε/4 > μ̂[s']`, otherwise it becomes the new anchor.
pub fn truncate_skyline(skyline: &[usize], estimates: &BTreeMap<usize, f64>, epsilon: f64) -> Result<Vec<usize>> {
    let lookup = |s: usize| estimates.get(&s).copied().ok_or(Error::MissingEstimate(s));
    let Some((&first, rest)) = skyline.split_first() else {
        return Err(Error::InvalidSkyline("empty skyline".into()));
    };
    if first != 0 {
        return Err(Error::InvalidSkyline("skyline must start with arm 0".into()));
    }
    let mut kept = vec![first];
    let mut anchor = lookup(first)?;
    for &candidate in rest {
        let value = lookup(candidate)?;
        if anchor + 0.75 * epsilon <= value {
            kept.push(candidate);
            anchor = value;
        }
    }
    Ok(kept)
}

/// Upper bound `⌈12/(7ε)⌉ + 1` on the size of a truncated skyline.
pub fn truncated_size_bound(epsilon: f64) -> usize {
    (12.0 / (7.0 * epsilon)).ceil() as usize + 1
}

/// Estimates every arm with `(ε/2, δ/n)` and returns the exact running-max
/// skyline of the estimates.
pub fn naive_skyline(oracle: &mut SamplingOracle<'_>, config: &Config) -> Result<SkylineResult> {
    config.validate()?;
    let n = oracle.num_arms();
    if n == 0 {
        return Err(Error::EmptyInstance);
    }
    let start_samples = oracle.total_samples();
    let per_arm_delta = config.delta / n as f64;
    let mut all = Vec::with_capacity(n);
    for arm in 0..n {
        all.push(est_mean(oracle, arm, config.epsilon / 2.0, per_arm_delta)?.estimate);
    }
    let skyline = crate::verify::exact_skyline(&all)?;
    let estimates = skyline.iter().map(|&s| (s, all[s])).collect();
    Ok(SkylineResult {
        skyline,
        estimates,
        trace: RunTrace { first: None, levels: Vec::new() },
        samples_total: oracle.total_samples() - start_samples,
    })
}

/// Closed-form sample total of [`naive_skyline`] on `n` arms.
pub fn naive_sample_total(n: usize, epsilon: f64, delta: f64) -> Result<u64> {
    Ok(n as u64 * hoeffding_samples(epsilon / 2.0, delta / n as f64)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arms::Instance;
    use crate::verify::is_eps_skyline;

    fn root(lo: usize, hi: usize) -> Block {
        Block { level: 1, ordinal: 1, lo, hi }
    }

    #[test]
    fn split_into_singletons() {
        let children = split_block(&root(10, 30), 20, 0.3, 0.55, 0.1).unwrap();
        assert_eq!(children.len(), 10);
        for (i, c) in children.iter().enumerate() {
            assert_eq!((c.lo, c.hi, c.level, c.ordinal), (10 + i, 10 + i, 2, i + 1));
        }
        // b = 10 here as well, ⌊3/10⌋ = 0 so size falls back to 1
        let children = split_block(&root(0, 5), 3, 0.3, 0.55, 0.1).unwrap();
        assert_eq!(children.iter().map(|c| (c.lo, c.hi)).collect::<Vec<_>>(), [(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn split_into_balanced_blocks() {
        // b = (4/0.1)(0.125) = 5, width 10 => five blocks of two
        let children = split_block(&root(0, 12), 10, 0.25, 0.375, 0.1).unwrap();
        assert_eq!(children.iter().map(|c| (c.lo, c.hi)).collect::<Vec<_>>(), [(0, 1), (2, 3), (4, 5), (6, 7), (8, 9)]);
        // b = 3.2, width 11 => three blocks of sizes 4, 4, 3
        let children = split_block(&root(5, 16), 16, 0.2, 0.28, 0.1).unwrap();
        assert_eq!(children.iter().map(|c| (c.lo, c.hi)).collect::<Vec<_>>(), [(5, 8), (9, 12), (13, 15)]);
        // b = 33.8, width 112: fixed blocks of ⌊112/33.8⌋ = 3 arms would make 38 children
        let children = split_block(&root(1, 255), 113, 0.1, 0.945, 0.1).unwrap();
        assert_eq!(children.len(), 33);
        assert!(children.iter().all(|c| c.len() >= 3));
        assert_eq!(children.iter().map(Block::len).sum::<usize>(), 112);
    }

    #[test]
    fn split_edge_cases() {
        assert!(split_block(&root(4, 9), 4, 0.3, 0.5, 0.1).unwrap().is_empty());
        assert!(split_block(&root(4, 9), 6, 0.5, 0.5, 0.1).is_err());
        assert!(split_block(&root(4, 9), 10, 0.3, 0.5, 0.1).is_err());
    }

    #[test]
    fn single_arm_instance() {
        let inst = Instance::bernoulli(&[0.4]).unwrap();
        let mut oracle = SamplingOracle::new(&inst, 0);
        let res = identify_skyline(&mut oracle, &Config::new(0.1, 0.1).unwrap()).unwrap();
        assert_eq!(res.skyline, vec![0]);
        assert!(res.trace.levels.is_empty());
        assert_eq!(res.samples_total, hoeffding_samples(0.1 / 12.0, 0.05).unwrap());
    }

    #[test]
    fn step_up_is_found() {
        let inst = Instance::deterministic(&[0.0, 0.9]).unwrap();
        let mut oracle = SamplingOracle::new(&inst, 0);
        let res = identify_skyline(&mut oracle, &Config::new(0.1, 0.1).unwrap()).unwrap();
        assert_eq!(res.skyline, vec![0, 1]);
        assert_eq!(res.samples_total, oracle.total_samples());
    }

    #[test]
    fn flat_instance_is_valid() {
        let inst = Instance::deterministic(&[0.5; 50]).unwrap();
        let mut oracle = SamplingOracle::new(&inst, 0);
        let res = identify_skyline(&mut oracle, &Config::new(0.2, 0.1).unwrap()).unwrap();
        assert!(is_eps_skyline(inst.means(), &res.skyline, 0.2).unwrap().valid);
        assert_eq!(res.skyline, vec![0]);
    }

    #[test]
    fn trace_records_satisfy_their_invariants() {
        let means: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 100.0).collect();
        let inst = Instance::deterministic(&means).unwrap();
        let eps = 0.1;
        let mut oracle = SamplingOracle::new(&inst, 0);
        let res = identify_skyline(&mut oracle, &Config::new(eps, 0.1).unwrap()).unwrap();
        for level in &res.trace.levels {
            assert_eq!(level.block_count, level.rounds.len());
            assert_eq!(level.active_arms, level.block_sizes.iter().sum::<usize>());
            let mut last_hi = None;
            for r in &level.rounds {
                assert!(last_hi.is_none_or(|h| h < r.block.lo));
                last_hi = Some(r.block.hi);
                assert_eq!(r.lower, eps / 2.0 + res.estimates[&r.prev]);
                if r.contributed {
                    let upper = r.upper.unwrap();
                    assert_eq!(upper, r.estimate + eps / 6.0);
                    assert_eq!(r.target_children.unwrap(), (4.0 / eps) * (upper - r.lower));
                    assert!(r.estimate >= r.lower + eps / 4.0);
                } else {
                    assert!(r.upper.is_none() && r.target_children.is_none());
                    assert!(r.estimate < r.lower + eps / 4.0);
                }
            }
        }
        assert!(is_eps_skyline(&means, &res.skyline, eps).unwrap().valid);
    }

    #[test]
    fn truncation_trace() {
        let est = BTreeMap::from([(0, 0.2), (3, 0.3), (7, 0.9)]);
        assert_eq!(truncate_skyline(&[0, 3, 7], &est, 0.2).unwrap(), vec![0, 7]);
        assert_eq!(truncate_skyline(&[0], &est, 0.2).unwrap(), vec![0]);
        let spaced = BTreeMap::from([(0, 0.0), (2, 0.2), (5, 0.4), (9, 0.6)]);
        assert_eq!(truncate_skyline(&[0, 2, 5, 9], &spaced, 0.25).unwrap(), vec![0, 2, 5, 9]);
        assert!(matches!(truncate_skyline(&[0, 4], &est, 0.2), Err(Error::MissingEstimate(4))));
    }

    #[test]
    fn naive_on_deterministic_arms() {
        let inst = Instance::deterministic(&[0.5, 0.3, 0.7, 0.7, 0.6]).unwrap();
        let mut oracle = SamplingOracle::new(&inst, 0);
        let res = naive_skyline(&mut oracle, &Config::new(0.1, 0.1).unwrap()).unwrap();
        assert_eq!(res.skyline, vec![0, 2, 3]);
    }

    #[test]
    fn naive_sample_totals() {
        let inst = Instance::bernoulli(&[0.5]).unwrap();
        let mut oracle = SamplingOracle::new(&inst, 0);
        let res = naive_skyline(&mut oracle, &Config::new(0.2, 0.1).unwrap()).unwrap();
        assert_eq!(res.skyline, vec![0]);
        assert_eq!(res.samples_total, hoeffding_samples(0.1, 0.1).unwrap());
        assert_eq!(naive_sample_total(100, 0.2, 0.1).unwrap(), 38_100);
    }

    #[test]
    fn level_cap_values() {
        assert_eq!(level_cap(1), 2);
        assert_eq!(level_cap(2), 4);
        assert_eq!(level_cap(256), 18);
        assert_eq!(level_cap(257), 20);
    }
}
