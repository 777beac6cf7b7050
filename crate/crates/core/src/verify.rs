//! Ground-truth checkers. These read true means and are never used by the
//! algorithms themselves.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skyline::RunTrace;

/// Which of the two skyline conditions a pair violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    /// An excluded arm lacks an ε-better nearest skyline member to its left.
    Coverage = 1,
    /// A skyline member is not ε-best for its prefix.
    PrefixBest = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: Condition,
    /// The skyline member in the failing comparison.
    pub s: usize,
    /// The arm it is compared against.
    pub t: usize,
    /// `μ[t] - ε - μ[s]`, always positive.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

fn check_skyline_shape(len: usize, skyline: &[usize]) -> Result<()> {
    match skyline.first() {
        None => return Err(Error::InvalidSkyline("empty skyline".into())),
        Some(&first) if first != 0 => {
            return Err(Error::InvalidSkyline(format!("skyline must contain arm 0, smallest member is {first}")))
        }
        _ => {}
    }
    if let Some(w) = skyline.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSkyline(format!("indices not strictly increasing at {} -> {}", w[0], w[1])));
    }
    if let Some(&last) = skyline.last().filter(|&&l| l >= len) {
        return Err(Error::ArmOutOfRange { index: last, len });
    }
    Ok(())
}

/// Checks both ε-skyline conditions against true means and lists every
/// violated pair.
///
/// `skyline` must be strictly increasing and start with arm 0.
pub fn is_eps_skyline(means: &[f64], skyline: &[usize], epsilon: f64) -> Result<ViolationReport> {
    check_skyline_shape(means.len(), skyline)?;
    let mut violations = Vec::new();

    // condition 1: walk the arms, tracking the nearest member on the left
    let mut members = skyline.iter().peekable();
    let mut left = 0usize;
    for (t, &mu_t) in means.iter().enumerate() {
        if members.peek() == Some(&&t) {
            left = t;
            members.next();
            continue;
        }
        let margin = mu_t - epsilon - means[left];
        if margin > 0.0 {
            violations.push(Violation { condition: Condition::Coverage, s: left, t, margin });
        }
    }

    // condition 2: every member against its whole prefix
    for &s in skyline {
        for (t, &mu_t) in means[..=s].iter().enumerate() {
            let margin = mu_t - epsilon - means[s];
            if margin > 0.0 {
                violations.push(Violation { condition: Condition::PrefixBest, s, t, margin });
            }
        }
    }

    Ok(ViolationReport { valid: violations.is_empty(), violations })
}

/// The exact skyline: arms at least as good as every earlier arm.
pub fn exact_skyline(means: &[f64]) -> Result<Vec<usize>> {
    if means.is_empty() {
        return Err(Error::EmptyInstance);
    }
    let mut best = f64::NEG_INFINITY;
    let mut out = Vec::new();
    for (i, &mu) in means.iter().enumerate() {
        if mu >= best {
            out.push(i);
            best = mu;
        }
    }
    Ok(out)
}

/// True iff arm `arm` is within `epsilon` of the best mean in `block`.
pub fn is_eps_best(means: &[f64], block: RangeInclusive<usize>, arm: usize, epsilon: f64) -> Result<bool> {
    if !block.contains(&arm) {
        return Err(Error::InvalidParameter(format!(
            "arm {arm} outside block {}..={}",
            block.start(),
            block.end()
        )));
    }
    let slice = means
        .get(block.clone())
        .ok_or(Error::ArmOutOfRange { index: *block.end(), len: means.len() })?;
    let best = slice.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(means[arm] >= best - epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundCheck {
    pub level: usize,
    pub ordinal: usize,
    pub best_mean: f64,
    /// `μ*_{ℓ,m} - μ[k] < ε/12`
    pub ident_ok: bool,
    /// `|μ[k] - μ̂[k]| < ε/12`
    pub msmnt_ok: bool,
}

/// Whether every subroutine call of a run met its ε/12 accuracy target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventCheck {
    pub first_ok: bool,
    pub rounds: Vec<RoundCheck>,
    pub overall: bool,
}

pub fn check_event_e(trace: &RunTrace, means: &[f64], epsilon: f64) -> Result<EventCheck> {
    let tol = epsilon / 12.0;
    let first = trace
        .first
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("trace lacks the initial estimate of arm 0".into()))?;
    let mu0 = *means.first().ok_or(Error::EmptyInstance)?;
    let first_ok = (mu0 - first.estimate).abs() < tol;

    let mut rounds = Vec::new();
    for r in trace.rounds() {
        let b = r.block;
        let slice = means.get(b.lo..=b.hi).ok_or(Error::ArmOutOfRange { index: b.hi, len: means.len() })?;
        if !(b.lo..=b.hi).contains(&r.chosen) {
            return Err(Error::InvalidParameter(format!("chosen arm {} outside its block", r.chosen)));
        }
        let best_mean = slice.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mu_k = means[r.chosen];
        rounds.push(RoundCheck {
            level: b.level,
            ordinal: b.ordinal,
            best_mean,
            ident_ok: best_mean - mu_k < tol,
            msmnt_ok: (mu_k - r.estimate).abs() < tol,
        });
    }
    let overall = first_ok && rounds.iter().all(|r| r.ident_ok && r.msmnt_ok);
    Ok(EventCheck { first_ok, rounds, overall })
}

/// Violations of the per-level growth and decay bounds that hold on runs
/// where every subroutine call succeeded.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelBoundReport {
    /// Levels `ℓ` with `b_{ℓ+1} ≥ (10/3) b_ℓ + 4/ε`.
    pub block_growth: Vec<usize>,
    /// Levels `ℓ > 2` with `n_ℓ > n_{ℓ-2} / 2`.
    pub arm_decay: Vec<usize>,
}

impl LevelBoundReport {
    pub fn is_clean(&self) -> bool {
        self.block_growth.is_empty() && self.arm_decay.is_empty()
    }
}

pub fn check_level_bounds(trace: &RunTrace, epsilon: f64) -> LevelBoundReport {
    let blocks: Vec<usize> = trace.levels.iter().map(|l| l.block_count).collect();
    let arms: Vec<usize> = trace.levels.iter().map(|l| l.active_arms).collect();
    let mut report = LevelBoundReport::default();
    for (i, pair) in blocks.windows(2).enumerate() {
        if pair[1] as f64 >= (10.0 / 3.0) * pair[0] as f64 + 4.0 / epsilon {
            report.block_growth.push(i + 1);
        }
    }
    for i in 2..arms.len() {
        if 2 * arms[i] > arms[i - 2] {
            report.arm_decay.push(i + 1);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skyline::{Block, LevelTrace, RoundRecord};
    use crate::subroutines::EstimateRecord;

    #[test]
    fn small_valid_skyline() {
        assert!(is_eps_skyline(&[0.5, 0.55, 0.45], &[0, 1], 0.1).unwrap().valid);
    }

    #[test]
    fn coverage_violation_reports_margin() {
        let report = is_eps_skyline(&[0.2, 0.8], &[0], 0.1).unwrap();
        assert!(!report.valid);
        assert_eq!(report.violations.len(), 1);
        let v = report.violations[0];
        assert_eq!((v.condition, v.s, v.t), (Condition::Coverage, 0, 1));
        assert!((v.margin - 0.5).abs() < 1e-12);
    }

    #[test]
    fn prefix_violation() {
        let report = is_eps_skyline(&[0.9, 0.2], &[0, 1], 0.1).unwrap();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].condition, Condition::PrefixBest);
        assert_eq!((report.violations[0].s, report.violations[0].t), (1, 0));
    }

    #[test]
    fn everything_at_eps_one() {
        let means = [0.0, 1.0, 0.3, 0.7, 0.0];
        assert!(is_eps_skyline(&means, &[0, 1, 2, 3, 4], 1.0).unwrap().valid);
    }

    #[test]
    fn malformed_skylines() {
        let means = [0.1, 0.2, 0.3];
        assert!(is_eps_skyline(&means, &[], 0.1).is_err());
        assert!(is_eps_skyline(&means, &[1, 2], 0.1).is_err());
        assert!(is_eps_skyline(&means, &[0, 2, 1], 0.1).is_err());
        assert!(is_eps_skyline(&means, &[0, 3], 0.1).is_err());
    }

    #[test]
    fn running_max() {
        assert_eq!(exact_skyline(&[0.5, 0.3, 0.7, 0.7, 0.6]).unwrap(), vec![0, 2, 3]);
        assert_eq!(exact_skyline(&[0.1, 0.2, 0.3]).unwrap(), vec![0, 1, 2]);
        assert_eq!(exact_skyline(&[0.3, 0.2, 0.1]).unwrap(), vec![0]);
        assert!(exact_skyline(&[]).is_err());
    }

    #[test]
    fn eps_best() {
        let means = [0.3, 0.5];
        assert!(is_eps_best(&means, 1..=1, 1, 0.0).unwrap());
        assert!(is_eps_best(&means, 0..=1, 0, 0.2).unwrap());
        assert!(!is_eps_best(&means, 0..=1, 0, 0.1).unwrap());
        assert!(is_eps_best(&means, 1..=1, 0, 0.1).is_err());
    }

    fn one_round_trace(means: &[f64], chosen: usize, estimate: f64) -> RunTrace {
        let block = Block { level: 1, ordinal: 1, lo: 1, hi: means.len() - 1 };
        RunTrace {
            first: Some(EstimateRecord { arm: 0, estimate: means[0], samples_used: 1, epsilon: 0.1, delta: 0.1 }),
            levels: vec![LevelTrace {
                level: 1,
                delta_level: 0.025,
                block_count: 1,
                active_arms: block.len(),
                block_sizes: vec![block.len()],
                rounds: vec![RoundRecord {
                    block,
                    delta_level: 0.025,
                    delta_round: 0.025,
                    prev: 0,
                    lower: 0.05 + means[0],
                    chosen,
                    estimate,
                    upper: None,
                    contributed: false,
                    target_children: None,
                    children: 0,
                    dropped_right: 0,
                    samples_this_round: 1,
                }],
            }],
        }
    }

    #[test]
    fn event_detects_bad_measurement() {
        let eps = 0.12;
        let means = [0.1, 0.5, 0.6];
        let ok = check_event_e(&one_round_trace(&means, 2, 0.6), &means, eps).unwrap();
        assert!(ok.overall);
        let bad = check_event_e(&one_round_trace(&means, 2, 0.6 + eps / 6.0), &means, eps).unwrap();
        assert!(bad.rounds[0].ident_ok);
        assert!(!bad.rounds[0].msmnt_ok);
        assert!(!bad.overall);
    }

    #[test]
    fn event_detects_bad_identification() {
        let eps = 0.12;
        // two-arm block with gap ε; the worse arm is chosen
        let means = [0.1, 0.5, 0.5 + eps];
        let check = check_event_e(&one_round_trace(&means, 1, 0.5), &means, eps).unwrap();
        assert!(!check.rounds[0].ident_ok);
        assert!(check.rounds[0].msmnt_ok);
        assert_eq!(check.rounds[0].best_mean, 0.5 + eps);
        assert!(!check.overall);
    }

    #[test]
    fn event_length_mismatch() {
        let means = [0.1, 0.5, 0.6];
        let trace = one_round_trace(&means, 2, 0.6);
        assert!(check_event_e(&trace, &means[..2], 0.1).is_err());
    }
}
