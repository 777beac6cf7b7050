//! PAC ε-skyline identification for stochastic multi-armed bandits.
//!
//! Given arms `0..n` with unknown means in `[0, 1]`, an ε-skyline is a set
//! of arms that approximates the running maximum of the means: every
//! excluded arm has a nearly-as-good skyline member to its left, and every
//! member is nearly the best of its prefix.
//!
//! - [`arms`]: reward laws, instances, the metered [`SamplingOracle`]
//! - [`subroutines`]: Hoeffding estimation and median elimination
//! - [`skyline`]: level/block identification, truncation, naive baseline
//! - [`verify`]: ground-truth checkers
//! - [`instances`]: uniform and staircase generators
//! - [`harness`]: trials, sweeps, CSV output

pub mod arms;
pub mod error;
pub mod harness;
pub mod instances;
pub mod skyline;
pub mod subroutines;
pub mod verify;

pub use arms::{ArmSpec, Instance, SamplingOracle};
pub use error::{Error, Result};
pub use harness::{run_trial, sweep, Algo, SweepConfig, TrialRecord};
pub use instances::{decode_guesses, gen_staircase, gen_uniform_random, StaircaseInstance};
pub use skyline::{identify_skyline, naive_skyline, split_block, truncate_skyline, Block, Config, SkylineResult};
pub use subroutines::{est_mean, find_best, hoeffding_samples, BestArmFinder, EstimateRecord, FinderKind};
pub use verify::{check_event_e, exact_skyline, is_eps_best, is_eps_skyline, EventCheck, ViolationReport};
