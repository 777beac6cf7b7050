//! Trial runner, parameter sweeps, and CSV output.

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arms::{Instance, SamplingOracle};
use crate::error::{Error, Result};
use crate::instances::{gen_staircase, gen_uniform_random};
use crate::skyline::{identify_skyline, naive_skyline, Config, SkylineResult};
use crate::verify::{check_event_e, is_eps_skyline};

/// Exact CSV header of trial tables.
pub const CSV_COLUMNS: [&str; 12] = [
    "trial_id",
    "algo",
    "n",
    "epsilon",
    "delta",
    "seed",
    "samples_total",
    "skyline_size",
    "valid",
    "event_E",
    "levels_used",
    "wall_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algo {
    #[serde(rename = "alg1")]
    Alg1,
    #[serde(rename = "alg1+truncate")]
    Alg1Truncate,
    #[serde(rename = "naive")]
    Naive,
}

impl Algo {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algo::Alg1 => "alg1",
            Algo::Alg1Truncate => "alg1+truncate",
            Algo::Naive => "naive",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alg1" => Ok(Algo::Alg1),
            "alg1+truncate" => Ok(Algo::Alg1Truncate),
            "naive" => Ok(Algo::Naive),
            other => Err(Error::InvalidParameter(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub algo: Algo,
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    pub samples_total: u64,
    pub skyline_size: usize,
    pub valid: bool,
    /// Only meaningful for the level/block algorithm.
    pub event_e: Option<bool>,
    pub levels_used: usize,
    pub wall_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl TrialRecord {
    fn csv_row(&self) -> [String; 12] {
        [
            self.trial_id.to_string(),
            self.algo.to_string(),
            self.n.to_string(),
            self.epsilon.to_string(),
            self.delta.to_string(),
            self.seed.to_string(),
            self.samples_total.to_string(),
            self.skyline_size.to_string(),
            self.valid.to_string(),
            self.event_e.map(|e| e.to_string()).unwrap_or_default(),
            self.levels_used.to_string(),
            format!("{:.3}", self.wall_ms),
        ]
    }
}

/// A trial together with the algorithm output it was scored on.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    pub result: Option<SkylineResult>,
}

/// Runs one algorithm on a fresh oracle seeded with `seed` and scores the
/// output against the true means. Algorithm failures become invalid records.
pub fn run_trial_full(instance: &Instance, config: &Config, algo: Algo, seed: u64) -> Result<TrialOutcome> {
    config.validate()?;
    let mut oracle = SamplingOracle::new(instance, seed);
    let started = Instant::now();
    let config = match algo {
        Algo::Alg1 => config.with_truncate(false),
        Algo::Alg1Truncate => config.with_truncate(true),
        Algo::Naive => *config,
    };
    let run = match algo {
        Algo::Naive => naive_skyline(&mut oracle, &config),
        Algo::Alg1 | Algo::Alg1Truncate => identify_skyline(&mut oracle, &config),
    };
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;

    let mut record = TrialRecord {
        trial_id: 0,
        algo,
        n: instance.len(),
        epsilon: config.epsilon,
        delta: config.delta,
        seed,
        samples_total: oracle.total_samples(),
        skyline_size: 0,
        valid: false,
        event_e: None,
        levels_used: 0,
        wall_ms,
        diagnostic: None,
    };
    let result = match run {
        Ok(result) => result,
        Err(err) => {
            record.diagnostic = Some(err.to_string());
            return Ok(TrialOutcome { record, result: None });
        }
    };
    debug_assert_eq!(result.samples_total, oracle.total_samples());
    let means = instance.means();
    record.skyline_size = result.skyline.len();
    record.valid = is_eps_skyline(means, &result.skyline, config.epsilon)?.valid;
    record.levels_used = result.trace.levels_used();
    if algo != Algo::Naive {
        record.event_e = Some(check_event_e(&result.trace, means, config.epsilon)?.overall);
    }
    Ok(TrialOutcome { record, result: Some(result) })
}

pub fn run_trial(instance: &Instance, config: &Config, algo: Algo, seed: u64) -> Result<TrialRecord> {
    Ok(run_trial_full(instance, config, algo, seed)?.record)
}

/// Where sweep instances come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeneratorSpec {
    /// Uniform random Bernoulli means; one instance per `n` grid value.
    Uniform,
    /// Staircase instances; `n` is determined by `epsilon` and `m`, the `n` grid is ignored.
    Staircase { m: usize },
    /// A fixed instance file; the `n` grid is ignored.
    File { path: PathBuf },
}

fn default_trials() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub n: Vec<usize>,
    pub epsilon: Vec<f64>,
    pub delta: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub base_seed: u64,
    pub algos: Vec<Algo>,
    pub output: PathBuf,
    /// Per-cell summary CSV; skipped when absent.
    #[serde(default)]
    pub summary: Option<PathBuf>,
    /// Draw a fresh instance for every trial instead of one per cell.
    #[serde(default)]
    pub resample_instance: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    index: u64,
    n: usize,
    epsilon: f64,
    delta: f64,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: SweepConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.algos.is_empty() {
            return bad("algos must not be empty");
        }
        if self.epsilon.is_empty() || self.delta.is_empty() {
            return bad("epsilon and delta grids must not be empty");
        }
        for &eps in &self.epsilon {
            for &delta in &self.delta {
                Config::new(eps, delta)?;
            }
        }
        if let GeneratorSpec::Uniform = self.generator {
            if self.n.is_empty() || self.n.contains(&0) {
                return bad("uniform generator needs a non-empty n grid of positive sizes");
            }
        }
        Ok(())
    }

    fn cells(&self) -> Vec<Cell> {
        let ns: Vec<usize> = match self.generator {
            GeneratorSpec::Uniform => self.n.clone(),
            _ => vec![0],
        };
        let mut cells = Vec::new();
        for &n in &ns {
            for &epsilon in &self.epsilon {
                for &delta in &self.delta {
                    cells.push(Cell { index: cells.len() as u64, n, epsilon, delta });
                }
            }
        }
        cells
    }

    fn make_instance(&self, cell: &Cell, seed: u64) -> Result<Instance> {
        match &self.generator {
            GeneratorSpec::Uniform => gen_uniform_random(cell.n, seed),
            GeneratorSpec::Staircase { m } => Ok(gen_staircase(cell.epsilon, *m, seed)?.instance),
            GeneratorSpec::File { path } => Instance::from_json(&std::fs::read_to_string(path)?),
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Per-trial oracle seed: `base_seed ⊕ hash(cell, trial_id)`.
pub fn trial_seed(base_seed: u64, cell: u64, trial_id: u64) -> u64 {
    base_seed ^ splitmix64(splitmix64(cell) ^ trial_id)
}

const INSTANCE_STREAM: u64 = 0x5EED_1257_A2CE_0000;

fn instance_seed(base_seed: u64, cell: u64, trial_id: Option<u64>) -> u64 {
    let salt = trial_id.map_or(u64::MAX, |t| t);
    base_seed ^ splitmix64(splitmix64(cell ^ INSTANCE_STREAM) ^ salt)
}

/// Runs every `(cell, algo, trial)` combination in parallel. Rows come back
/// ordered by cell, then algorithm, then trial id.
///
/// All algorithms in a cell share the trial seeds, so comparisons are paired.
pub fn sweep(config: &SweepConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let cells = config.cells();
    let shared: Vec<Option<Instance>> = if config.resample_instance {
        vec![None; cells.len()]
    } else {
        cells
            .iter()
            .map(|c| config.make_instance(c, instance_seed(config.base_seed, c.index, None)).map(Some))
            .collect::<Result<_>>()?
    };

    let jobs: Vec<(usize, Algo, u64)> = cells
        .iter()
        .enumerate()
        .flat_map(|(ci, _)| {
            config
                .algos
                .iter()
                .flat_map(move |&algo| (0..config.trials).map(move |t| (ci, algo, t)))
        })
        .collect();

    jobs.par_iter()
        .map(|&(ci, algo, trial_id)| {
            let cell = &cells[ci];
            let owned;
            let instance = match &shared[ci] {
                Some(inst) => inst,
                None => {
                    owned = config.make_instance(cell, instance_seed(config.base_seed, cell.index, Some(trial_id)))?;
                    &owned
                }
            };
            let run_config = Config::new(cell.epsilon, cell.delta)?;
            let seed = trial_seed(config.base_seed, cell.index, trial_id);
            let mut record = run_trial(instance, &run_config, algo, seed)?;
            record.trial_id = trial_id;
            Ok(record)
        })
        .collect()
}

pub fn write_csv<W: Write>(records: &[TrialRecord], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(CSV_COLUMNS)?;
    for r in records {
        out.write_record(r.csv_row())?;
    }
    out.flush()?;
    Ok(())
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// 95% two-sided normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

pub fn median(values: &mut [u64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_unstable();
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid] as f64
    } else {
        (values[mid - 1] as f64 + values[mid] as f64) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub algo: Algo,
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: u64,
    pub median_samples: f64,
    pub success_rate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

/// Groups records by `(algo, n, epsilon, delta)` in first-seen order.
pub fn summarize(records: &[TrialRecord]) -> Vec<CellSummary> {
    let mut groups: Vec<(CellSummary, Vec<u64>, u64)> = Vec::new();
    for r in records {
        let key = |s: &CellSummary| s.algo == r.algo && s.n == r.n && s.epsilon == r.epsilon && s.delta == r.delta;
        let slot = match groups.iter().position(|(s, _, _)| key(s)) {
            Some(i) => i,
            None => {
                groups.push((
                    CellSummary {
                        algo: r.algo,
                        n: r.n,
                        epsilon: r.epsilon,
                        delta: r.delta,
                        trials: 0,
                        median_samples: 0.0,
                        success_rate: 0.0,
                        wilson_lo: 0.0,
                        wilson_hi: 0.0,
                    },
                    Vec::new(),
                    0,
                ));
                groups.len() - 1
            }
        };
        let (summary, samples, successes) = &mut groups[slot];
        summary.trials += 1;
        samples.push(r.samples_total);
        *successes += r.valid as u64;
    }
    groups
        .into_iter()
        .map(|(mut s, mut samples, successes)| {
            s.median_samples = median(&mut samples);
            s.success_rate = successes as f64 / s.trials as f64;
            (s.wilson_lo, s.wilson_hi) = wilson_interval(successes, s.trials, Z_95);
            s
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(summary: &[CellSummary], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record([
        "algo",
        "n",
        "epsilon",
        "delta",
        "trials",
        "median_samples",
        "success_rate",
        "wilson_lo",
        "wilson_hi",
    ])?;
    for s in summary {
        out.write_record([
            s.algo.to_string(),
            s.n.to_string(),
            s.epsilon.to_string(),
            s.delta.to_string(),
            s.trials.to_string(),
            s.median_samples.to_string(),
            format!("{:.6}", s.success_rate),
            format!("{:.6}", s.wilson_lo),
            format!("{:.6}", s.wilson_hi),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Runs a sweep and writes the trial CSV (and summary, if configured).
/// Output files are created before any trial runs.
pub fn run_sweep(config: &SweepConfig) -> Result<(Vec<TrialRecord>, Vec<CellSummary>)> {
    config.validate()?;
    let output = File::create(&config.output)?;
    let summary_file = config.summary.as_deref().map(File::create).transpose()?;
    let records = sweep(config)?;
    write_csv(&records, output)?;
    let summary = summarize(&records);
    if let Some(file) = summary_file {
        write_summary_csv(&summary, file)?;
    }
    Ok((records, summary))
}

pub fn read_sweep_config(path: &Path) -> Result<SweepConfig> {
    SweepConfig::from_json(&std::fs::read_to_string(path)?)
}
