use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use eps_skyline::harness::{read_sweep_config, run_sweep, run_trial_full, CellSummary};
use eps_skyline::{gen_staircase, gen_uniform_random, is_eps_skyline, Algo, Config, Error, FinderKind, Instance};

#[derive(Parser)]
#[command(name = "eps-skyline", version, about = "Approximate skyline identification for stochastic bandits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on an instance file and score the result.
    Run {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_parser = parse_algo)]
        algo: Algo,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Prune the skyline to O(1/ε) members.
        #[arg(long)]
        truncate: bool,
        #[arg(long, value_enum, default_value_t = Finder::MedianElimination)]
        finder: Finder,
    },
    /// Run a parameter sweep described by a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate an instance file.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Check a candidate skyline against the true means of an instance.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        /// Comma-separated arm indices, e.g. "0,3,7".
        #[arg(long)]
        skyline: String,
        #[arg(long)]
        epsilon: f64,
    },
}

#[derive(Subcommand)]
enum GenKind {
    /// Bernoulli arms with uniform random means.
    Uniform {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Staircase hard instance; also writes a sidecar with the planted arms.
    Staircase {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Sidecar path; defaults to `<out>.staircase.json`.
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Finder {
    MedianElimination,
    Uniform,
}

impl From<Finder> for FinderKind {
    fn from(f: Finder) -> Self {
        match f {
            Finder::MedianElimination => FinderKind::MedianElimination,
            Finder::Uniform => FinderKind::Uniform,
        }
    }
}

fn parse_algo(s: &str) -> Result<Algo, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Error carrying the process exit code: 1 for validation, 2 for I/O.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let io = match &err {
            Error::Io(_) => true,
            Error::Json(e) => e.is_io(),
            Error::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(_)),
            _ => false,
        };
        Failure { code: if io { 2 } else { 1 }, message: err.to_string() }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) })
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) })
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    Instance::from_json(&read_text(path)?).map_err(|e| Failure::validation(format!("{}: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::validation(e.to_string()))?;
    println!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct RunOutput<'a> {
    record: &'a eps_skyline::TrialRecord,
    skyline: Option<&'a [usize]>,
}

fn parse_skyline(text: &str) -> Result<Vec<usize>, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Failure::validation(format!("bad arm index '{s}' in --skyline"))))
        .collect()
}

fn print_summary(summary: &[CellSummary]) {
    println!("algo,n,epsilon,delta,trials,median_samples,success_rate,wilson_lo,wilson_hi");
    for s in summary {
        println!(
            "{},{},{},{},{},{},{:.4},{:.4},{:.4}",
            s.algo, s.n, s.epsilon, s.delta, s.trials, s.median_samples, s.success_rate, s.wilson_lo, s.wilson_hi
        );
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { instance, algo, epsilon, delta, seed, truncate, finder } => {
            let inst = load_instance(&instance)?;
            let algo = match (algo, truncate) {
                (Algo::Alg1, true) => Algo::Alg1Truncate,
                (Algo::Naive, true) => return Err(Failure::validation("--truncate applies to alg1 only")),
                (a, _) => a,
            };
            let config = Config::new(epsilon, delta)?.with_finder(finder.into());
            let outcome = run_trial_full(&inst, &config, algo, seed)?;
            print_json(&RunOutput {
                record: &outcome.record,
                skyline: outcome.result.as_ref().map(|r| r.skyline.as_slice()),
            })?;
            match &outcome.record.diagnostic {
                Some(msg) => Err(Failure::validation(msg.clone())),
                None => Ok(()),
            }
        }
        Command::Sweep { config } => {
            let cfg = read_sweep_config(&config)?;
            let (records, summary) = run_sweep(&cfg)?;
            eprintln!("wrote {} rows to {}", records.len(), cfg.output.display());
            print_summary(&summary);
            Ok(())
        }
        Command::Gen { kind } => match kind {
            GenKind::Uniform { n, seed, out } => write_text(&out, &gen_uniform_random(n, seed)?.to_json()?),
            GenKind::Staircase { epsilon, m, seed, out, sidecar } => {
                let st = gen_staircase(epsilon, m, seed)?;
                let sidecar = sidecar.unwrap_or_else(|| {
                    let mut name = out.clone().into_os_string();
                    name.push(".staircase.json");
                    PathBuf::from(name)
                });
                write_text(&out, &st.instance.to_json()?)?;
                let meta = serde_json::to_string_pretty(&st.sidecar()).map_err(Error::from)?;
                write_text(&sidecar, &meta)
            }
        },
        Command::Verify { instance, skyline, epsilon } => {
            let inst = load_instance(&instance)?;
            let members = parse_skyline(&skyline)?;
            if !(epsilon >= 0.0) {
                return Err(Failure::validation(format!("epsilon must be non-negative, got {epsilon}")));
            }
            let report = is_eps_skyline(inst.means(), &members, epsilon)?;
            print_json(&report)?;
            if report.valid {
                Ok(())
            } else {
                Err(Failure::validation(format!("not an {epsilon}-skyline: {} violations", report.violations.len())))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
