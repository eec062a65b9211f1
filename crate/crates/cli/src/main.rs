//! `ibandit`: simulations, regret scans, fits and probes for influential
//! bandits. Every command writes `meta.json` next to its outputs; `ibandit
//! rerun --meta <file>` reproduces them byte for byte.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use influential_bandit::estimation::log::{DEFAULT_MIN_EVENTS, DEFAULT_RATING_MAX};
use influential_bandit::estimation::FitHyperparams;
use influential_bandit::experiments::{default_horizons, parse_horizons};
use influential_bandit::Error;

use config::*;

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, specs or inputs; exit code 2.
    Usage(String),
    /// Anything that went wrong while running; exit code 1.
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_)
            | Error::InvalidParameter(_)
            | Error::MissingColumn(_)
            | Error::NotSymmetric { .. }
            | Error::NotPsd { .. }
            | Error::DimensionMismatch { .. }
            | Error::ArmOutOfRange { .. }
            | Error::MixedArmCount { .. }
            | Error::InsufficientBudget { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "ibandit", version, about = "Influential bandit simulations, scans and fits")]
struct Cli {
    /// Master seed; every random draw is derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores). Does not affect outputs.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one policy for one episode; writes trace.csv and summary.json.
    Run(RunArgs),
    /// Seed-averaged regret curves; writes regret_curve.csv, curve_fits.csv
    /// and per-run slopes.
    Scan(ScanArgs),
    /// One run per random instance, one slope per run; writes slopes.csv and
    /// histogram.csv.
    Histogram(HistogramArgs),
    /// Fit interaction matrices to a ratings log; writes fits.csv,
    /// eigenvalues.csv, a_mean.csv and baseline.csv.
    Fit(FitArgs),
    /// Estimate A online with the O(K^2) probe schedule; writes probe.json.
    Probe(ProbeArgs),
    /// Solve the relaxed benchmark at one horizon; writes qp.json.
    Qp(QpArgs),
    /// Generate a synthetic ratings log; writes ratings.csv and instance.json.
    Synth(SynthArgs),
    /// Repeat the command recorded in a meta.json.
    Rerun(RerunArgs),
}

const INSTANCE_HELP: &str = "prop2, prop3, random:k=<K> or an instance JSON file";

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, help = INSTANCE_HELP)]
    instance: String,
    /// ilcb, ilcb:B=<scale>, lcb, fixed:<arm, 1-based> or round_robin.
    #[arg(long)]
    policy: String,
    /// Horizon.
    #[arg(long = "T")]
    horizon: u64,
    /// Override the instance noise: none, uniform:<b> or gaussian:<sigma>.
    #[arg(long)]
    noise: Option<String>,
    /// relaxation, known or auto.
    #[arg(long, default_value = "relaxation")]
    benchmark: String,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long, help = INSTANCE_HELP)]
    instance: String,
    /// Comma-separated policies.
    #[arg(long, default_value = "ilcb,lcb")]
    policies: String,
    /// start:end:x<factor> or a comma-separated list (default 128:16384:x2).
    #[arg(long)]
    horizons: Option<String>,
    /// Seeds per instance.
    #[arg(long, default_value_t = 100)]
    seeds: usize,
    /// Pool of random instances (random:k=<K> only).
    #[arg(long)]
    n_instances: Option<usize>,
    #[arg(long)]
    noise: Option<String>,
    #[arg(long, default_value = "relaxation")]
    benchmark: String,
}

#[derive(Args, Debug)]
struct HistogramArgs {
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 100)]
    n_instances: usize,
    #[arg(long, default_value = "ilcb")]
    policy: String,
    #[arg(long)]
    horizons: Option<String>,
    #[arg(long, default_value_t = 20)]
    bins: usize,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// CSV with columns user,timestamp,arms,rating.
    #[arg(long)]
    ratings: PathBuf,
    #[arg(long)]
    k: usize,
    /// psd or indefinite.
    #[arg(long, default_value = "psd")]
    parametrization: String,
    #[arg(long, default_value_t = DEFAULT_RATING_MAX)]
    rating_max: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_EVENTS)]
    min_events: usize,
    /// name,index pairs for arm names in the ratings file.
    #[arg(long)]
    arm_map: Option<PathBuf>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    min_relative_improvement: Option<f64>,
    #[arg(long)]
    init_scale: Option<f64>,
    /// max_abs, frobenius or spectral.
    #[arg(long, default_value = "max_abs")]
    norm: String,
    /// Users fitted between flushes.
    #[arg(long, default_value_t = 64)]
    chunk: usize,
}

#[derive(Args, Debug)]
struct ProbeArgs {
    #[arg(long, help = INSTANCE_HELP)]
    instance: String,
    #[arg(long)]
    noise: Option<String>,
    /// Maximum pulls (default: exactly what the schedule needs).
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args, Debug)]
struct QpArgs {
    #[arg(long, help = INSTANCE_HELP)]
    instance: String,
    #[arg(long = "T")]
    horizon: u64,
    #[arg(long, default_value_t = influential_bandit::benchmark::DEFAULT_QP_TOLERANCE)]
    tolerance: f64,
    #[arg(long, default_value_t = influential_bandit::benchmark::DEFAULT_QP_MAX_ITERATIONS)]
    max_iterations: usize,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, help = INSTANCE_HELP)]
    instance: String,
    #[arg(long, default_value_t = 50)]
    users: usize,
    #[arg(long, default_value_t = DEFAULT_MIN_EVENTS)]
    events: usize,
    /// uniform or sticky:<p>.
    #[arg(long, default_value = "uniform")]
    generator: String,
    #[arg(long)]
    noise: Option<String>,
    #[arg(long, default_value_t = DEFAULT_RATING_MAX)]
    rating_max: f64,
}

#[derive(Args, Debug)]
struct RerunArgs {
    #[arg(long)]
    meta: PathBuf,
}

fn horizons(spec: Option<&str>) -> Result<Vec<u64>, Failure> {
    match spec {
        Some(s) => Ok(parse_horizons(s)?),
        None => Ok(default_horizons()),
    }
}

fn absolute(path: &std::path::Path) -> String {
    std::fs::canonicalize(path)
        .unwrap_or_else(|_| path.to_path_buf())
        .to_string_lossy()
        .into_owned()
}

fn resolve(command: Command) -> Result<Job, Failure> {
    let defaults = FitHyperparams::default();
    Ok(match command {
        Command::Run(a) => Job::Run(RunConfig {
            instance: InstanceSource::parse(&a.instance)?,
            policy: a.policy,
            horizon: a.horizon,
            noise: a.noise,
            benchmark: a.benchmark,
        }),
        Command::Scan(a) => Job::Scan(ScanConfig {
            instance: InstanceSource::parse(&a.instance)?,
            policies: a
                .policies
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect(),
            horizons: horizons(a.horizons.as_deref())?,
            seeds: a.seeds,
            n_instances: a.n_instances,
            noise: a.noise,
            benchmark: a.benchmark,
        }),
        Command::Histogram(a) => Job::Histogram(HistogramConfig {
            k: a.k,
            n_instances: a.n_instances,
            policy: a.policy,
            horizons: horizons(a.horizons.as_deref())?,
            bins: a.bins,
        }),
        Command::Fit(a) => Job::Fit(FitConfig {
            ratings: absolute(&a.ratings),
            k: a.k,
            parametrization: a.parametrization,
            rating_max: a.rating_max,
            min_events: a.min_events,
            arm_map: a.arm_map.as_deref().map(absolute),
            learning_rate: a.learning_rate.unwrap_or(defaults.learning_rate),
            momentum: a.momentum.unwrap_or(defaults.momentum),
            max_iterations: a.max_iterations.unwrap_or(defaults.max_iterations),
            patience: a.patience.unwrap_or(defaults.patience),
            min_relative_improvement: a.min_relative_improvement.unwrap_or(defaults.min_relative_improvement),
            init_scale: a.init_scale.unwrap_or(defaults.init_scale),
            norm: a.norm,
            chunk: a.chunk,
        }),
        Command::Probe(a) => Job::Probe(ProbeConfig {
            instance: InstanceSource::parse(&a.instance)?,
            noise: a.noise,
            budget: a.budget,
        }),
        Command::Qp(a) => Job::Qp(QpConfig {
            instance: InstanceSource::parse(&a.instance)?,
            horizon: a.horizon,
            tolerance: a.tolerance,
            max_iterations: a.max_iterations,
        }),
        Command::Synth(a) => Job::Synth(SynthConfig {
            instance: InstanceSource::parse(&a.instance)?,
            users: a.users,
            events: a.events,
            generator: a.generator,
            noise: a.noise,
            rating_max: a.rating_max,
        }),
        Command::Rerun(_) => unreachable!("handled by the caller"),
    })
}

fn read_meta(path: &std::path::Path) -> Result<Meta, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let meta: Meta = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("{} is not a valid meta.json: {e}", path.display())))?;
    if meta.tool != TOOL {
        return Err(Failure::Usage(format!("{} was not written by {TOOL}", path.display())));
    }
    Ok(meta)
}

fn main_inner(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::Usage("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    let meta = match cli.command {
        Command::Rerun(a) => {
            if cli.seed.is_some() {
                return Err(Failure::Usage("rerun takes its seed from meta.json; drop --seed".into()));
            }
            read_meta(&a.meta)?
        }
        command => Meta::new(cli.seed.unwrap_or(0), resolve(command)?),
    };
    eprintln!("{}: seed {}, writing to {}", meta.config.name(), meta.seed, cli.out.display());
    commands::execute(&meta, &cli.out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
