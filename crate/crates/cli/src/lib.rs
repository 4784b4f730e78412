//! Experiment runner for the `mpmsa` library.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;

use config::ExperimentConfig;
use output::{write_manifest, OutputDir, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Io(std::io::Error),
    /// A check ran to completion and reported failures.
    Failed(String),
    Internal(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Failed(m) => write!(f, "check failed: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<mpmsa::Error> for CliError {
    fn from(e: mpmsa::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) | CliError::Failed(_) | CliError::Internal(_) => EXIT_FAILED,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mpmsa", version, about = "Multi-particle multi-scale analysis experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML experiment configuration; defaults apply when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config, which overrides MPMSA_SEED.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo trial count for every estimator.
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exhaustive and randomized checks of the geometric lemmas.
    GeometryCheck {
        #[arg(long)]
        max_particles: Option<usize>,
    },
    /// Eigenvalues of one realization of a cube operator.
    Spectrum {
        #[arg(long)]
        half_side: Option<i64>,
        #[arg(long, default_value_t = 0)]
        realization: u64,
    },
    /// Frequency of cubes failing the complete non-resonance test.
    Wegner {
        #[arg(long, value_delimiter = ',')]
        half_sides: Option<Vec<i64>>,
        #[arg(long, allow_negative_numbers = true)]
        energy: Option<f64>,
    },
    /// Singularity probabilities along the scale sequence.
    MsaRun {
        #[arg(long)]
        l0: Option<i64>,
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Singularity probabilities against the interaction amplitude.
    WeakintScan {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        h_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        energies: Option<Vec<f64>>,
    },
    /// Moment growth and eigenfunction decay fits.
    Dynamics {
        #[arg(long, value_delimiter = ',')]
        t_max: Option<Vec<f64>>,
        #[arg(long)]
        half_side: Option<i64>,
    },
    /// Aggregates the records in the output directory into summary tables.
    Report,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GeometryCheck { .. } => "geometry-check",
            Command::Spectrum { .. } => "spectrum",
            Command::Wegner { .. } => "wegner",
            Command::MsaRun { .. } => "msa-run",
            Command::WeakintScan { .. } => "weakint-scan",
            Command::Dynamics { .. } => "dynamics",
            Command::Report => "report",
        }
    }

    /// Writes subcommand overrides into the configuration.
    fn apply(&self, cfg: &mut ExperimentConfig) {
        match self {
            Command::GeometryCheck { max_particles: Some(n) } => cfg.geometry.max_particles = *n,
            Command::Wegner { half_sides, energy } => {
                if let Some(v) = half_sides {
                    cfg.msa.wegner_half_sides_grid_units = v.clone();
                }
                if let Some(e) = energy {
                    cfg.msa.e0_energy_units = *e;
                    cfg.msa.energies_energy_units.clear();
                }
            }
            Command::MsaRun { l0, k_max } => {
                if let Some(l) = l0 {
                    cfg.msa.l0_grid_units = *l;
                }
                if let Some(k) = k_max {
                    cfg.msa.k_max = *k;
                }
            }
            Command::WeakintScan { h_grid, energies } => {
                if let Some(h) = h_grid {
                    cfg.msa.h_grid_energy_units = h.clone();
                }
                if let Some(e) = energies {
                    cfg.msa.energies_energy_units = e.clone();
                }
            }
            Command::Dynamics { t_max, half_side } => {
                if let Some(t) = t_max {
                    cfg.dynamics.t_max_inverse_energy_units = t.clone();
                }
                if let Some(l) = half_side {
                    cfg.dynamics.half_side_grid_units = *l;
                }
            }
            _ => {}
        }
    }
}

/// Seed precedence: flag, then config, then `MPMSA_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>, env: Option<&str>) -> Result<u64, CliError> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    match env {
        Some(v) => v.trim().parse().map_err(|_| CliError::Validation(format!("MPMSA_SEED={v:?} is not an integer"))),
        None => Ok(0),
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.global.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    let env = std::env::var("MPMSA_SEED").ok();
    let seed = resolve_seed(cli.global.seed, cfg.master_seed, env.as_deref())?;
    if let Some(t) = cli.global.trials {
        cfg.msa.trials = t;
        cfg.dynamics.trials = t;
        cfg.geometry.randomized_trials = t;
    }
    if let Some(out) = &cli.global.out {
        cfg.output.directory = out.to_string_lossy().into_owned();
    }
    cli.command.apply(&mut cfg);
    cfg.resolve(seed)
}

/// Parses `args` and runs the subcommand; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("mpmsa {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    let threads = cli.global.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let mut out = OutputDir::create(&PathBuf::from(&cfg.output.directory), &cfg)?;
    let mut notes = Vec::new();
    let result = pool.install(|| commands::dispatch(&cli.command, &cfg, &mut out, &mut notes));
    let manifest = RunManifest {
        config_hash: out.hash(),
        artifact_version: env!("CARGO_PKG_VERSION"),
        subcommand: cli.command.name(),
        threads: pool.current_num_threads(),
        started_unix_seconds: started,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        record_counts: out.counts(),
        notes: &notes,
    };
    write_manifest(&out, &manifest)?;
    result
}
