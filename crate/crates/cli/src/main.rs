//! Command-line front end for the driven Rabi model laboratory.
//!
//! Each subcommand runs one experiment and writes plot-ready CSV files plus
//! JSON provenance sidecars. Identical configuration and seed give
//! bit-identical CSV output.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 resource cap reached.

mod cache;
mod config;
mod experiments;
mod output;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use config::{ClassicalMode, RunConfig, WignerFormat};
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, Copy)]
enum NtrArg {
    Auto,
    Fixed(usize),
}

impl FromStr for NtrArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            Ok(NtrArg::Auto)
        } else {
            s.parse::<usize>()
                .map(NtrArg::Fixed)
                .map_err(|_| format!("expected an integer or 'auto', got '{s}'"))
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rabi-lab", version, about = "Driven Rabi model laboratory")]
struct Cli {
    /// JSON configuration file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every stochastic choice (random times, sampling).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long = "out", global = true)]
    out: Option<PathBuf>,
    /// Decomposition cache directory (default: <out>/cache).
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Boson truncation: an integer, or 'auto' for the doubling schedule.
    #[arg(long, global = true)]
    ntr: Option<NtrArg>,
    /// Spin splitting ω.
    #[arg(long, global = true)]
    omega: Option<f64>,
    /// Spin-boson coupling g.
    #[arg(long, global = true)]
    g: Option<f64>,
    /// Drive amplitude λ.
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Pre-quench coupling.
    #[arg(long, global = true)]
    g0: Option<f64>,
    /// Pre-quench spin splitting.
    #[arg(long, global = true)]
    omega0: Option<f64>,
    /// Pre-quench drive amplitude.
    #[arg(long, global = true)]
    lambda0: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full spectrum with parity expectations.
    Spectrum,
    /// Level-spacing histogram with Poisson/Wigner-Dyson references.
    Levelstats(LevelstatsArgs),
    /// Quench statistics: long-time mean, variance, participation, Γ(l).
    #[command(name = "quench-stats")]
    QuenchStats(QuenchStatsArgs),
    /// Random-time samples of n̄(t) against the matching normal reference.
    Gaussianity(GaussianityArgs),
    /// Wigner distribution of the reduced field state.
    Wigner(WignerArgs),
    /// Mean-field dynamics: trajectory, Poincaré section or Lyapunov run.
    Classical(ClassicalArgs),
    /// Long-time statistics across a coupling sweep.
    Sweep(SweepArgs),
    /// Adiabatic potential curves.
    Potentials(PotentialsArgs),
}

#[derive(Debug, Args)]
struct LevelstatsArgs {
    #[arg(long)]
    emin: Option<f64>,
    #[arg(long)]
    emax: Option<f64>,
    /// Histogram bin count (default: Freedman-Diaconis).
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Debug, Args)]
struct QuenchStatsArgs {
    /// Observable: n|x|p|sx|sy|sz|xsx.
    #[arg(long)]
    observable: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    tmax: Option<f64>,
}

#[derive(Debug, Args)]
struct GaussianityArgs {
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    tmax: Option<f64>,
}

#[derive(Debug, Args)]
struct WignerArgs {
    /// Evolution time of the quenched state.
    #[arg(long)]
    time: Option<f64>,
    /// Plot the eigenstate closest to this energy instead.
    #[arg(long)]
    eigenstate_energy: Option<f64>,
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// csv | binary.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Debug, Args)]
struct ClassicalArgs {
    /// trajectory | section | lyapunov.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    x: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    z: Option<f64>,
    #[arg(long)]
    dphi: Option<f64>,
    #[arg(long)]
    tend: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    /// Section surface coordinate: x|p|z|dphi.
    #[arg(long)]
    surface: Option<String>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    lyapunov_t: Option<f64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    gmin: Option<f64>,
    #[arg(long)]
    gmax: Option<f64>,
    #[arg(long)]
    gsteps: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    tmax: Option<f64>,
}

#[derive(Debug, Args)]
struct PotentialsArgs {
    #[arg(long)]
    xmin: Option<f64>,
    #[arg(long)]
    xmax: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

/// Error category driving the process exit code.
enum Failure {
    Config(anyhow::Error),
    ResourceCap(anyhow::Error),
    Numerical(anyhow::Error),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::ResourceCap(_) => 4,
            Failure::Numerical(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::ResourceCap(e) | Failure::Numerical(e) => e,
        }
    }
}

fn classify(err: anyhow::Error) -> Failure {
    for cause in err.chain() {
        if let Some(d) = cause.downcast_ref::<rabi_core::diagnostics::DiagnosticsError>() {
            if matches!(d, rabi_core::diagnostics::DiagnosticsError::ResourceCap { .. }) {
                return Failure::ResourceCap(err);
            }
        }
    }
    Failure::Numerical(err)
}

fn build_config(cli: &Cli) -> Result<(RunConfig, &'static str), Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(Failure::Config)?,
        None => RunConfig::built_in_default(),
    };

    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(cache) = &cli.cache {
        cfg.cache_dir = Some(cache.clone());
    }
    if let Some(v) = cli.omega {
        cfg.model.omega = v;
    }
    if let Some(v) = cli.g {
        cfg.model.g = v;
    }
    if let Some(v) = cli.lambda {
        cfg.model.lambda = v;
    }
    if let Some(v) = cli.omega0 {
        cfg.quench_initial.omega = v;
    }
    if let Some(v) = cli.g0 {
        cfg.quench_initial.g = v;
    }
    if let Some(v) = cli.lambda0 {
        cfg.quench_initial.lambda = v;
    }
    match cli.ntr {
        Some(NtrArg::Fixed(n)) => {
            cfg.model.n_tr = n;
            cfg.ntr_auto_tol = None;
        }
        Some(NtrArg::Auto) => {
            cfg.ntr_auto_tol = cfg.ntr_auto_tol.or(Some(1e-6));
        }
        None => {}
    }

    let experiment = match &cli.command {
        Command::Spectrum => "spectrum",
        Command::Levelstats(a) => {
            if let Some(v) = a.emin {
                cfg.levelstats.e_min = v;
            }
            if let Some(v) = a.emax {
                cfg.levelstats.e_max = v;
            }
            if a.bins.is_some() {
                cfg.levelstats.bins = a.bins;
            }
            "levelstats"
        }
        Command::QuenchStats(a) => {
            if let Some(v) = &a.observable {
                cfg.quench_stats.observable = v.clone();
            }
            if let Some(v) = a.samples {
                cfg.quench_stats.n_samples = v;
            }
            if let Some(v) = a.tmax {
                cfg.quench_stats.t_max = v;
            }
            "quench-stats"
        }
        Command::Gaussianity(a) => {
            if let Some(v) = a.samples {
                cfg.gaussianity.n_samples = v;
            }
            if let Some(v) = a.tmax {
                cfg.gaussianity.t_max = v;
            }
            "gaussianity"
        }
        Command::Wigner(a) => {
            if let Some(v) = a.time {
                cfg.wigner.time = v;
            }
            if a.eigenstate_energy.is_some() {
                cfg.wigner.eigenstate_energy = a.eigenstate_energy;
            }
            if a.half_width.is_some() {
                cfg.wigner.half_width = a.half_width;
            }
            if let Some(v) = a.points {
                cfg.wigner.points = v;
            }
            if let Some(v) = &a.format {
                cfg.wigner.format = match v.as_str() {
                    "csv" => WignerFormat::Csv,
                    "binary" => WignerFormat::Binary,
                    other => {
                        return Err(Failure::Config(anyhow::anyhow!(
                            "unknown wigner format '{other}'"
                        )))
                    }
                };
            }
            "wigner"
        }
        Command::Classical(a) => {
            if let Some(v) = &a.mode {
                cfg.classical.mode = match v.as_str() {
                    "trajectory" => ClassicalMode::Trajectory,
                    "section" => ClassicalMode::Section,
                    "lyapunov" => ClassicalMode::Lyapunov,
                    other => {
                        return Err(Failure::Config(anyhow::anyhow!(
                            "unknown classical mode '{other}'"
                        )))
                    }
                };
            }
            if let Some(v) = a.x {
                cfg.classical.x = v;
            }
            if let Some(v) = a.p {
                cfg.classical.p = v;
            }
            if let Some(v) = a.z {
                cfg.classical.z = v;
            }
            if let Some(v) = a.dphi {
                cfg.classical.dphi = v;
            }
            if let Some(v) = a.tend {
                cfg.classical.t_end = v;
            }
            if let Some(v) = a.dt {
                cfg.classical.dt = v;
            }
            if let Some(v) = a.rtol {
                cfg.classical.rtol = v;
            }
            if let Some(v) = &a.surface {
                cfg.classical.surface_coord = v.clone();
            }
            if let Some(v) = a.level {
                cfg.classical.surface_level = v;
            }
            if let Some(v) = a.lyapunov_t {
                cfg.classical.lyapunov_t = v;
            }
            "classical"
        }
        Command::Sweep(a) => {
            if let Some(v) = a.gmin {
                cfg.sweep.g_min = v;
            }
            if let Some(v) = a.gmax {
                cfg.sweep.g_max = v;
            }
            if let Some(v) = a.gsteps {
                cfg.sweep.g_steps = v;
            }
            if let Some(v) = a.samples {
                cfg.sweep.n_samples = v;
            }
            if let Some(v) = a.tmax {
                cfg.sweep.t_max = v;
            }
            "sweep"
        }
        Command::Potentials(a) => {
            if let Some(v) = a.xmin {
                cfg.potentials.x_min = v;
            }
            if let Some(v) = a.xmax {
                cfg.potentials.x_max = v;
            }
            if let Some(v) = a.points {
                cfg.potentials.points = v;
            }
            "potentials"
        }
    };

    cfg.model.to_params().map_err(Failure::Config)?;
    cfg.quench_initial.to_params().map_err(Failure::Config)?;
    Ok((cfg, experiment))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (mut cfg, experiment) = build_config(&cli)?;
    if let Some(threads) = cfg.parallelism {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Config(anyhow::anyhow!("cannot size the thread pool: {e}")))?;
    }
    let ntr_evidence = experiments::resolve_ntr(&mut cfg, experiment).map_err(classify)?;
    let cache = cache::Cache::new(cfg.cache_dir()).map_err(Failure::Config)?;
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| Failure::Config(anyhow::anyhow!("cannot create output dir: {e}")))?;

    let runner = experiments::Runner { config: &cfg, cache: &cache, experiment, ntr_evidence };
    let outcome = match experiment {
        "spectrum" => runner.spectrum(),
        "levelstats" => runner.levelstats(),
        "quench-stats" => runner.quench_stats(),
        "gaussianity" => runner.gaussianity(),
        "wigner" => runner.wigner(),
        "classical" => runner.classical(),
        "sweep" => runner.sweep(),
        "potentials" => runner.potentials(),
        _ => unreachable!(),
    }
    .map_err(classify)?;

    for file in &outcome.files {
        println!("{}", file.display());
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(failure) = run(cli) {
        eprintln!("error: {:#}", failure.error());
        std::process::exit(failure.code());
    }
}
