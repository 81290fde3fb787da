//! Command-line front end: argument and config-file parsing, pipelines and
//! plot-ready output.

pub mod config;
pub mod output;
mod run;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use config::{CommandKind, ConfigError, Format, RunConfig};
pub use run::{run, RunSummary};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Usage(#[from] clap::Error),
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Numeric { context: String, source: Box<dyn std::error::Error + Send + Sync> },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn numeric(context: impl Into<String>, source: impl std::error::Error + Send + Sync + 'static) -> Self {
        Self::Numeric { context: context.into(), source: Box::new(source) }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// 2 for configuration problems, 3 for numeric failures, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(e) => e.exit_code() as u8,
            Self::Config(_) => 2,
            Self::Numeric { .. } => 3,
            Self::Io { .. } => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "nhrmt",
    version,
    about = "Spectral statistics of non-Hermitian random matrices and dissipative kicked tops"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Sample a random-matrix ensemble and compute its statistics.
    Ensemble(EnsembleArgs),
    /// Sweep a dissipative kicked top and compute its statistics.
    Kickedtop(TopArgs),
    /// Sample the 2-D log-gas and compare unfoldings.
    Loggas(GasArgs),
    /// Statistics of spectra read from CSV files.
    Stats(StatsArgs),
    /// Tabulate closed-form number-variance curves.
    Analytic(AnalyticArgs),
}

type Pairs = Vec<(&'static str, &'static str, String)>;

macro_rules! push {
    ($out:ident, $sec:expr, $($key:literal => $val:expr),* $(,)?) => {
        $( if let Some(v) = &$val { $out.push(($sec, $key, v.to_string())); } )*
    };
}

macro_rules! flag {
    ($out:ident, $sec:expr, $($key:literal => $val:expr),* $(,)?) => {
        $( if $val { $out.push(($sec, $key, "true".to_string())); } )*
    };
}

#[derive(Args, Debug)]
struct Shared {
    /// Base seed of every random stream [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Table format [default: csv]
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Worker threads, 0 for all cores [default: 0]
    #[arg(long)]
    threads: Option<usize>,
    /// Config file (`key = value`, `[section]` headers) or a previous manifest.json
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Shared {
    fn pairs(&self, out: &mut Pairs) {
        push!(out, "run", "seed" => self.seed, "format" => self.format, "threads" => self.threads);
        if let Some(p) = &self.out {
            out.push(("run", "out", p.display().to_string()));
        }
    }
}

#[derive(Args, Debug)]
struct StatsFlags {
    /// Smallest target <n> of the number variance [default: 1]
    #[arg(long)]
    n_min: Option<f64>,
    /// Largest target <n> [default: 10]
    #[arg(long)]
    n_max: Option<f64>,
    /// Spacing of targets [default: 1]
    #[arg(long)]
    n_step: Option<f64>,
    /// Counting regions per target [default: 200]
    #[arg(long)]
    centers: Option<usize>,
    /// Rays per isochrone [default: 64]
    #[arg(long)]
    directions: Option<usize>,
    /// RK4 steps per ray [default: 40]
    #[arg(long)]
    steps: Option<usize>,
    /// Radius quantiles `lo,hi` of the local-statistics window [default: 0.3,0.7]
    #[arg(long)]
    window: Option<String>,
    /// Degree of the radial density fit [default: 12]
    #[arg(long)]
    fit_degree: Option<usize>,
    /// Radius fraction trimmed at each end before fitting [default: 0.005]
    #[arg(long)]
    fit_tail: Option<f64>,
    /// Spectra used for isochrone counting [default: 400]
    #[arg(long)]
    variance_members: Option<usize>,
    /// Skip writing the individual spectra
    #[arg(long)]
    no_spectra: bool,
}

impl StatsFlags {
    fn pairs(&self, out: &mut Pairs) {
        push!(out, "stats",
            "n_min" => self.n_min, "n_max" => self.n_max, "n_step" => self.n_step,
            "centers" => self.centers, "directions" => self.directions, "steps" => self.steps,
            "window" => self.window, "fit_degree" => self.fit_degree, "fit_tail" => self.fit_tail,
            "variance_members" => self.variance_members,
        );
        if self.no_spectra {
            out.push(("stats", "save_spectra", "false".into()));
        }
    }
}

#[derive(Args, Debug)]
struct EnsembleArgs {
    #[command(flatten)]
    shared: Shared,
    /// symm-gine, gine or selfdual-gine [default: gine]
    #[arg(long)]
    class: Option<String>,
    /// Matrix size; quaternion size for selfdual-gine [default: 1000]
    #[arg(long)]
    n: Option<usize>,
    /// Independent members [default: 50]
    #[arg(long)]
    members: Option<usize>,
    /// Statistics window radius as a fraction of sqrt(N) [default: 0.8]
    #[arg(long)]
    bulk: Option<f64>,
    #[command(flatten)]
    stats: StatsFlags,
}

#[derive(Args, Debug)]
struct TopArgs {
    #[command(flatten)]
    shared: Shared,
    /// oe, ue or se [default: oe]
    #[arg(long)]
    class: Option<String>,
    /// Start from the tabulated parameters (on unless disabled in a config file)
    #[arg(long)]
    paper_params: bool,
    /// J = 250 (SE 249.5) with gamma rescaled through N
    #[arg(long)]
    desk_scale: bool,
    /// Spin quantum number; SE needs a half-integer
    #[arg(long)]
    j: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    tau1: Option<f64>,
    #[arg(long)]
    tau2: Option<f64>,
    #[arg(long)]
    tau3: Option<f64>,
    #[arg(long)]
    tau4: Option<f64>,
    /// Dissipation strength [default: preset c / N]
    #[arg(long)]
    gamma: Option<f64>,
    /// OE kick `tau J_z^2 / 2J` instead of `tau J_z^2`
    #[arg(long)]
    oe_normalized: bool,
    /// Grid points per sweep axis, comma separated [default: preset]
    #[arg(long)]
    points: Option<String>,
    /// Split OE/UE spectra by parity [default: auto]
    #[arg(long, value_parser = ["auto", "on", "off"])]
    parity_sectors: Option<String>,
    #[command(flatten)]
    stats: StatsFlags,
}

#[derive(Args, Debug)]
struct GasArgs {
    #[command(flatten)]
    shared: Shared,
    /// Number of charges [default: 500]
    #[arg(long)]
    n: Option<usize>,
    /// Potential exponent, V = |z|^(2k) [default: 2]
    #[arg(long)]
    k: Option<u32>,
    /// Independent chains [default: 16]
    #[arg(long)]
    chains: Option<usize>,
    /// Recorded sweeps per chain [default: 1000]
    #[arg(long)]
    sweeps: Option<usize>,
    /// Burn-in sweeps [default: 1000]
    #[arg(long)]
    burn_in: Option<usize>,
    /// Sweeps between recorded configurations [default: 10]
    #[arg(long)]
    thinning: Option<usize>,
    /// Unfolding map [default: power-law]
    #[arg(long, value_parser = ["power-law", "radial-only", "cartesian"])]
    unfolding: Option<String>,
    #[command(flatten)]
    stats: StatsFlags,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[command(flatten)]
    shared: Shared,
    /// Directory of `re,im` spectrum files
    #[arg(long)]
    input: Option<PathBuf>,
    /// `fit` a radial density, or treat spectra as `uniform` at 1/pi [default: fit]
    #[arg(long, value_parser = ["fit", "uniform"])]
    density: Option<String>,
    /// Remove Kramers pairs before analysis
    #[arg(long)]
    dedup: bool,
    #[command(flatten)]
    stats: StatsFlags,
}

#[derive(Args, Debug)]
struct AnalyticArgs {
    #[command(flatten)]
    shared: Shared,
    /// Ginibre number variance
    #[arg(long)]
    sigma2_gine: bool,
    /// Self-dual relation Sigma2_G(<n> / sqrt 2)
    #[arg(long)]
    sigma2_selfdual: bool,
    /// Poisson reference Sigma2 = <n>
    #[arg(long)]
    sigma2_poisson: bool,
    /// Largest <n> [default: 20]
    #[arg(long)]
    n_max: Option<f64>,
    /// Spacing of <n> [default: 0.25]
    #[arg(long)]
    n_step: Option<f64>,
}

impl Sub {
    fn resolve(&self) -> (CommandKind, &Shared, Pairs) {
        let mut p = Pairs::new();
        let (kind, shared) = match self {
            Sub::Ensemble(a) => {
                push!(p, "ensemble", "class" => a.class, "n" => a.n, "members" => a.members, "bulk" => a.bulk);
                a.stats.pairs(&mut p);
                (CommandKind::Ensemble, &a.shared)
            }
            Sub::Kickedtop(a) => {
                push!(p, "kickedtop",
                    "class" => a.class, "j" => a.j, "alpha" => a.alpha, "tau" => a.tau, "k" => a.k,
                    "tau1" => a.tau1, "tau2" => a.tau2, "tau3" => a.tau3, "tau4" => a.tau4,
                    "gamma" => a.gamma, "points" => a.points, "parity_sectors" => a.parity_sectors,
                );
                flag!(p, "kickedtop", "paper_params" => a.paper_params, "desk_scale" => a.desk_scale,
                    "oe_normalized" => a.oe_normalized);
                a.stats.pairs(&mut p);
                (CommandKind::Kickedtop, &a.shared)
            }
            Sub::Loggas(a) => {
                push!(p, "loggas", "n" => a.n, "k" => a.k, "chains" => a.chains, "sweeps" => a.sweeps,
                    "burn_in" => a.burn_in, "thinning" => a.thinning, "unfolding" => a.unfolding);
                a.stats.pairs(&mut p);
                (CommandKind::Loggas, &a.shared)
            }
            Sub::Stats(a) => {
                push!(p, "stats", "density" => a.density);
                if let Some(i) = &a.input {
                    p.push(("stats", "input", i.display().to_string()));
                }
                flag!(p, "stats", "dedup" => a.dedup);
                a.stats.pairs(&mut p);
                (CommandKind::Stats, &a.shared)
            }
            Sub::Analytic(a) => {
                push!(p, "analytic", "n_max" => a.n_max, "n_step" => a.n_step);
                flag!(p, "analytic", "sigma2_gine" => a.sigma2_gine, "sigma2_selfdual" => a.sigma2_selfdual,
                    "sigma2_poisson" => a.sigma2_poisson);
                (CommandKind::Analytic, &a.shared)
            }
        };
        shared.pairs(&mut p);
        (kind, shared, p)
    }
}

/// Resolves defaults, then the config file, then flags.
pub fn parse_config<I, T>(args: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let (kind, shared, pairs) = cli.command.resolve();
    let mut cfg = RunConfig::defaults(kind);
    if let Some(path) = &shared.config {
        cfg.apply_file(path)?;
    }
    for (section, key, value) in pairs {
        cfg.set(section, key, &value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Entry point of the `nhrmt` binary.
pub fn main<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse_config(args).and_then(|cfg| run(&cfg));
    match result {
        Ok(summary) => {
            eprintln!("wrote {} files to {}", summary.outputs.len(), summary.output_dir.display());
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(e)) => {
            let _ = e.print();
            ExitCode::from(e.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
