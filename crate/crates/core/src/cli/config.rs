//! Run configuration: defaults, `key = value` config files and flag overrides.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::ensembles::EnsembleClass;
use crate::kickedtop::{Scale, Spin, SweptParam, TopClass, TopError, TopParams};
use crate::sampler::LogGasConfig;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("unknown key `{key}` in [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("`{key}`: cannot parse `{value}` as {expected}")]
    TypeMismatch { key: String, value: String, expected: &'static str },
    #[error("missing required field `{0}`")]
    Missing(String),
    #[error("line {line}: {detail}")]
    Syntax { line: usize, detail: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read config {path}: {detail}")]
    Read { path: PathBuf, detail: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Ensemble,
    Kickedtop,
    Loggas,
    Stats,
    Analytic,
}

impl CommandKind {
    pub fn tag(self) -> &'static str {
        match self {
            Self::Ensemble => "ensemble",
            Self::Kickedtop => "kickedtop",
            Self::Loggas => "loggas",
            Self::Stats => "stats",
            Self::Analytic => "analytic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Whether OE/UE spectra are split into their two parity sectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ParityMode {
    /// On for OE and UE, off for SE.
    Auto,
    On,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GasUnfolding {
    PowerLaw,
    RadialOnly,
    Cartesian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DensityMode {
    /// Polynomial fit of the radial density; isochrone counting.
    Fit,
    /// Already flat at `1 / pi`; disc counting.
    Uniform,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnsembleOptions {
    pub class: EnsembleClass,
    pub n: usize,
    pub members: usize,
    /// Local statistics use `|z| <= bulk sqrt(N)`.
    pub bulk: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TopOptions {
    pub class: TopClass,
    /// Start from the tabulated parameter set.
    pub paper_params: bool,
    /// `J = 250` (SE `249.5`) instead of `1000` (`999.5`).
    pub desk_scale: bool,
    pub j: Option<f64>,
    pub alpha: Option<f64>,
    pub tau: Option<f64>,
    pub k: Option<f64>,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub tau3: Option<f64>,
    pub tau4: Option<f64>,
    /// Overrides the `c / N` dissipation of the preset.
    pub gamma: Option<f64>,
    pub oe_normalized: bool,
    /// Grid points per sweep axis; empty keeps the preset.
    pub points: Vec<usize>,
    pub parity_sectors: ParityMode,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LogGasOptions {
    pub n: usize,
    pub k: u32,
    pub chains: usize,
    pub sweeps: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub unfolding: GasUnfolding,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StatsOptions {
    /// Directory of `*.csv` spectra (`stats` command only).
    pub input: Option<PathBuf>,
    pub density: DensityMode,
    pub fit_degree: usize,
    pub fit_tail: f64,
    /// Pooled radius quantiles bounding the local-statistics window.
    pub window: (f64, f64),
    pub dedup: bool,
    pub n_min: f64,
    pub n_max: f64,
    pub n_step: f64,
    pub centers: usize,
    pub directions: usize,
    pub steps: usize,
    /// Spectra used for isochrone counting, evenly subsampled.
    pub variance_members: usize,
    pub save_spectra: bool,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AnalyticOptions {
    pub sigma2_gine: bool,
    pub sigma2_selfdual: bool,
    pub sigma2_poisson: bool,
    pub n_max: f64,
    pub n_step: f64,
}

/// Fully resolved configuration of one run.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub output_dir: PathBuf,
    pub base_seed: u64,
    pub format: Format,
    /// Worker threads, 0 for all cores.
    pub threads: usize,
    pub ensemble: EnsembleOptions,
    pub kickedtop: TopOptions,
    pub loggas: LogGasOptions,
    pub stats: StatsOptions,
    pub analytic: AnalyticOptions,
}

impl RunConfig {
    pub fn defaults(command: CommandKind) -> Self {
        Self {
            command,
            output_dir: PathBuf::from("out"),
            base_seed: 0,
            format: Format::Csv,
            threads: 0,
            ensemble: EnsembleOptions { class: EnsembleClass::GinE, n: 1000, members: 50, bulk: 0.8 },
            kickedtop: TopOptions {
                class: TopClass::OE,
                paper_params: true,
                desk_scale: false,
                j: None,
                alpha: None,
                tau: None,
                k: None,
                tau1: None,
                tau2: None,
                tau3: None,
                tau4: None,
                gamma: None,
                oe_normalized: false,
                points: Vec::new(),
                parity_sectors: ParityMode::Auto,
            },
            loggas: LogGasOptions {
                n: 500,
                k: 2,
                chains: 16,
                sweeps: 1000,
                burn_in: 1000,
                thinning: 10,
                unfolding: GasUnfolding::PowerLaw,
            },
            stats: StatsOptions {
                input: None,
                density: DensityMode::Fit,
                fit_degree: 12,
                fit_tail: crate::spectra::ANNULUS_TAIL,
                window: (0.3, 0.7),
                dedup: false,
                n_min: 1.0,
                n_max: 10.0,
                n_step: 1.0,
                centers: 200,
                directions: 64,
                steps: 40,
                variance_members: 400,
                save_spectra: true,
            },
            analytic: AnalyticOptions {
                sigma2_gine: false,
                sigma2_selfdual: false,
                sigma2_poisson: false,
                n_max: 20.0,
                n_step: 0.25,
            },
        }
    }

    /// Applies one `key = value` setting from `[section]`.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let unknown = || ConfigError::UnknownKey { section: section.to_string(), key: key.clone() };
        match section {
            "run" => match key.as_str() {
                "seed" => self.base_seed = parse(&key, value, "an unsigned 64-bit integer")?,
                "out" => self.output_dir = PathBuf::from(value),
                "format" => self.format = parse_enum(&key, value, "csv or json")?,
                "threads" => self.threads = parse(&key, value, "a thread count")?,
                _ => return Err(unknown()),
            },
            "ensemble" => {
                let o = &mut self.ensemble;
                match key.as_str() {
                    "class" => o.class = parse_from_str(&key, value, "symm-gine, gine or selfdual-gine")?,
                    "n" => o.n = parse(&key, value, "a matrix size")?,
                    "members" => o.members = parse(&key, value, "a member count")?,
                    "bulk" => o.bulk = parse(&key, value, "a fraction of sqrt(N)")?,
                    _ => return Err(unknown()),
                }
            }
            "kickedtop" => {
                let o = &mut self.kickedtop;
                let f = |v: &str| parse::<f64>(&key, v, "a number");
                match key.as_str() {
                    "class" => o.class = parse_from_str(&key, value, "oe, ue or se")?,
                    "paper_params" => o.paper_params = parse(&key, value, "true or false")?,
                    "desk_scale" => o.desk_scale = parse(&key, value, "true or false")?,
                    "oe_normalized" => o.oe_normalized = parse(&key, value, "true or false")?,
                    "j" => o.j = optional(value, f)?,
                    "alpha" => o.alpha = optional(value, f)?,
                    "tau" => o.tau = optional(value, f)?,
                    "k" => o.k = optional(value, f)?,
                    "tau1" => o.tau1 = optional(value, f)?,
                    "tau2" => o.tau2 = optional(value, f)?,
                    "tau3" => o.tau3 = optional(value, f)?,
                    "tau4" => o.tau4 = optional(value, f)?,
                    "gamma" => o.gamma = optional(value, f)?,
                    "points" => {
                        o.points = if value.is_empty() || value == "preset" {
                            Vec::new()
                        } else {
                            value
                                .split(',')
                                .map(|p| parse(&key, p.trim(), "a comma-separated list of point counts"))
                                .collect::<Result<_, _>>()?
                        }
                    }
                    "parity_sectors" => o.parity_sectors = parse_enum(&key, value, "auto, on or off")?,
                    _ => return Err(unknown()),
                }
            }
            "loggas" => {
                let o = &mut self.loggas;
                match key.as_str() {
                    "n" => o.n = parse(&key, value, "a point count")?,
                    "k" => o.k = parse(&key, value, "a positive integer exponent")?,
                    "chains" => o.chains = parse(&key, value, "a chain count")?,
                    "sweeps" => o.sweeps = parse(&key, value, "a sweep count")?,
                    "burn_in" => o.burn_in = parse(&key, value, "a sweep count")?,
                    "thinning" => o.thinning = parse(&key, value, "a sweep count")?,
                    "unfolding" => o.unfolding = parse_enum(&key, value, "power-law, radial-only or cartesian")?,
                    _ => return Err(unknown()),
                }
            }
            "stats" => {
                let o = &mut self.stats;
                match key.as_str() {
                    "input" => o.input = (!value.is_empty()).then(|| PathBuf::from(value)),
                    "density" => o.density = parse_enum(&key, value, "fit or uniform")?,
                    "fit_degree" => o.fit_degree = parse(&key, value, "a polynomial degree")?,
                    "fit_tail" => o.fit_tail = parse(&key, value, "a tail fraction")?,
                    "window" => {
                        let (a, b) = value.split_once(',').ok_or_else(|| ConfigError::TypeMismatch {
                            key: key.clone(),
                            value: value.to_string(),
                            expected: "two quantiles `lo,hi`",
                        })?;
                        o.window = (parse(&key, a.trim(), "a quantile")?, parse(&key, b.trim(), "a quantile")?);
                    }
                    "dedup" => o.dedup = parse(&key, value, "true or false")?,
                    "n_min" => o.n_min = parse(&key, value, "a number")?,
                    "n_max" => o.n_max = parse(&key, value, "a number")?,
                    "n_step" => o.n_step = parse(&key, value, "a number")?,
                    "centers" => o.centers = parse(&key, value, "a center count")?,
                    "directions" => o.directions = parse(&key, value, "a direction count")?,
                    "steps" => o.steps = parse(&key, value, "a step count")?,
                    "variance_members" => o.variance_members = parse(&key, value, "a member count")?,
                    "save_spectra" => o.save_spectra = parse(&key, value, "true or false")?,
                    _ => return Err(unknown()),
                }
            }
            "analytic" => {
                let o = &mut self.analytic;
                match key.as_str() {
                    "sigma2_gine" => o.sigma2_gine = parse(&key, value, "true or false")?,
                    "sigma2_selfdual" => o.sigma2_selfdual = parse(&key, value, "true or false")?,
                    "sigma2_poisson" => o.sigma2_poisson = parse(&key, value, "true or false")?,
                    "n_max" => o.n_max = parse(&key, value, "a number")?,
                    "n_step" => o.n_step = parse(&key, value, "a number")?,
                    _ => return Err(unknown()),
                }
            }
            other => return Err(ConfigError::UnknownSection(other.to_string())),
        }
        Ok(())
    }

    /// Applies a config file in `key = value` form. Keys before the first
    /// section header belong to `[run]`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut section = "run".to_string();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                    line: i + 1,
                    detail: format!("unterminated section header `{line}`"),
                })?;
                section = name.trim().to_ascii_lowercase();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                detail: format!("expected `key = value`, got `{line}`"),
            })?;
            self.set(&section, k, v)?;
        }
        Ok(())
    }

    /// Loads a config file, or a previous run's `manifest.json`.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Read { path: path.to_path_buf(), detail: e.to_string() })?;
        if text.trim_start().starts_with('{') {
            let manifest: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| ConfigError::Read { path: path.to_path_buf(), detail: e.to_string() })?;
            let config = manifest.get("config").cloned().unwrap_or(manifest);
            let parsed: RunConfig = serde_json::from_value(config)
                .map_err(|e| ConfigError::Read { path: path.to_path_buf(), detail: e.to_string() })?;
            let command = self.command;
            *self = RunConfig { command, ..parsed };
            return Ok(());
        }
        self.apply_text(&text)
    }

    /// The configuration as a config file that [`RunConfig::apply_text`] reads back.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "[run]\nseed = {}\nout = {}\nformat = {}\nthreads = {}",
            self.base_seed,
            self.output_dir.display(),
            enum_tag(&self.format),
            self.threads
        );
        let e = &self.ensemble;
        let _ =
            writeln!(s, "\n[ensemble]\nclass = {}\nn = {}\nmembers = {}\nbulk = {:?}", e.class, e.n, e.members, e.bulk);
        let t = &self.kickedtop;
        let points: Vec<String> = t.points.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(
            s,
            "\n[kickedtop]\nclass = {}\npaper_params = {}\ndesk_scale = {}\nj = {}\nalpha = {}\ntau = {}\nk = {}\ntau1 = {}\ntau2 = {}\ntau3 = {}\ntau4 = {}\ngamma = {}\noe_normalized = {}\npoints = {}\nparity_sectors = {}",
            t.class,
            t.paper_params,
            t.desk_scale,
            opt(t.j),
            opt(t.alpha),
            opt(t.tau),
            opt(t.k),
            opt(t.tau1),
            opt(t.tau2),
            opt(t.tau3),
            opt(t.tau4),
            opt(t.gamma),
            t.oe_normalized,
            points.join(","),
            enum_tag(&t.parity_sectors)
        );
        let g = &self.loggas;
        let _ = writeln!(
            s,
            "\n[loggas]\nn = {}\nk = {}\nchains = {}\nsweeps = {}\nburn_in = {}\nthinning = {}\nunfolding = {}",
            g.n,
            g.k,
            g.chains,
            g.sweeps,
            g.burn_in,
            g.thinning,
            enum_tag(&g.unfolding)
        );
        let st = &self.stats;
        let _ = writeln!(
            s,
            "\n[stats]\ninput = {}\ndensity = {}\nfit_degree = {}\nfit_tail = {:?}\nwindow = {:?},{:?}\ndedup = {}\nn_min = {:?}\nn_max = {:?}\nn_step = {:?}\ncenters = {}\ndirections = {}\nsteps = {}\nvariance_members = {}\nsave_spectra = {}",
            st.input.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            enum_tag(&st.density),
            st.fit_degree,
            st.fit_tail,
            st.window.0,
            st.window.1,
            st.dedup,
            st.n_min,
            st.n_max,
            st.n_step,
            st.centers,
            st.directions,
            st.steps,
            st.variance_members,
            st.save_spectra
        );
        let a = &self.analytic;
        let _ = writeln!(
            s,
            "\n[analytic]\nsigma2_gine = {}\nsigma2_selfdual = {}\nsigma2_poisson = {}\nn_max = {:?}\nn_step = {:?}",
            a.sigma2_gine, a.sigma2_selfdual, a.sigma2_poisson, a.n_max, a.n_step
        );
        s
    }

    /// Kicked-top parameters after presets, scale and overrides.
    pub fn top_params(&self) -> Result<TopParams, ConfigError> {
        let o = &self.kickedtop;
        let scale = if o.desk_scale { Scale::Desk } else { Scale::Paper };
        let mut p = TopParams::preset(o.class, scale);
        if !o.paper_params {
            let needed: &[(&str, Option<f64>)] = match o.class {
                TopClass::OE => &[("alpha", o.alpha), ("tau", o.tau)],
                TopClass::UE => &[("alpha", o.alpha), ("tau", o.tau), ("k", o.k)],
                TopClass::SE => &[("tau1", o.tau1), ("tau2", o.tau2), ("tau3", o.tau3), ("tau4", o.tau4)],
            };
            if let Some((name, _)) = needed.iter().find(|(_, v)| v.is_none()) {
                return Err(ConfigError::Missing(format!("kickedtop.{name} (required without paper_params)")));
            }
            p.sweeps.clear();
        }
        if let Some(j) = o.j {
            p.spin = Spin::new(j).map_err(top_invalid)?;
            if o.gamma.is_none() {
                let preset = TopParams::preset(o.class, scale);
                p.gamma = preset.gamma * preset.spin.dim() as f64 / p.spin.dim() as f64;
            }
        }
        let set = |field: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *field = v;
            }
        };
        set(&mut p.alpha, o.alpha);
        set(&mut p.tau, o.tau);
        set(&mut p.k, o.k);
        set(&mut p.tau1, o.tau1);
        set(&mut p.tau2, o.tau2);
        set(&mut p.tau3, o.tau3);
        set(&mut p.tau4, o.tau4);
        set(&mut p.gamma, o.gamma);
        p.oe_normalized = o.oe_normalized;
        // an explicit value pins its sweep axis
        let pinned = |param: SweptParam| match param {
            SweptParam::Tau => o.tau.is_some(),
            SweptParam::K => o.k.is_some(),
            SweptParam::Tau3 => o.tau3.is_some(),
            SweptParam::Tau4 => o.tau4.is_some(),
        };
        p.sweeps.retain(|s| !pinned(s.param));
        if !o.points.is_empty() {
            if o.points.len() != p.sweeps.len() {
                return Err(ConfigError::Invalid(format!(
                    "kickedtop.points has {} entries but the {} top sweeps {} parameters",
                    o.points.len(),
                    o.class,
                    p.sweeps.len()
                )));
            }
            for (s, &n) in p.sweeps.iter_mut().zip(&o.points) {
                s.points = n;
            }
        }
        p.validate().map_err(top_invalid)?;
        Ok(p)
    }

    pub fn loggas_config(&self) -> LogGasConfig {
        let o = &self.loggas;
        let mut c = LogGasConfig::new(o.n, o.k, self.base_seed);
        c.steps_per_point = o.sweeps;
        c.burn_in = o.burn_in;
        c.thinning = o.thinning;
        c
    }

    pub fn parity_split(&self) -> bool {
        match self.kickedtop.parity_sectors {
            ParityMode::Auto => self.kickedtop.class != TopClass::SE,
            ParityMode::On => true,
            ParityMode::Off => false,
        }
    }

    /// Cross-field checks that need the resolved values.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let st = &self.stats;
        let (lo, hi) = st.window;
        if !(0.0..1.0).contains(&lo) || !(lo < hi && hi <= 1.0) {
            return Err(ConfigError::Invalid(format!("stats.window must satisfy 0 <= lo < hi <= 1, got {lo},{hi}")));
        }
        if !(st.n_step > 0.0 && st.n_min > 0.0 && st.n_min <= st.n_max) {
            return Err(ConfigError::Invalid("stats targets need 0 < n_min <= n_max and n_step > 0".into()));
        }
        if !(0.0..0.5).contains(&st.fit_tail) {
            return Err(ConfigError::Invalid(format!("stats.fit_tail must lie in [0, 0.5), got {}", st.fit_tail)));
        }
        match self.command {
            CommandKind::Ensemble => {
                let e = &self.ensemble;
                if e.n < 2 || e.members == 0 {
                    return Err(ConfigError::Invalid("ensemble needs n >= 2 and at least one member".into()));
                }
                if !(e.bulk > 0.0 && e.bulk <= 1.0) {
                    return Err(ConfigError::Invalid(format!("ensemble.bulk must lie in (0, 1], got {}", e.bulk)));
                }
            }
            CommandKind::Kickedtop => {
                self.top_params()?;
                if self.kickedtop.class == TopClass::SE && self.kickedtop.parity_sectors == ParityMode::On {
                    return Err(ConfigError::Invalid("the SE top has no parity sectors".into()));
                }
            }
            CommandKind::Loggas => {
                self.loggas_config().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
                if self.loggas.chains == 0 {
                    return Err(ConfigError::Invalid("loggas needs at least one chain".into()));
                }
            }
            CommandKind::Stats => {
                if st.input.is_none() {
                    return Err(ConfigError::Missing("stats.input".into()));
                }
            }
            CommandKind::Analytic => {
                let a = &self.analytic;
                if !(a.sigma2_gine || a.sigma2_selfdual || a.sigma2_poisson) {
                    return Err(ConfigError::Missing(
                        "analytic curve: pass --sigma2-gine, --sigma2-selfdual or --sigma2-poisson".into(),
                    ));
                }
                if !(a.n_step > 0.0 && a.n_max > 0.0) {
                    return Err(ConfigError::Invalid("analytic needs n_max > 0 and n_step > 0".into()));
                }
            }
        }
        Ok(())
    }
}

fn top_invalid(e: TopError) -> ConfigError {
    ConfigError::Invalid(format!("kickedtop: {e}"))
}

fn enum_tag<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn parse<T: FromStr>(key: &str, value: &str, expected: &'static str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::TypeMismatch { key: key.to_string(), value: value.to_string(), expected })
}

fn parse_from_str<T: FromStr<Err = String>>(key: &str, value: &str, expected: &'static str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::TypeMismatch { key: key.to_string(), value: value.to_string(), expected })
}

fn parse_enum<T: clap::ValueEnum>(key: &str, value: &str, expected: &'static str) -> Result<T, ConfigError> {
    T::from_str(value, true).map_err(|_| ConfigError::TypeMismatch {
        key: key.to_string(),
        value: value.to_string(),
        expected,
    })
}

fn optional<T>(value: &str, f: impl Fn(&str) -> Result<T, ConfigError>) -> Result<Option<T>, ConfigError> {
    if value.is_empty() || value == "none" {
        Ok(None)
    } else {
        f(value).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_and_sections() {
        let mut c = RunConfig::defaults(CommandKind::Ensemble);
        c.apply_text("seed = 9\n[ensemble]\nn = 500 # comment\nclass = symm-gine\n").unwrap();
        assert_eq!(c.base_seed, 9);
        assert_eq!(c.ensemble.n, 500);
        assert_eq!(c.ensemble.class, EnsembleClass::SymmGinE);
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        let mut c = RunConfig::defaults(CommandKind::Ensemble);
        assert!(matches!(c.apply_text("[ensemble]\nsize = 3"), Err(ConfigError::UnknownKey { .. })));
        assert!(matches!(c.apply_text("[plots]\nx = 1"), Err(ConfigError::UnknownSection(_))));
        assert!(matches!(c.apply_text("[ensemble]\nn = many"), Err(ConfigError::TypeMismatch { .. })));
        assert!(matches!(c.apply_text("[ensemble\nn = 3"), Err(ConfigError::Syntax { .. })));
    }

    #[test]
    fn config_text_round_trips() {
        let mut c = RunConfig::defaults(CommandKind::Kickedtop);
        c.kickedtop.points = vec![3, 4];
        c.kickedtop.class = TopClass::UE;
        c.kickedtop.gamma = Some(0.01);
        c.stats.window = (0.25, 0.75);
        c.stats.input = Some("spectra".into());
        let mut back = RunConfig::defaults(CommandKind::Kickedtop);
        back.apply_text(&c.to_config_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn se_needs_half_integer_spin() {
        let mut c = RunConfig::defaults(CommandKind::Kickedtop);
        c.kickedtop.class = TopClass::SE;
        c.kickedtop.j = Some(1000.0);
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("half-integer"), "{err}");
    }

    #[test]
    fn explicit_parameters_pin_sweeps() {
        let mut c = RunConfig::defaults(CommandKind::Kickedtop);
        c.kickedtop.class = TopClass::UE;
        c.kickedtop.desk_scale = true;
        c.kickedtop.k = Some(61.0);
        let p = c.top_params().unwrap();
        assert_eq!(p.sweeps.len(), 1);
        assert_eq!(p.k, 61.0);
        assert_eq!(p.spin.dim(), 501);
    }

    #[test]
    fn custom_parameters_are_required_without_presets() {
        let mut c = RunConfig::defaults(CommandKind::Kickedtop);
        c.kickedtop.paper_params = false;
        c.kickedtop.alpha = Some(7.0);
        assert!(matches!(c.top_params(), Err(ConfigError::Missing(_))));
        c.kickedtop.tau = Some(300.0);
        assert_eq!(c.top_params().unwrap().members(), 1);
    }

    #[test]
    fn gamma_tracks_the_spin() {
        let mut c = RunConfig::defaults(CommandKind::Kickedtop);
        c.kickedtop.j = Some(100.0);
        let p = c.top_params().unwrap();
        assert!((p.gamma - 5.0 / 201.0).abs() < 1e-15);
    }
}
