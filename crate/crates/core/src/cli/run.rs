//! Pipelines: generate, dedup/trim, fit, unfold, measure, write.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::config::{CommandKind, DensityMode, GasUnfolding, RunConfig};
use super::output::{write_table, Table};
use super::CliError;
use crate::ensembles::ensemble_spectra;
use crate::kickedtop::{sweep_ensemble, sweep_sector_ensemble};
use crate::sampler::sample_log_gas_chains;
use crate::spectra::{
    dedup_kramers, fit_radial_density_with, read_spectrum, write_sidecar, DensityFit, RadialDensityModel, RadialWindow,
    Spectrum,
};
use crate::stats::{
    nn_spacings_within, number_variance, ratio_histogram, sigma2_ginibre_analytic, sigma2_poisson,
    sigma2_selfdual_analytic, spacing_histogram, spacing_ratio_type1_within, spacing_ratio_type2_within,
    CartesianCounting, CountingScheme, DiscCounting, IsochroneCounting, SheetCounting, VarianceCurve,
};
use crate::unfolding::{unfold_cartesian, unfold_power_law, unfold_radial_only, UnfoldedSpectrum};

/// What a run produced.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    /// Paths relative to the output directory, manifest last.
    pub outputs: Vec<PathBuf>,
    pub notes: Vec<String>,
}

struct Sink<'a> {
    cfg: &'a RunConfig,
    outputs: Vec<PathBuf>,
    notes: Vec<String>,
    resolved: serde_json::Map<String, serde_json::Value>,
}

impl Sink<'_> {
    fn table(&mut self, stem: &str, t: &Table) -> Result<(), CliError> {
        let dir = &self.cfg.output_dir;
        let path = write_table(dir, stem, t, self.cfg.format).map_err(|e| CliError::io(dir.join(stem), e))?;
        self.outputs.push(path.strip_prefix(dir).unwrap_or(&path).to_path_buf());
        Ok(())
    }

    fn note(&mut self, msg: String) {
        eprintln!("note: {msg}");
        self.notes.push(msg);
    }

    fn spectra(&mut self, ens: &[Spectrum]) -> Result<(), CliError> {
        if !self.cfg.stats.save_spectra {
            return Ok(());
        }
        let width = ens.len().saturating_sub(1).to_string().len().max(4);
        for (i, s) in ens.iter().enumerate() {
            let stem = format!("spectra/{i:0width$}");
            let t = Table::new()
                .column("re", s.eigenvalues.iter().map(|z| z.re).collect())
                .column("im", s.eigenvalues.iter().map(|z| z.im).collect());
            self.table(&stem, &t)?;
            let meta = self.cfg.output_dir.join(format!("{stem}.meta"));
            write_sidecar(s, &meta).map_err(|e| CliError::numeric(format!("writing {}", meta.display()), e))?;
            self.outputs.push(PathBuf::from(format!("{stem}.meta")));
        }
        Ok(())
    }
}

pub fn run(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    if cfg.threads > 0 {
        // a pool built earlier in the process stays in place
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    }
    fs::create_dir_all(&cfg.output_dir).map_err(|e| CliError::io(&cfg.output_dir, e))?;
    let mut sink = Sink { cfg, outputs: Vec::new(), notes: Vec::new(), resolved: serde_json::Map::new() };
    match cfg.command {
        CommandKind::Ensemble => run_ensemble(&mut sink)?,
        CommandKind::Kickedtop => run_top(&mut sink)?,
        CommandKind::Loggas => run_loggas(&mut sink)?,
        CommandKind::Stats => run_stats(&mut sink)?,
        CommandKind::Analytic => run_analytic(&mut sink)?,
    }
    let manifest = json!({
        "tool": "nhrmt",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command.tag(),
        "config": cfg,
        "config_text": cfg.to_config_text(),
        "resolved": sink.resolved,
        "outputs": sink.outputs,
        "notes": sink.notes,
    });
    let path = cfg.output_dir.join("manifest.json");
    let mut body = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::numeric("manifest", e))?;
    body.push('\n');
    fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
    sink.outputs.push(PathBuf::from("manifest.json"));
    Ok(RunSummary { output_dir: cfg.output_dir.clone(), outputs: sink.outputs, notes: sink.notes })
}

fn targets(cfg: &RunConfig) -> Vec<f64> {
    let st = &cfg.stats;
    let count = ((st.n_max - st.n_min) / st.n_step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| st.n_min + i as f64 * st.n_step).collect()
}

fn pooled_radii(ens: &[Spectrum]) -> Vec<f64> {
    let mut r: Vec<f64> = ens.iter().flat_map(|s| s.eigenvalues.iter().map(|z| z.norm())).collect();
    r.sort_by(f64::total_cmp);
    r
}

fn quantile_window(ens: &[Spectrum], q: (f64, f64)) -> Result<RadialWindow, CliError> {
    let r = pooled_radii(ens);
    let at = |f: f64| r[((r.len() - 1) as f64 * f).round() as usize];
    RadialWindow::new(at(q.0), at(q.1)).map_err(|e| CliError::numeric("statistics window", e))
}

/// Nearest-neighbour spacing and both ratio histograms inside `window`.
fn local_statistics(
    sink: &mut Sink,
    ens: &[Spectrum],
    density: Option<&RadialDensityModel>,
    window: &RadialWindow,
) -> Result<(), CliError> {
    let (mut sp, mut r1, mut r2) = (Vec::new(), Vec::new(), Vec::new());
    for (i, s) in ens.iter().enumerate() {
        let ctx = || format!("member {i}");
        sp.extend(nn_spacings_within(s, density, Some(window)).map_err(|e| CliError::numeric(ctx(), e))?);
        r1.extend(spacing_ratio_type1_within(s, Some(window)).map_err(|e| CliError::numeric(ctx(), e))?);
        r2.extend(spacing_ratio_type2_within(s, Some(window)).map_err(|e| CliError::numeric(ctx(), e))?);
    }
    let hist = |h: Result<_, _>| h.map_err(|e| CliError::numeric("histogram", e));
    sink.table("nnsd", &Table::histogram(&hist(spacing_histogram(&sp))?))?;
    sink.table("ratio_type1", &Table::histogram(&hist(ratio_histogram(&r1))?))?;
    sink.table("ratio_type2", &Table::histogram(&hist(ratio_histogram(&r2))?))?;
    sink.resolved.insert("window".into(), json!([window.r_min, window.r_max]));
    sink.resolved
        .insert("samples".into(), json!({"spacings": sp.len(), "ratio_type1": r1.len(), "ratio_type2": r2.len()}));
    Ok(())
}

/// Number variance target by target; unreachable targets are reported and skipped.
fn variance(sink: &mut Sink, scheme: &impl CountingScheme, t: &[f64]) -> Result<(), CliError> {
    let mut curve = VarianceCurve {
        n_mean: Vec::new(),
        sigma2: Vec::new(),
        stderr: Vec::new(),
        observed_mean: Vec::new(),
        centers_used: sink.cfg.stats.centers,
    };
    for (i, &n) in t.iter().enumerate() {
        eprintln!("number variance <n> = {n}");
        match number_variance(
            scheme,
            &[n],
            sink.cfg.stats.centers,
            crate::seed::mix_seed(sink.cfg.base_seed, 1000 + i as u64),
        ) {
            Ok(c) => {
                curve.n_mean.push(n);
                curve.sigma2.push(c.sigma2[0]);
                curve.stderr.push(c.stderr[0]);
                curve.observed_mean.push(c.observed_mean[0]);
            }
            Err(
                e @ (crate::stats::StatsError::EmptyRegion { .. } | crate::stats::StatsError::CenterStarved { .. }),
            ) => {
                sink.note(format!("skipped <n> = {n}: {e}"));
            }
            Err(e) => return Err(CliError::numeric(format!("number variance at <n> = {n}"), e)),
        }
    }
    sink.table("variance", &Table::variance(&curve))
}

/// Binned `pi * density` against radius.
fn density_profile(ens: &[Spectrum], r_max: f64, bins: usize, model: Option<&RadialDensityModel>) -> Table {
    let w = r_max / bins as f64;
    let mut counts = vec![0.0; bins];
    for s in ens {
        for z in &s.eigenvalues {
            let i = (z.norm() / w) as usize;
            if i < bins {
                counts[i] += 1.0;
            }
        }
    }
    let r: Vec<f64> = (0..bins).map(|i| (i as f64 + 0.5) * w).collect();
    let dens: Vec<f64> = (0..bins)
        .map(|i| {
            let (a, b) = (i as f64 * w, (i + 1) as f64 * w);
            counts[i] / (ens.len() as f64 * PI * (b * b - a * a))
        })
        .collect();
    let mut t = Table::new().column("r", r.clone()).column("density", dens);
    if let Some(m) = model {
        t = t.column("model", r.iter().map(|&x| m.density(x)).collect());
    }
    t
}

fn run_ensemble(sink: &mut Sink) -> Result<(), CliError> {
    let cfg = sink.cfg;
    let e = &cfg.ensemble;
    eprintln!("sampling {} x {} N = {}", e.members, e.class, e.n);
    let ens =
        ensemble_spectra(e.class, e.n, e.members, cfg.base_seed).map_err(|err| CliError::numeric("ensemble", err))?;
    sink.spectra(&ens)?;
    let root = (e.n as f64).sqrt();
    sink.table("density", &density_profile(&ens, 1.2 * root, 120, None))?;
    let window = RadialWindow::new(0.0, e.bulk * root).map_err(|err| CliError::numeric("window", err))?;
    local_statistics(sink, &ens, None, &window)?;
    let scheme = DiscCounting::new(&ens, window, 1.0 / PI).map_err(|err| CliError::numeric("counting", err))?;
    variance(sink, &scheme, &targets(cfg))
}

fn fitted_pipeline(sink: &mut Sink, ens: &[Spectrum]) -> Result<(), CliError> {
    let cfg = sink.cfg;
    let st = &cfg.stats;
    let opts = DensityFit { degree: st.fit_degree, tail: st.fit_tail, ..Default::default() };
    let density = fit_radial_density_with(ens, &opts).map_err(|e| CliError::numeric("radial density fit", e))?;
    sink.resolved.insert("density_support".into(), json!([density.support.r_min, density.support.r_max]));
    let r_top = pooled_radii(ens).last().copied().unwrap_or(1.0);
    sink.table("density", &density_profile(ens, 1.05 * r_top, 200, Some(&density)))?;
    let window = quantile_window(ens, st.window)?;
    local_statistics(sink, ens, Some(&density), &window)?;
    let stride = ens.len().div_ceil(st.variance_members.max(1)).max(1);
    let subset: Vec<Spectrum> = ens.iter().step_by(stride).cloned().collect();
    let scheme = IsochroneCounting::new(&subset, density.clone(), density.support, st.directions, st.steps)
        .map_err(|e| CliError::numeric("isochrone counting", e))?;
    variance(sink, &scheme, &targets(cfg))
}

fn run_top(sink: &mut Sink) -> Result<(), CliError> {
    let cfg = sink.cfg;
    let p = cfg.top_params()?;
    let split = cfg.parity_split();
    sink.resolved.insert("top_params".into(), serde_json::to_value(&p).unwrap_or_default());
    sink.resolved.insert("parity_sectors".into(), json!(split));
    eprintln!("sweeping {} {} top members at J = {}", p.members(), p.class, p.spin);
    let ens = if split { sweep_sector_ensemble(&p, cfg.base_seed) } else { sweep_ensemble(&p, cfg.base_seed) }
        .map_err(|e| CliError::numeric("kicked top", e))?;
    sink.spectra(&ens)?;
    fitted_pipeline(sink, &ens)
}

fn run_loggas(sink: &mut Sink) -> Result<(), CliError> {
    let cfg = sink.cfg;
    let gas = cfg.loggas_config();
    sink.resolved.insert("loggas".into(), serde_json::to_value(&gas).unwrap_or_default());
    eprintln!("sampling {} chains of N = {}, k = {}", cfg.loggas.chains, gas.n_points, gas.k_exponent);
    let runs = sample_log_gas_chains(&gas, cfg.loggas.chains).map_err(|e| CliError::numeric("log-gas sampler", e))?;
    sink.resolved.insert(
        "chains".into(),
        json!(runs
            .iter()
            .map(|r| json!({"acceptance": r.acceptance_rate, "scale": r.tuned_scale, "drift": r.max_drift}))
            .collect::<Vec<_>>()),
    );
    let ens: Vec<Spectrum> = runs.into_iter().flat_map(|r| r.samples).collect();
    sink.spectra(&ens)?;
    let big_r = gas.support_radius();
    let k = gas.k_exponent;
    let support = RadialWindow::new(0.0, big_r).map_err(|e| CliError::numeric("support", e))?;
    let model = RadialDensityModel::power_law(k, support);
    sink.table("density", &density_profile(&ens, 1.2 * big_r, 120, Some(&model)))?;
    let window = quantile_window(&ens, cfg.stats.window)?;
    local_statistics(sink, &ens, Some(&model), &window)?;

    let unfold = |f: &dyn Fn(&Spectrum) -> Result<UnfoldedSpectrum, crate::unfolding::UnfoldingError>| {
        ens.iter().map(f).collect::<Result<Vec<_>, _>>().map_err(|e| CliError::numeric("unfolding", e))
    };
    let t = targets(cfg);
    let kf = k as f64;
    match cfg.loggas.unfolding {
        GasUnfolding::PowerLaw => {
            let u = unfold(&|s| unfold_power_law(s, k))?;
            let scheme = SheetCounting::new(&u, 0.9 * big_r.powf(kf)).map_err(|e| CliError::numeric("counting", e))?;
            variance(sink, &scheme, &t)
        }
        GasUnfolding::RadialOnly => {
            let u = unfold(&|s| unfold_radial_only(s, k))?;
            let scheme = SheetCounting::new(&u, 0.9 * kf.sqrt() * big_r.powf(kf))
                .map_err(|e| CliError::numeric("counting", e))?;
            variance(sink, &scheme, &t)
        }
        GasUnfolding::Cartesian => {
            let u = unfold(&|s| Ok(unfold_cartesian(s)))?;
            let scheme = CartesianCounting::new(&u, 0.9 * big_r).map_err(|e| CliError::numeric("counting", e))?;
            variance(sink, &scheme, &t)
        }
    }
}

fn read_inputs(dir: &Path, dedup: bool) -> Result<Vec<Spectrum>, CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Config(super::ConfigError::Invalid(format!("no .csv spectra in {}", dir.display()))));
    }
    files
        .iter()
        .map(|f| {
            let meta = f.with_extension("meta");
            let s = read_spectrum(f, meta.exists().then_some(meta.as_path()))
                .map_err(|e| CliError::numeric(f.display().to_string(), e))?;
            if dedup {
                let tol = s.default_dedup_tol();
                return dedup_kramers(&s, tol).map_err(|e| CliError::numeric(f.display().to_string(), e));
            }
            Ok(s)
        })
        .collect()
}

fn run_stats(sink: &mut Sink) -> Result<(), CliError> {
    let cfg = sink.cfg;
    let input = cfg.stats.input.clone().ok_or_else(|| super::ConfigError::Missing("stats.input".into()))?;
    let ens = read_inputs(&input, cfg.stats.dedup)?;
    eprintln!("read {} spectra from {}", ens.len(), input.display());
    match cfg.stats.density {
        DensityMode::Fit => fitted_pipeline(sink, &ens),
        DensityMode::Uniform => {
            let window = quantile_window(&ens, cfg.stats.window)?;
            local_statistics(sink, &ens, None, &window)?;
            let scheme = DiscCounting::new(&ens, window, 1.0 / PI).map_err(|e| CliError::numeric("counting", e))?;
            variance(sink, &scheme, &targets(cfg))
        }
    }
}

fn run_analytic(sink: &mut Sink) -> Result<(), CliError> {
    let a = &sink.cfg.analytic;
    let count = (a.n_max / a.n_step + 1e-9).floor() as usize;
    let n: Vec<f64> = (1..=count).map(|i| i as f64 * a.n_step).collect();
    let curve = |f: fn(f64) -> Result<f64, crate::stats::StatsError>| -> Result<Vec<f64>, CliError> {
        n.iter().map(|&x| f(x).map_err(|e| CliError::numeric(format!("<n> = {x}"), e))).collect()
    };
    let mut t = Table::new().column("n_mean", n.clone());
    if a.sigma2_gine {
        t = t.column("sigma2_gine", curve(sigma2_ginibre_analytic)?);
    }
    if a.sigma2_selfdual {
        t = t.column("sigma2_selfdual", curve(sigma2_selfdual_analytic)?);
    }
    if a.sigma2_poisson {
        t = t.column("sigma2_poisson", n.iter().map(|&x| sigma2_poisson(x)).collect());
    }
    sink.table("analytic", &t)
}
