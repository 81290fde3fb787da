//! Spectrum data model: Kramers deduplication, radial trimming, radial
//! density fitting, and the CSV / sidecar file formats.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;
use num_complex::Complex64;
use thiserror::Error;

use crate::special::gauss_legendre;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("spectrum is empty")]
    Empty,
    #[error("eigenvalue {index} is not finite")]
    NonFinite { index: usize },
    #[error("odd number of eigenvalues ({0}) cannot be Kramers-paired")]
    OddCount(usize),
    #[error("eigenvalue {index} has no degenerate partner: nearest unpaired neighbour at {distance:e} >= tol {tol:e}")]
    Unpaired { index: usize, distance: f64, tol: f64 },
    #[error("invalid trim window [{r_min}, {r_max}]")]
    BadWindow { r_min: f64, r_max: f64 },
    #[error("trim window [{r_min}, {r_max}] retains no eigenvalues")]
    EmptyTrim { r_min: f64, r_max: f64 },
    #[error("density fit needs at least {needed} eigenvalues, got {got}")]
    TooFewEigenvalues { needed: usize, got: usize },
    #[error("fitted density is negative over {fraction:.1}% of the support")]
    NegativeFit { fraction: f64 },
    #[error("cannot fit an empty ensemble")]
    EmptyEnsemble,
    #[error("density fit needs at least one bin and a tail fraction in [0, 0.5)")]
    BadFitOptions,
    #[error("malformed {what} at line {line}: {detail}")]
    Parse { what: &'static str, line: usize, detail: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Radial window `r_min <= |z| <= r_max`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RadialWindow {
    pub r_min: f64,
    pub r_max: f64,
}

impl RadialWindow {
    pub fn new(r_min: f64, r_max: f64) -> Result<Self, SpectrumError> {
        if !(r_min >= 0.0 && r_min < r_max && r_max.is_finite()) {
            return Err(SpectrumError::BadWindow { r_min, r_max });
        }
        Ok(Self { r_min, r_max })
    }

    #[inline]
    pub fn contains(&self, z: Complex64) -> bool {
        let r = z.norm();
        r >= self.r_min && r <= self.r_max
    }

    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let lo = self.r_min.max(other.r_min);
        let hi = self.r_max.min(other.r_max);
        (lo < hi).then_some(Self { r_min: lo, r_max: hi })
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * (self.r_max * self.r_max - self.r_min * self.r_min)
    }
}

/// One set of complex eigenvalues with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    pub source_tag: String,
    pub params_digest: String,
    pub seed: u64,
    pub dedup_applied: bool,
    pub trim_window: Option<RadialWindow>,
}

impl Spectrum {
    pub fn new(
        eigenvalues: Vec<Complex64>,
        source_tag: impl Into<String>,
        params_digest: impl Into<String>,
        seed: u64,
    ) -> Result<Self, SpectrumError> {
        if eigenvalues.is_empty() {
            return Err(SpectrumError::Empty);
        }
        if let Some(index) = eigenvalues.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(SpectrumError::NonFinite { index });
        }
        Ok(Self {
            eigenvalues,
            source_tag: source_tag.into(),
            params_digest: params_digest.into(),
            seed,
            dedup_applied: false,
            trim_window: None,
        })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn median_modulus(&self) -> f64 {
        let mut r: Vec<f64> = self.eigenvalues.iter().map(|z| z.norm()).collect();
        r.sort_by(f64::total_cmp);
        let n = r.len();
        if n % 2 == 1 {
            r[n / 2]
        } else {
            0.5 * (r[n / 2 - 1] + r[n / 2])
        }
    }

    /// Default Kramers tolerance: `1e-6 * median |z|`.
    pub fn default_dedup_tol(&self) -> f64 {
        (1e-6 * self.median_modulus()).max(1e-12)
    }
}

/// Removes one member of every exactly (numerically) degenerate pair.
///
/// Eigenvalues are visited in order of real part and greedily matched to the
/// nearest still-unpaired eigenvalue. Already deduplicated spectra are
/// returned unchanged.
pub fn dedup_kramers(s: &Spectrum, tol: f64) -> Result<Spectrum, SpectrumError> {
    if s.dedup_applied {
        return Ok(s.clone());
    }
    let n = s.eigenvalues.len();
    if n % 2 == 1 {
        return Err(SpectrumError::OddCount(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s.eigenvalues[a].re.total_cmp(&s.eigenvalues[b].re));
    let sorted: Vec<Complex64> = order.iter().map(|&i| s.eigenvalues[i]).collect();
    let mut paired = vec![false; n];
    let mut kept = Vec::with_capacity(n / 2);

    for i in 0..n {
        if paired[i] {
            continue;
        }
        let zi = sorted[i];
        let mut best: Option<(usize, f64)> = None;
        // Scan outward in real part until the horizontal gap alone exceeds the best distance.
        for j in (i + 1)..n {
            let dx = sorted[j].re - zi.re;
            if best.is_some_and(|(_, d)| dx > d) {
                break;
            }
            if !paired[j] {
                let d = (sorted[j] - zi).norm();
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
        }
        for j in (0..i).rev() {
            let dx = zi.re - sorted[j].re;
            if best.is_some_and(|(_, d)| dx > d) {
                break;
            }
            if !paired[j] {
                let d = (sorted[j] - zi).norm();
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
        }
        match best {
            Some((j, d)) if d < tol => {
                paired[i] = true;
                paired[j] = true;
                kept.push((order[i], zi));
            }
            Some((_, d)) => return Err(SpectrumError::Unpaired { index: order[i], distance: d, tol }),
            None => return Err(SpectrumError::Unpaired { index: order[i], distance: f64::INFINITY, tol }),
        }
    }
    // Keep the original relative order of representatives.
    kept.sort_by_key(|&(idx, _)| idx);
    let mut out = s.clone();
    out.eigenvalues = kept.into_iter().map(|(_, z)| z).collect();
    out.dedup_applied = true;
    Ok(out)
}

/// Keeps eigenvalues with `r_min <= |z| <= r_max`.
pub fn trim(s: &Spectrum, r_min: f64, r_max: f64) -> Result<Spectrum, SpectrumError> {
    let window = RadialWindow::new(r_min, r_max)?;
    let eigenvalues: Vec<Complex64> = s.eigenvalues.iter().copied().filter(|&z| window.contains(z)).collect();
    if eigenvalues.is_empty() {
        return Err(SpectrumError::EmptyTrim { r_min, r_max });
    }
    let recorded = match &s.trim_window {
        Some(prev) => prev.intersect(&window).unwrap_or(window),
        None => window,
    };
    let mut out = s.clone();
    out.eigenvalues = eigenvalues;
    out.trim_window = Some(recorded);
    Ok(out)
}

/// Smooth radial density `R1(r)`, polynomial on its support and zero outside.
///
/// The polynomial is stored in the normalised variable
/// `u = (r - center) / half_width`, which keeps degree-8 least squares well
/// conditioned; [`RadialDensityModel::density`] takes plain `r`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RadialDensityModel {
    /// Ascending powers of `u`.
    pub coefficients: Vec<f64>,
    pub center: f64,
    pub half_width: f64,
    pub support: RadialWindow,
    /// Expected eigenvalue count over the support.
    pub total_count: f64,
    pub fit_degree: usize,
}

impl RadialDensityModel {
    /// Builds a model from ascending coefficients in plain `r`.
    pub fn from_r_coefficients(coeffs_r: &[f64], support: RadialWindow) -> Self {
        // Keep u = r (center 0, half-width 1) so coefficients carry over verbatim.
        let mut model = Self {
            coefficients: coeffs_r.to_vec(),
            center: 0.0,
            half_width: 1.0,
            support,
            total_count: 0.0,
            fit_degree: coeffs_r.len().saturating_sub(1),
        };
        model.total_count = model.integrated_count();
        model
    }

    /// Constant density over the window.
    pub fn uniform(density: f64, support: RadialWindow) -> Self {
        Self::from_r_coefficients(&[density], support)
    }

    /// `R1(r) = k^2 r^(2k-2) / pi`, the density of the log-gas with `V = |z|^(2k)`.
    pub fn power_law(k: u32, support: RadialWindow) -> Self {
        let mut c = vec![0.0; 2 * k as usize - 1];
        c[2 * k as usize - 2] = (k * k) as f64 / std::f64::consts::PI;
        Self::from_r_coefficients(&c, support)
    }

    #[inline]
    fn poly(&self, r: f64) -> f64 {
        let u = (r - self.center) / self.half_width;
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    #[inline]
    fn poly_derivative(&self, r: f64) -> f64 {
        let u = (r - self.center) / self.half_width;
        let mut acc = 0.0;
        for (p, &c) in self.coefficients.iter().enumerate().skip(1).rev() {
            acc = acc * u + p as f64 * c;
        }
        acc / self.half_width
    }

    /// `R1(r)`, clamped at zero and zero outside the support.
    #[inline]
    pub fn density(&self, r: f64) -> f64 {
        if !self.in_support(r) {
            return 0.0;
        }
        self.poly(r).max(0.0)
    }

    /// `dR1/dr` of the polynomial (zero where the density is clamped).
    #[inline]
    pub fn density_derivative(&self, r: f64) -> f64 {
        if !self.in_support(r) || self.poly(r) <= 0.0 {
            return 0.0;
        }
        self.poly_derivative(r)
    }

    #[inline]
    pub fn in_support(&self, r: f64) -> bool {
        r >= self.support.r_min && r <= self.support.r_max
    }

    /// `integral 2 pi r R1(r) dr` over the support.
    pub fn integrated_count(&self) -> f64 {
        self.count_between(self.support.r_min, self.support.r_max)
    }

    /// `integral 2 pi r R1(r) dr` over `[a, b]` clipped to the support.
    pub fn count_between(&self, a: f64, b: f64) -> f64 {
        let a = a.max(self.support.r_min);
        let b = b.min(self.support.r_max);
        if b <= a {
            return 0.0;
        }
        2.0 * std::f64::consts::PI * gauss_legendre(|r| r * self.density(r), a, b, 400)
    }

    fn rescale(&mut self, factor: f64) {
        for c in &mut self.coefficients {
            *c *= factor;
        }
    }
}

/// Number of radial histogram bins used by [`fit_radial_density`].
pub const DENSITY_BINS: usize = 100;
/// Default polynomial degree of the radial density fit.
pub const DEFAULT_FIT_DEGREE: usize = 8;

/// Least-squares polynomial fit of the pooled radial density of an ensemble.
///
/// `|z|` is histogrammed into equal-radius bins over `[min |z|, max |z|]`,
/// converted to eigenvalues per unit area per member, and fitted with bins
/// weighted by their area. The result is renormalised so that
/// `integral 2 pi r R1 dr` equals the mean member size.
pub fn fit_radial_density(ens: &[Spectrum], degree: usize) -> Result<RadialDensityModel, SpectrumError> {
    fit_radial_density_with(ens, &DensityFit { degree, ..DensityFit::default() })
}

pub fn fit_radial_density_with_bins(
    ens: &[Spectrum],
    degree: usize,
    bins: usize,
) -> Result<RadialDensityModel, SpectrumError> {
    fit_radial_density_with(ens, &DensityFit { degree, bins, tail: 0.0 })
}

/// Options of [`fit_radial_density_with`].
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DensityFit {
    pub degree: usize,
    pub bins: usize,
    /// Fraction of the pooled radii dropped at each end before binning.
    /// Sparse outlying tails otherwise stretch the support and make the
    /// polynomial ring; the support then ends at these quantiles.
    pub tail: f64,
}

impl Default for DensityFit {
    fn default() -> Self {
        Self { degree: DEFAULT_FIT_DEGREE, bins: DENSITY_BINS, tail: 0.0 }
    }
}

/// Tail fraction used for annular (kicked-top) spectra.
pub const ANNULUS_TAIL: f64 = 0.005;

pub fn fit_radial_density_with(ens: &[Spectrum], opts: &DensityFit) -> Result<RadialDensityModel, SpectrumError> {
    let DensityFit { degree, bins, tail } = *opts;
    if ens.is_empty() {
        return Err(SpectrumError::EmptyEnsemble);
    }
    let mut radii: Vec<f64> = ens.iter().flat_map(|s| s.eigenvalues.iter().map(|z| z.norm())).collect();
    let needed = 50 * (degree + 1);
    if radii.len() < needed {
        return Err(SpectrumError::TooFewEigenvalues { needed, got: radii.len() });
    }
    if bins == 0 || !(0.0..0.5).contains(&tail) {
        return Err(SpectrumError::BadFitOptions);
    }
    radii.sort_by(f64::total_cmp);
    let members = ens.len() as f64;
    let cut = (tail * radii.len() as f64).floor() as usize;
    let radii = &radii[cut..radii.len() - cut];
    let (r_lo, r_hi) = (radii[0], radii[radii.len() - 1]);
    let support = RadialWindow::new(r_lo, r_hi)?;
    let width = (r_hi - r_lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &r in radii {
        let b = (((r - r_lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }

    let center = 0.5 * (r_lo + r_hi);
    let half_width = 0.5 * (r_hi - r_lo);
    let bin_data: Vec<(f64, f64, f64)> = counts
        .iter()
        .enumerate()
        .map(|(b, &count)| {
            let a0 = r_lo + b as f64 * width;
            let a1 = a0 + width;
            let area = std::f64::consts::PI * (a1 * a1 - a0 * a0);
            ((0.5 * (a0 + a1) - center) / half_width, area, count as f64 / (members * area))
        })
        .collect();
    // A binned density has variance R1 / (members * area): the first pass
    // weights by sqrt(area), the second by sqrt(area / R1) from the first fit.
    let mut coefficients = weighted_poly_fit(&bin_data, degree, |_, area| area.sqrt());
    let peak = bin_data.iter().map(|b| b.2).fold(0.0, f64::max);
    let first = coefficients.clone();
    let eval = |u: f64| first.iter().rev().fold(0.0, |acc, &c| acc * u + c);
    coefficients = weighted_poly_fit(&bin_data, degree, |u, area| (area / eval(u).max(0.05 * peak)).sqrt());

    let mut model =
        RadialDensityModel { coefficients, center, half_width, support, total_count: 0.0, fit_degree: degree };

    let probes = 1000;
    let negative =
        (0..probes).filter(|&i| model.poly(r_lo + (i as f64 + 0.5) * (r_hi - r_lo) / probes as f64) < 0.0).count();
    let fraction = 100.0 * negative as f64 / probes as f64;
    if fraction > 5.0 {
        return Err(SpectrumError::NegativeFit { fraction });
    }

    let target = radii.len() as f64 / members;
    let current = model.integrated_count();
    model.rescale(target / current);
    model.total_count = target;
    Ok(model)
}

fn weighted_poly_fit(bins: &[(f64, f64, f64)], degree: usize, weight: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut design = Mat::<f64>::zeros(bins.len(), degree + 1);
    let mut rhs = Mat::<f64>::zeros(bins.len(), 1);
    for (b, &(u, area, dens)) in bins.iter().enumerate() {
        let w = weight(u, area);
        let mut p = 1.0;
        for d in 0..=degree {
            design[(b, d)] = w * p;
            p *= u;
        }
        rhs[(b, 0)] = w * dens;
    }
    let sol = design.qr().solve_lstsq(&rhs);
    (0..=degree).map(|d| sol[(d, 0)]).collect()
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `re,im` rows with 17 significant digits.
pub fn write_spectrum_csv(s: &Spectrum, path: &Path) -> Result<(), SpectrumError> {
    let mut out = String::with_capacity(48 * s.len() + 8);
    out.push_str("re,im\n");
    for z in &s.eigenvalues {
        let _ = writeln!(out, "{},{}", fmt_f64(z.re), fmt_f64(z.im));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_spectrum_csv(path: &Path) -> Result<Vec<Complex64>, SpectrumError> {
    let file = fs::File::open(path)?;
    let mut values = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if lineno == 0 {
            if line != "re,im" {
                return Err(SpectrumError::Parse { what: "spectrum header", line: 1, detail: line.to_string() });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let bad = |detail: String| SpectrumError::Parse { what: "spectrum row", line: lineno + 1, detail };
        let (re, im) = line.split_once(',').ok_or_else(|| bad(line.to_string()))?;
        let re: f64 = re.trim().parse().map_err(|e| bad(format!("{e}")))?;
        let im: f64 = im.trim().parse().map_err(|e| bad(format!("{e}")))?;
        values.push(Complex64::new(re, im));
    }
    Ok(values)
}

/// `key = value` metadata sidecar.
pub fn write_sidecar(s: &Spectrum, path: &Path) -> Result<(), SpectrumError> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "source_tag = {}", s.source_tag)?;
    writeln!(f, "seed = {}", s.seed)?;
    writeln!(f, "params_digest = {}", s.params_digest)?;
    writeln!(f, "dedup = {}", s.dedup_applied)?;
    match &s.trim_window {
        Some(w) => writeln!(f, "trim = {},{}", fmt_f64(w.r_min), fmt_f64(w.r_max))?,
        None => writeln!(f, "trim = none")?,
    }
    Ok(())
}

/// Reads a spectrum CSV and its sidecar (if present) back into a [`Spectrum`].
pub fn read_spectrum(csv: &Path, sidecar: Option<&Path>) -> Result<Spectrum, SpectrumError> {
    let values = read_spectrum_csv(csv)?;
    let mut s = Spectrum::new(values, "file", "", 0)?;
    let Some(meta) = sidecar else { return Ok(s) };
    let text = fs::read_to_string(meta)?;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |detail: &str| SpectrumError::Parse { what: "sidecar", line: i + 1, detail: detail.to_string() };
        let (k, v) = line.split_once('=').ok_or_else(|| bad(line))?;
        let v = v.trim();
        match k.trim() {
            "source_tag" => s.source_tag = v.to_string(),
            "params_digest" => s.params_digest = v.to_string(),
            "seed" => s.seed = v.parse().map_err(|_| bad(v))?,
            "dedup" => s.dedup_applied = v.parse().map_err(|_| bad(v))?,
            "trim" if v == "none" => s.trim_window = None,
            "trim" => {
                let (a, b) = v.split_once(',').ok_or_else(|| bad(v))?;
                let a: f64 = a.parse().map_err(|_| bad(v))?;
                let b: f64 = b.parse().map_err(|_| bad(v))?;
                s.trim_window = Some(RadialWindow::new(a, b)?);
            }
            other => return Err(bad(other)),
        }
    }
    Ok(s)
}
