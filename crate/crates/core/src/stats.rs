//! Fluctuation statistics of complex spectra.
//!
//! Nearest-neighbour spacings and spacing ratios are local and run through a
//! [`PointGrid`]. Number variance counts points inside regions holding
//! `<n>` points on average: plain discs for constant-density data, isochrone
//! curves for spectra with a fitted radial density, and discs on Riemann
//! sheets for power-law unfolded spectra.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use thiserror::Error;

use crate::seed::stream_rng;
use crate::spatial::PointGrid;
use crate::special::{bessel_i0e, gauss_legendre, integrate};
use crate::spectra::{RadialDensityModel, RadialWindow, Spectrum, SpectrumError};
use crate::unfolding::{
    count_inside_grid, isochrone_with_step, local_unfold_spacing, IsochroneCurve, UnfoldedSpectrum, UnfoldingError,
};

/// Spacing histograms: bins over `[0, SPACING_MAX]`.
pub const SPACING_BINS: usize = 60;
pub const SPACING_MAX: f64 = 3.0;
/// Ratio histograms: bins over `[0, 1]`.
pub const RATIO_BINS: usize = 20;
pub const DEFAULT_S_MAX_FIT: f64 = 0.5;
/// Number-variance standard errors come from this many batches of centers.
pub const VARIANCE_BATCHES: usize = 10;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least {needed} points, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("point {index} coincides with a neighbour")]
    Duplicate { index: usize },
    #[error("need at least 4 populated bins below the fit cutoff, got {got}")]
    InsufficientBins { got: usize },
    #[error("invalid histogram: {0}")]
    BadHistogram(String),
    #[error("histograms have different binning")]
    BinMismatch,
    #[error("target <n> must be finite and non-negative, got {0}")]
    BadTarget(f64),
    #[error("no admissible counting region for <n> = {n_mean}")]
    EmptyRegion { n_mean: f64 },
    #[error("only {found} of {wanted} admissible centers for <n> = {n_mean} after {attempts} attempts")]
    CenterStarved { n_mean: f64, wanted: usize, found: usize, attempts: usize },
    #[error("no spectra to count")]
    NoMembers,
    #[error(transparent)]
    Unfolding(#[from] UnfoldingError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    Counts,
    Pdf,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub normalization: Normalization,
}

impl Histogram {
    /// `bins` equal bins over `[lo, hi]`; the last bin is closed, samples
    /// outside the range are dropped.
    pub fn uniform(
        samples: &[f64],
        lo: f64,
        hi: f64,
        bins: usize,
        normalization: Normalization,
    ) -> Result<Self, StatsError> {
        if bins == 0 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(StatsError::BadHistogram(format!("{bins} bins over [{lo}, {hi}]")));
        }
        let edges = (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect();
        Self::with_edges(samples, edges, normalization)
    }

    pub fn with_edges(samples: &[f64], bin_edges: Vec<f64>, normalization: Normalization) -> Result<Self, StatsError> {
        if bin_edges.len() < 2 || bin_edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(StatsError::BadHistogram("edges must be strictly ascending".into()));
        }
        let bins = bin_edges.len() - 1;
        let (lo, hi) = (bin_edges[0], bin_edges[bins]);
        let mut counts = vec![0u64; bins];
        for &x in samples {
            if !(x >= lo && x <= hi) {
                continue;
            }
            let i = bin_edges.partition_point(|&e| e <= x).saturating_sub(1).min(bins - 1);
            counts[i] += 1;
        }
        Ok(Self { bin_edges, counts, normalization })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Raw counts, or the density `count / (total * width)`.
    pub fn values(&self) -> Vec<f64> {
        match self.normalization {
            Normalization::Counts => self.counts.iter().map(|&c| c as f64).collect(),
            Normalization::Pdf => {
                let total = self.total().max(1) as f64;
                self.counts.iter().zip(self.widths()).map(|(&c, w)| c as f64 / (total * w)).collect()
            }
        }
    }

    pub fn integral(&self) -> f64 {
        self.values().iter().zip(self.widths()).map(|(v, w)| v * w).sum()
    }

    /// Largest bin-wise difference of the normalized values.
    pub fn sup_distance(&self, other: &Histogram) -> Result<f64, StatsError> {
        if self.bin_edges != other.bin_edges || self.normalization != other.normalization {
            return Err(StatsError::BinMismatch);
        }
        Ok(self.values().iter().zip(other.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// Largest difference against the bin averages of a reference density.
    pub fn sup_distance_to(&self, pdf: impl Fn(f64) -> f64) -> f64 {
        self.values()
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(v, w)| (v - gauss_legendre(&pdf, w[0], w[1], 4) / (w[1] - w[0])).abs())
            .fold(0.0, f64::max)
    }
}

/// Pdf histogram with the standard spacing binning.
pub fn spacing_histogram(samples: &[f64]) -> Result<Histogram, StatsError> {
    Histogram::uniform(samples, 0.0, SPACING_MAX, SPACING_BINS, Normalization::Pdf)
}

/// Pdf histogram with the standard ratio binning.
pub fn ratio_histogram(samples: &[f64]) -> Result<Histogram, StatsError> {
    Histogram::uniform(samples, 0.0, 1.0, RATIO_BINS, Normalization::Pdf)
}

fn focus_indices(s: &Spectrum, focus: Option<&RadialWindow>) -> Vec<usize> {
    (0..s.len()).filter(|&i| focus.is_none_or(|w| w.contains(s.eigenvalues[i]))).collect()
}

/// Distance from each eigenvalue to its nearest neighbour, locally unfolded
/// when a density is given.
pub fn nn_spacings(s: &Spectrum, density: Option<&RadialDensityModel>) -> Result<Vec<f64>, StatsError> {
    nn_spacings_within(s, density, None)
}

/// Like [`nn_spacings`], but only for eigenvalues inside `focus`; neighbours
/// are still searched over the whole spectrum.
pub fn nn_spacings_within(
    s: &Spectrum,
    density: Option<&RadialDensityModel>,
    focus: Option<&RadialWindow>,
) -> Result<Vec<f64>, StatsError> {
    if s.len() < 2 {
        return Err(StatsError::TooFew { needed: 2, got: s.len() });
    }
    let grid = PointGrid::new(&s.eigenvalues);
    focus_indices(s, focus)
        .into_iter()
        .map(|i| {
            let z = s.eigenvalues[i];
            let (j, d) = grid.k_nearest(z, 1, Some(i))[0];
            match density {
                Some(model) => Ok(local_unfold_spacing(z, s.eigenvalues[j], model)?),
                None => Ok(d),
            }
        })
        .collect()
}

/// `|AB| / |AC|` with `B` and `C` the nearest and next-nearest neighbours of `A`.
pub fn spacing_ratio_type1(s: &Spectrum) -> Result<Vec<f64>, StatsError> {
    spacing_ratio_type1_within(s, None)
}

pub fn spacing_ratio_type1_within(s: &Spectrum, focus: Option<&RadialWindow>) -> Result<Vec<f64>, StatsError> {
    if s.len() < 3 {
        return Err(StatsError::TooFew { needed: 3, got: s.len() });
    }
    let grid = PointGrid::new(&s.eigenvalues);
    focus_indices(s, focus)
        .into_iter()
        .map(|i| {
            let nn = grid.k_nearest(s.eigenvalues[i], 2, Some(i));
            if nn[0].1 == 0.0 {
                return Err(StatsError::Duplicate { index: i });
            }
            Ok(nn[0].1 / nn[1].1)
        })
        .collect()
}

/// For `A` with nearest neighbour `B` whose own nearest neighbour is
/// `C != A`: `min(|AB| / |BC|, |BC| / |AB|)`. Mutual pairs are skipped.
pub fn spacing_ratio_type2(s: &Spectrum) -> Result<Vec<f64>, StatsError> {
    spacing_ratio_type2_within(s, None)
}

pub fn spacing_ratio_type2_within(s: &Spectrum, focus: Option<&RadialWindow>) -> Result<Vec<f64>, StatsError> {
    if s.len() < 3 {
        return Err(StatsError::TooFew { needed: 3, got: s.len() });
    }
    let grid = PointGrid::new(&s.eigenvalues);
    let mut out = Vec::new();
    for i in focus_indices(s, focus) {
        let (b, ab) = grid.k_nearest(s.eigenvalues[i], 1, Some(i))[0];
        let (c, bc) = grid.k_nearest(s.eigenvalues[b], 1, Some(b))[0];
        if c == i {
            continue;
        }
        if ab == 0.0 || bc == 0.0 {
            return Err(StatsError::Duplicate { index: if ab == 0.0 { i } else { b } });
        }
        out.push((ab / bc).min(bc / ab));
    }
    Ok(out)
}

/// Power-law fit `P(s) ~ A s^slope` to the small-s bins of a histogram.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub bins_used: usize,
}

/// Count-weighted least squares of `ln P` against `ln s` over populated bins
/// lying below `s_max_fit`. Each bin is placed at the abscissa where the
/// fitted power law equals its bin average, iterated to a fixed point, so
/// the wide first bins do not bias the exponent.
pub fn fit_small_s_exponent(h: &Histogram, s_max_fit: f64) -> Result<PowerFit, StatsError> {
    let values = h.values();
    let bins: Vec<(f64, f64, f64, f64)> = h
        .bin_edges
        .windows(2)
        .zip(values.iter().zip(&h.counts))
        .filter(|(w, (_, &c))| w[1] <= s_max_fit + 1e-12 && w[0] >= 0.0 && c > 0)
        .map(|(w, (&v, &c))| (w[0], w[1], v, c as f64))
        .collect();
    if bins.len() < 4 {
        return Err(StatsError::InsufficientBins { got: bins.len() });
    }
    let mut slope = 1.0;
    let mut fit = weighted_line(&bins, |a, b| 0.5 * (a + b));
    for _ in 0..50 {
        let p = fit.0;
        if !(p > -0.99) {
            break;
        }
        let next = weighted_line(&bins, |a, b| {
            let mean = (b.powf(p + 1.0) - a.powf(p + 1.0)) / ((p + 1.0) * (b - a));
            if p.abs() < 1e-9 {
                0.5 * (a + b)
            } else {
                mean.powf(1.0 / p)
            }
        });
        let done = (next.0 - slope).abs() < 1e-12;
        slope = next.0;
        fit = next;
        if done {
            break;
        }
    }
    Ok(PowerFit { slope: fit.0, intercept: fit.1, stderr: fit.2, bins_used: bins.len() })
}

fn weighted_line(bins: &[(f64, f64, f64, f64)], abscissa: impl Fn(f64, f64) -> f64) -> (f64, f64, f64) {
    let pts: Vec<(f64, f64, f64)> = bins.iter().map(|&(a, b, v, c)| (abscissa(a, b).ln(), v.ln(), c)).collect();
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // Poisson weights: Var(ln count) ~ 1 / count, so the weights are inverse variances.
    let stderr = (1.0 / sxx).sqrt();
    (slope, intercept, stderr)
}

/// `Sigma^2(<n>)` with batch-means standard errors.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VarianceCurve {
    pub n_mean: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Mean count actually observed per target.
    pub observed_mean: Vec<f64>,
    pub centers_used: usize,
}

/// A counting region on the (possibly multi-sheeted) unfolded plane.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Disc {
        center: Complex64,
        radius: f64,
    },
    Curve(IsochroneCurve),
    /// Disc on a covering surface of angular period `period`; `lifted` is the
    /// center's angle on that surface.
    SheetDisc {
        center: Complex64,
        lifted: f64,
        radius: f64,
        period: f64,
    },
}

/// A candidate center; `lifted` is only used on multi-sheeted surfaces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub center: Complex64,
    pub lifted: f64,
}

/// How counting regions are drawn and evaluated.
pub trait CountingScheme: Sync {
    fn members(&self) -> usize;
    /// Cheap random proposal for a center.
    fn candidate(&self, n_mean: f64, rng: &mut dyn RngCore) -> Result<Candidate, StatsError>;
    /// Builds the region around a candidate, `None` if inadmissible.
    fn region(&self, n_mean: f64, c: &Candidate) -> Option<Region>;
    fn count(&self, member: usize, region: &Region) -> usize;
}

/// Area-uniform radius in `[lo, hi]`.
fn area_uniform_radius(lo: f64, hi: f64, rng: &mut dyn RngCore) -> f64 {
    let u: f64 = rng.gen();
    (lo * lo + u * (hi * hi - lo * lo)).sqrt()
}

/// Discs of radius `sqrt(<n> / (pi rho))` inside an annular window of
/// constant-density data.
pub struct DiscCounting {
    grids: Vec<PointGrid>,
    window: RadialWindow,
    density: f64,
}

impl DiscCounting {
    pub fn new(members: &[Spectrum], window: RadialWindow, density: f64) -> Result<Self, StatsError> {
        if members.is_empty() {
            return Err(StatsError::NoMembers);
        }
        Ok(Self { grids: members.iter().map(|s| PointGrid::new(&s.eigenvalues)).collect(), window, density })
    }

    fn radius(&self, n_mean: f64) -> f64 {
        (n_mean / (PI * self.density)).sqrt()
    }

    fn admissible(&self, n_mean: f64) -> Option<(f64, f64)> {
        let rho = self.radius(n_mean);
        let lo = if self.window.r_min > 0.0 { self.window.r_min + rho } else { 0.0 };
        let hi = self.window.r_max - rho;
        (hi > lo).then_some((lo, hi))
    }
}

impl CountingScheme for DiscCounting {
    fn members(&self) -> usize {
        self.grids.len()
    }

    fn candidate(&self, n_mean: f64, rng: &mut dyn RngCore) -> Result<Candidate, StatsError> {
        let (lo, hi) = self.admissible(n_mean).ok_or(StatsError::EmptyRegion { n_mean })?;
        let r = area_uniform_radius(lo, hi, rng);
        Ok(Candidate { center: Complex64::from_polar(r, rng.gen::<f64>() * TAU), lifted: 0.0 })
    }

    fn region(&self, n_mean: f64, c: &Candidate) -> Option<Region> {
        Some(Region::Disc { center: c.center, radius: self.radius(n_mean) })
    }

    fn count(&self, member: usize, region: &Region) -> usize {
        count_region(&self.grids[member], region, |_| 0.0)
    }
}

fn count_region(grid: &PointGrid, region: &Region, lifted_of: impl Fn(usize) -> f64) -> usize {
    match region {
        Region::Disc { center, radius } => {
            let d = Complex64::new(*radius, *radius);
            grid.in_box(center - d, center + d).filter(|&i| (grid.points()[i] - center).norm() <= *radius).count()
        }
        Region::Curve(curve) => count_inside_grid(grid, curve).unwrap_or(0),
        Region::SheetDisc { center, lifted, radius, period } => {
            let d = Complex64::new(*radius, *radius);
            grid.in_box(center - d, center + d)
                .filter(|&i| {
                    if (grid.points()[i] - center).norm() > *radius {
                        return false;
                    }
                    let delta = (lifted_of(i) - lifted).rem_euclid(*period);
                    delta.min(period - delta) < PI
                })
                .count()
        }
    }
}

/// Isochrone curves of unfolded radius `sqrt(<n>)` on spectra with a fitted
/// radial density.
pub struct IsochroneCounting {
    density: RadialDensityModel,
    grids: Vec<PointGrid>,
    window: RadialWindow,
    directions: usize,
    steps: usize,
    /// `(r, u(r))` table of the radial unfolded coordinate `u = integral sqrt(pi R1) dr`.
    radial: Vec<(f64, f64)>,
}

impl IsochroneCounting {
    /// `window` bounds where centers and curves may lie; `steps` RK4 steps per ray.
    pub fn new(
        members: &[Spectrum],
        density: RadialDensityModel,
        window: RadialWindow,
        directions: usize,
        steps: usize,
    ) -> Result<Self, StatsError> {
        if members.is_empty() {
            return Err(StatsError::NoMembers);
        }
        let window = window.intersect(&density.support).ok_or(StatsError::EmptyRegion { n_mean: 0.0 })?;
        let table = 2000;
        let mut radial = Vec::with_capacity(table + 1);
        let mut u = 0.0;
        let h = (window.r_max - window.r_min) / table as f64;
        radial.push((window.r_min, 0.0));
        for i in 0..table {
            let a = window.r_min + i as f64 * h;
            u += gauss_legendre(|r| (PI * density.density(r)).sqrt(), a, a + h, 1);
            radial.push((a + h, u));
        }
        Ok(Self {
            density,
            grids: members.iter().map(|s| PointGrid::new(&s.eigenvalues)).collect(),
            window,
            directions,
            steps: steps.max(1),
            radial,
        })
    }

    /// Radii whose radial geodesic distance to both window edges is at least `s`.
    fn admissible(&self, s: f64) -> Option<(f64, f64)> {
        let total = self.radial.last()?.1;
        let lo_u = if self.window.r_min > 0.0 { s } else { 0.0 };
        let hi_u = total - s;
        if hi_u <= lo_u {
            return None;
        }
        let at = |target: f64| {
            let i = self.radial.partition_point(|p| p.1 < target).clamp(1, self.radial.len() - 1);
            let (r0, u0) = self.radial[i - 1];
            let (r1, u1) = self.radial[i];
            if u1 > u0 {
                r0 + (r1 - r0) * (target - u0) / (u1 - u0)
            } else {
                r0
            }
        };
        let (lo, hi) = (if lo_u > 0.0 { at(lo_u) } else { self.window.r_min }, at(hi_u));
        (hi > lo).then_some((lo, hi))
    }

    pub fn density(&self) -> &RadialDensityModel {
        &self.density
    }
}

impl CountingScheme for IsochroneCounting {
    fn members(&self) -> usize {
        self.grids.len()
    }

    fn candidate(&self, n_mean: f64, rng: &mut dyn RngCore) -> Result<Candidate, StatsError> {
        let (lo, hi) = self.admissible(n_mean.sqrt()).ok_or(StatsError::EmptyRegion { n_mean })?;
        let r = area_uniform_radius(lo, hi, rng);
        Ok(Candidate { center: Complex64::from_polar(r, rng.gen::<f64>() * TAU), lifted: 0.0 })
    }

    fn region(&self, n_mean: f64, c: &Candidate) -> Option<Region> {
        let s = n_mean.sqrt();
        let curve = isochrone_with_step(&self.density, c.center, s, self.directions, s / self.steps as f64).ok()?;
        curve.vertices.iter().all(|&v| self.window.contains(v)).then_some(Region::Curve(curve))
    }

    fn count(&self, member: usize, region: &Region) -> usize {
        count_region(&self.grids[member], region, |_| 0.0)
    }
}

/// Discs of radius `sqrt(<n>)` on unfolded unit-density spectra. With
/// several sheets a disc lives on one sheet of the covering surface and must
/// not contain the branch point.
pub struct SheetCounting {
    grids: Vec<PointGrid>,
    lifted: Vec<Vec<f64>>,
    sheets: u32,
    r_max: f64,
    exclusion: f64,
}

impl SheetCounting {
    /// `r_max` bounds the unfolded radius of admissible discs.
    pub fn new(members: &[UnfoldedSpectrum], r_max: f64) -> Result<Self, StatsError> {
        let first = members.first().ok_or(StatsError::NoMembers)?;
        Ok(Self {
            grids: members
                .iter()
                .map(|u| PointGrid::new(&u.points.iter().map(|p| p.position()).collect::<Vec<_>>()))
                .collect(),
            lifted: members.iter().map(|u| u.points.iter().map(|p| p.lifted_angle()).collect()).collect(),
            sheets: first.sheets(),
            r_max,
            exclusion: first.exclusion_radius,
        })
    }

    fn admissible(&self, radius: f64) -> Option<(f64, f64)> {
        let lo = if self.sheets > 1 || self.exclusion > 0.0 { self.exclusion + radius } else { 0.0 };
        let hi = self.r_max - radius;
        (hi > lo).then_some((lo, hi))
    }
}

impl CountingScheme for SheetCounting {
    fn members(&self) -> usize {
        self.grids.len()
    }

    fn candidate(&self, n_mean: f64, rng: &mut dyn RngCore) -> Result<Candidate, StatsError> {
        let (lo, hi) = self.admissible(n_mean.sqrt()).ok_or(StatsError::EmptyRegion { n_mean })?;
        let r = area_uniform_radius(lo, hi, rng);
        let lifted = rng.gen::<f64>() * TAU * self.sheets as f64;
        Ok(Candidate { center: Complex64::from_polar(r, lifted), lifted })
    }

    fn region(&self, n_mean: f64, c: &Candidate) -> Option<Region> {
        let radius = n_mean.sqrt();
        if self.sheets == 1 {
            return Some(Region::Disc { center: c.center, radius });
        }
        Some(Region::SheetDisc { center: c.center, lifted: c.lifted, radius, period: TAU * self.sheets as f64 })
    }

    fn count(&self, member: usize, region: &Region) -> usize {
        let lifted = &self.lifted[member];
        count_region(&self.grids[member], region, |i| lifted[i])
    }
}

/// Discs of radius `sqrt(<n>)` on the image of the disc `|z| <= r_max` under
/// the Cartesian map `x~ = 4/3 x^3 + 4 x y^2`, `y~ = y`, kept inside the
/// image and away from the exclusion radius around the origin.
pub struct CartesianCounting {
    grids: Vec<PointGrid>,
    r_max: f64,
    exclusion: f64,
    x_extent: f64,
}

impl CartesianCounting {
    /// `r_max` bounds the folded radius.
    pub fn new(members: &[UnfoldedSpectrum], r_max: f64) -> Result<Self, StatsError> {
        let first = members.first().ok_or(StatsError::NoMembers)?;
        let x_extent = (0..=400).map(|i| Self::half_width(r_max, r_max * i as f64 / 400.0)).fold(0.0, f64::max);
        Ok(Self {
            grids: members
                .iter()
                .map(|u| PointGrid::new(&u.points.iter().map(|p| p.position()).collect::<Vec<_>>()))
                .collect(),
            r_max,
            exclusion: first.exclusion_radius,
            x_extent,
        })
    }

    /// Half-width in `x~` of the image at height `y`.
    fn half_width(r_max: f64, y: f64) -> f64 {
        let x = (r_max * r_max - y * y).max(0.0).sqrt();
        4.0 / 3.0 * x * x * x + 4.0 * x * y * y
    }

    fn inside(&self, c: Complex64, radius: f64) -> bool {
        if c.im.abs() + radius > self.r_max || c.norm() < self.exclusion + radius {
            return false;
        }
        (0..64).all(|i| {
            let p = c + Complex64::from_polar(radius, TAU * i as f64 / 64.0);
            p.re.abs() <= Self::half_width(self.r_max, p.im)
        })
    }
}

impl CountingScheme for CartesianCounting {
    fn members(&self) -> usize {
        self.grids.len()
    }

    fn candidate(&self, n_mean: f64, rng: &mut dyn RngCore) -> Result<Candidate, StatsError> {
        if n_mean.sqrt() >= self.r_max {
            return Err(StatsError::EmptyRegion { n_mean });
        }
        let x = (2.0 * rng.gen::<f64>() - 1.0) * self.x_extent;
        let y = (2.0 * rng.gen::<f64>() - 1.0) * self.r_max;
        Ok(Candidate { center: Complex64::new(x, y), lifted: 0.0 })
    }

    fn region(&self, n_mean: f64, c: &Candidate) -> Option<Region> {
        let radius = n_mean.sqrt();
        self.inside(c.center, radius).then_some(Region::Disc { center: c.center, radius })
    }

    fn count(&self, member: usize, region: &Region) -> usize {
        count_region(&self.grids[member], region, |_| 0.0)
    }
}

/// `Sigma^2 = <n^2> - <n>^2` over `centers` random regions per target,
/// pooled over all members. Target `t` draws from stream `t` of `seed`.
pub fn number_variance(
    scheme: &impl CountingScheme,
    n_targets: &[f64],
    centers: usize,
    seed: u64,
) -> Result<VarianceCurve, StatsError> {
    if scheme.members() == 0 {
        return Err(StatsError::NoMembers);
    }
    let mut curve = VarianceCurve {
        n_mean: n_targets.to_vec(),
        sigma2: Vec::with_capacity(n_targets.len()),
        stderr: Vec::with_capacity(n_targets.len()),
        observed_mean: Vec::with_capacity(n_targets.len()),
        centers_used: centers,
    };
    for (t, &n_mean) in n_targets.iter().enumerate() {
        if !(n_mean >= 0.0 && n_mean.is_finite()) {
            return Err(StatsError::BadTarget(n_mean));
        }
        if n_mean == 0.0 || centers == 0 {
            curve.sigma2.push(0.0);
            curve.stderr.push(0.0);
            curve.observed_mean.push(0.0);
            continue;
        }
        let regions = draw_regions(scheme, n_mean, centers, seed, t as u64)?;
        let counts: Vec<Vec<f64>> = regions
            .par_iter()
            .map(|reg| (0..scheme.members()).map(|m| scheme.count(m, reg) as f64).collect())
            .collect();
        let (mean, var) = moments(counts.iter().flatten().copied());
        let batches = VARIANCE_BATCHES.min(centers);
        let batch_vars: Vec<f64> = (0..batches)
            .map(|b| {
                let (lo, hi) = (b * centers / batches, (b + 1) * centers / batches);
                moments(counts[lo..hi].iter().flatten().copied()).1
            })
            .collect();
        let stderr = if batches > 1 {
            let (_, bv) = moments(batch_vars.iter().copied());
            (bv * batches as f64 / (batches - 1) as f64).sqrt() / (batches as f64).sqrt()
        } else {
            0.0
        };
        curve.sigma2.push(var);
        curve.stderr.push(stderr);
        curve.observed_mean.push(mean);
    }
    Ok(curve)
}

fn draw_regions(
    scheme: &impl CountingScheme,
    n_mean: f64,
    centers: usize,
    seed: u64,
    stream: u64,
) -> Result<Vec<Region>, StatsError> {
    let mut rng = stream_rng(seed, stream);
    let mut regions = Vec::with_capacity(centers);
    let max_attempts = 50 * centers + 100;
    let mut attempts = 0;
    while regions.len() < centers {
        if attempts >= max_attempts {
            return Err(StatsError::CenterStarved { n_mean, wanted: centers, found: regions.len(), attempts });
        }
        let chunk = (centers - regions.len()).max(8).min(max_attempts - attempts);
        let candidates = (0..chunk).map(|_| scheme.candidate(n_mean, &mut rng)).collect::<Result<Vec<_>, _>>()?;
        attempts += chunk;
        let built: Vec<Option<Region>> = candidates.par_iter().map(|c| scheme.region(n_mean, c)).collect();
        regions.extend(built.into_iter().flatten().take(centers - regions.len()));
    }
    Ok(regions)
}

/// Mean and population variance.
fn moments(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut sum, mut sq) = (0.0, 0.0, 0.0);
    for x in xs {
        n += 1.0;
        sum += x;
        sq += x * x;
    }
    if n == 0.0 {
        return (0.0, 0.0);
    }
    let mean = sum / n;
    (mean, (sq / n - mean * mean).max(0.0))
}

/// Ginibre number variance
/// `<n> - integral_0^<n> integral_0^<n> I0(2 sqrt(e1 e2)) exp(-e1 - e2) de1 de2`,
/// integrated in `u = sqrt(e)` with the scaled Bessel function.
pub fn sigma2_ginibre_analytic(n_mean: f64) -> Result<f64, StatsError> {
    if !(n_mean >= 0.0 && n_mean.is_finite()) {
        return Err(StatsError::BadTarget(n_mean));
    }
    if n_mean == 0.0 {
        return Ok(0.0);
    }
    let a = n_mean.sqrt();
    let inner =
        |u: f64| integrate(|v| 4.0 * u * v * bessel_i0e(2.0 * u * v) * (-(u - v) * (u - v)).exp(), 0.0, a, 1e-11).0;
    let (double, _) = integrate(inner, 0.0, a, 1e-9);
    Ok(n_mean - double)
}

/// Self-dual Ginibre number variance `Sigma^2_G(<n> / sqrt 2)`.
pub fn sigma2_selfdual_analytic(n_mean: f64) -> Result<f64, StatsError> {
    if !(n_mean >= 0.0) {
        return Err(StatsError::BadTarget(n_mean));
    }
    sigma2_ginibre_analytic(n_mean / std::f64::consts::SQRT_2)
}

/// Uncorrelated points: `Sigma^2 = <n>`.
pub fn sigma2_poisson(n_mean: f64) -> f64 {
    n_mean
}

/// Ginibre two-point function `(1 - exp(-|z1 - z2|^2)) / pi^2`.
pub fn r2_ginibre(z1: Complex64, z2: Complex64) -> f64 {
    (1.0 - (-(z1 - z2).norm_sqr()).exp()) / (PI * PI)
}

/// Poisson process of intensity `1 / pi` on the disc of the given radius.
pub fn poisson_spectrum(radius: f64, seed: u64, rng: &mut impl Rng) -> Result<Spectrum, StatsError> {
    let count = Poisson::new((radius * radius).max(1e-9)).map(|p| p.sample(rng) as usize).unwrap_or(0).max(1);
    let points =
        (0..count).map(|_| Complex64::from_polar(radius * rng.gen::<f64>().sqrt(), rng.gen::<f64>() * TAU)).collect();
    Ok(Spectrum::new(points, "poisson", format!("radius={radius}"), seed)?)
}
