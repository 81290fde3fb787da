//! C ABI over `nhrmt`.
//!
//! Objects live behind opaque handles created by `nhrmt_*_new`/`_sample`/`_fit`
//! and released by the matching `_free`. Every fallible call returns an
//! [`NhrmtStatus`]; on failure `nhrmt_last_error` describes the problem for
//! the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nhrmt::ensembles::{ensemble_spectra, EnsembleClass};
use nhrmt::kickedtop::{sweep_ensemble, sweep_sector_ensemble, Scale, TopClass, TopParams};
use nhrmt::spectra::{fit_radial_density_with, DensityFit, RadialDensityModel, RadialWindow, Spectrum};
use nhrmt::stats::{
    nn_spacings_within, number_variance, sigma2_ginibre_analytic, sigma2_selfdual_analytic, DiscCounting,
    IsochroneCounting,
};
use nhrmt::unfolding::geodesic_shoot;
use nhrmt::Complex64;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NhrmtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numeric = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NhrmtEnsembleClass {
    SymmGine = 1,
    Gine = 2,
    SelfdualGine = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NhrmtTopClass {
    Oe = 1,
    Ue = 2,
    Se = 4,
}

/// One complex spectrum.
pub struct NhrmtSpectrum(Spectrum);

/// An ordered collection of spectra.
pub struct NhrmtEnsemble(Vec<Spectrum>);

/// Fitted or analytic radial density `R1(|z|)`.
pub struct NhrmtDensity(RadialDensityModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(NhrmtStatus, String);

impl Fail {
    fn numeric(e: impl std::fmt::Display) -> Self {
        Fail(NhrmtStatus::Numeric, e.to_string())
    }

    fn invalid(msg: impl Into<String>) -> Self {
        Fail(NhrmtStatus::InvalidArgument, msg.into())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NhrmtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NhrmtStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            NhrmtStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(NhrmtStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail(NhrmtStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail(NhrmtStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Fail(NhrmtStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nhrmt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn nhrmt_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nhrmt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Spectrum from `len` real and imaginary parts.
///
/// # Safety
/// `re` and `im` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nhrmt_spectrum_new(
    re: *const f64,
    im: *const f64,
    len: usize,
    out_spectrum: *mut *mut NhrmtSpectrum,
) -> NhrmtStatus {
    guard(|| {
        let dst = out(out_spectrum, "out_spectrum")?;
        let (re, im) = (slice(re, len, "re")?, slice(im, len, "im")?);
        let z = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let s = Spectrum::new(z, "ffi", "", 0).map_err(|e| Fail::invalid(e.to_string()))?;
        *dst = boxed(NhrmtSpectrum(s));
        Ok(())
    })
}

/// # Safety
/// `spectrum` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nhrmt_spectrum_free(spectrum: *mut NhrmtSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Number of eigenvalues, 0 for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nhrmt_spectrum_len(spectrum: *const NhrmtSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.0.len())
}

/// Copies the eigenvalues into `re`/`im` of capacity `cap`.
///
/// # Safety
/// `re` and `im` must have room for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn nhrmt_spectrum_copy(
    spectrum: *const NhrmtSpectrum,
    re: *mut f64,
    im: *mut f64,
    cap: usize,
) -> NhrmtStatus {
    guard(|| {
        let s = &get(spectrum, "spectrum")?.0;
        if cap < s.len() {
            return Err(Fail(NhrmtStatus::BufferTooSmall, format!("need {} slots, got {cap}", s.len())));
        }
        let (re, im) = (slice_mut(re, s.len(), "re")?, slice_mut(im, s.len(), "im")?);
        for (i, z) in s.eigenvalues.iter().enumerate() {
            re[i] = z.re;
            im[i] = z.im;
        }
        Ok(())
    })
}

fn ensemble_class(c: NhrmtEnsembleClass) -> EnsembleClass {
    match c {
        NhrmtEnsembleClass::SymmGine => EnsembleClass::SymmGinE,
        NhrmtEnsembleClass::Gine => EnsembleClass::GinE,
        NhrmtEnsembleClass::SelfdualGine => EnsembleClass::SelfDualGinE,
    }
}

/// `members` spectra of an `n`-dimensional random-matrix ensemble.
///
/// # Safety
/// `out_ensemble` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nhrmt_ensemble_sample(
    class: NhrmtEnsembleClass,
    n: usize,
    members: usize,
    seed: u64,
    out_ensemble: *mut *mut NhrmtEnsemble,
) -> NhrmtStatus {
    guard(|| {
        let dst = out(out_ensemble, "out_ensemble")?;
        let v = ensemble_spectra(ensemble_class(class), n, members, seed).map_err(Fail::numeric)?;
        *dst = boxed(NhrmtEnsemble(v));
        Ok(())
    })
}

/// Dissipative kicked-top sweep with the tabulated parameters. `points`
/// (length `n_points`, may be empty) overrides the grid of each sweep axis;
/// `parity_sectors` splits OE/UE spectra by parity.
///
/// # Safety
/// `points` must hold `n_points` entries; `out_ensemble` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nhrmt_top_sample(
    class: NhrmtTopClass,
    desk_scale: bool,
    points: *const usize,
    n_points: usize,
    parity_sectors: bool,
    seed: u64,
    out_ensemble: *mut *mut NhrmtEnsemble,
) -> NhrmtStatus {
    guard(|| {
        let dst = out(out_ensemble, "out_ensemble")?;
        let class = match class {
            NhrmtTopClass::Oe => TopClass::OE,
            NhrmtTopClass::Ue => TopClass::UE,
            NhrmtTopClass::Se => TopClass::SE,
        };
        let mut p = TopParams::preset(class, if desk_scale { Scale::Desk } else { Scale::Paper });
        let points = slice(points, n_points, "points")?;
        if !points.is_empty() {
            if points.len() != p.sweeps.len() {
                return Err(Fail::invalid(format!(
                    "{} top sweeps {} axes, got {}",
                    class.tag(),
                    p.sweeps.len(),
                    points.len()
                )));
            }
            for (s, &n) in p.sweeps.iter_mut().zip(points) {
                s.points = n;
            }
        }
        let v = if parity_sectors { sweep_sector_ensemble(&p, seed) } else { sweep_ensemble(&p, seed) }
            .map_err(Fail::numeric)?;
        *dst = boxed(NhrmtEnsemble(v));
        Ok(())
    })
}

/// Empty ensemble to fill with [`nhrmt_ensemble_push`].
#[no_mangle]
pub extern "C" fn nhrmt_ensemble_new() -> *mut NhrmtEnsemble {
    boxed(NhrmtEnsemble(Vec::new()))
}

/// Appends a copy of `spectrum`.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn nhrmt_ensemble_push(
    ensemble: *mut NhrmtEnsemble,
    spectrum: *const NhrmtSpectrum,
) -> NhrmtStatus {
    guard(|| {
        let s = get(spectrum, "spectrum")?.0.clone();
        out(ensemble, "ensemble")?.0.push(s);
        Ok(())
    })
}

/// # Safety
/// `ensemble` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nhrmt_ensemble_len(ensemble: *const NhrmtEnsemble) -> usize {
    ensemble.as_ref().map_or(0, |e| e.0.len())
}

/// New handle holding a copy of member `index`.
///
/// # Safety
/// `ensemble` must be live; `out_spectrum` writable.
#[no_mangle]
pub unsafe extern "C" fn nhrmt_ensemble_get(
    ensemble: *const NhrmtEnsemble,
    index: usize,
    out_spectrum: *mut *mut NhrmtSpectrum,
) -> NhrmtStatus {
    guard(|| {
        let dst = out(out_spectrum, "out_spectrum")?;
        let e = &get(ensemble, "ensemble")?.0;
        let s = e.get(index).ok_or_else(|| Fail::invalid(format!("index {index} out of {} members", e.len())))?;
        *dst = boxed(NhrmtSpectrum(s.clone()));
        Ok(())
    })
}

/// # Safety
/// `ensemble` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nhrmt_ensemble_free(ensemble: *mut NhrmtEnsemble) {
    if !ensemble.is_null() {
        drop(Box::from_raw(ensemble));
    }
}

/// Polynomial fit of the pooled radial density; `tail` is the radius
/// fraction dropped at each end.
///
/// # Safety
/// `ensemble` must be live; `out_density` writable.
#[no_mangle]
pub unsafe extern "C" fn nhrmt_density_fit(
    ensemble: *const NhrmtEnsemble,
    degree: usize,
    tail: f64,
    out_density: *mut *mut NhrmtDensity,
) -> NhrmtStatus {
    guard(|| {
        let dst = out(out_density, "out_density")?;
        let e = &get(ensemble, "ensemble")?.0;
        let opts = DensityFit { degree, tail, ..Default::default() };
        let m = fit_radial_density_with(e, &opts).map_err(Fail::numeric)?;
        *dst = boxed(NhrmtDensity(m));
        Ok(())
    })
}

/// Constant density on `r_min <= |z| <= r_max`.
///
/// # Safety
/// `out_density` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nhrmt_density_uniform(
    density: f64,
    r_min: f64,
    r_max: f64,
    out_density: *mut *mut NhrmtDensity,
) -> NhrmtStatus {
    guard(|| {
        let dst = out(out_density, "out_density")?;
        let w = RadialWindow::new(r_min, r_max).map_err(|e| Fail::invalid(e.to_string()))?;
        if !(density > 0.0 && density.is_finite()) {
            return Err(Fail::invalid(format!("density must be positive, got {density}")));
        }
        *dst = boxed(NhrmtDensity(RadialDensityModel::uniform(density, w)));
        Ok(())
    })
}

/// `R1(r)`, zero outside the support or for a null handle.
///
/// # Safety
/// `density` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn nhrmt_density_eval(density: *const NhrmtDensity, r: f64) -> f64 {
    density.as_ref().map_or(0.0, |d| d.0.density(r))
}

/// # Safety
/// `density` must be live; `r_min` and `r_max` writable.
#[no_mangle]
pub unsafe extern "C" fn nhrmt_density_support(
    density: *const NhrmtDensity,
    r_min: *mut f64,
    r_max: *mut f64,
) -> NhrmtStatus {
    guard(|| {
        let s = get(density, "density")?.0.support;
        *out(r_min, "r_min")? = s.r_min;
        *out(r_max, "r_max")? = s.r_max;
        Ok(())
    })
}

/// # Safety
/// `density` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nhrmt_density_free(density: *mut NhrmtDensity) {
    if !density.is_null() {
        drop(Box::from_raw(density));
    }
}

/// Closed-form Ginibre number variance.
///
/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nhrmt_sigma2_gine(n_mean: f64, out_value: *mut f64) -> NhrmtStatus {
    guard(|| {
        *out(out_value, "out_value")? = sigma2_ginibre_analytic(n_mean).map_err(|e| Fail::invalid(e.to_string()))?;
        Ok(())
    })
}

/// `Sigma2_G(<n> / sqrt 2)`, the self-dual relation.
///
/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nhrmt_sigma2_selfdual(n_mean: f64, out_value: *mut f64) -> NhrmtStatus {
    guard(|| {
        *out(out_value, "out_value")? = sigma2_selfdual_analytic(n_mean).map_err(|e| Fail::invalid(e.to_string()))?;
        Ok(())
    })
}

/// Nearest-neighbour spacings of eigenvalues with `r_min <= |z| <= r_max`,
/// locally unfolded when `density` is non-null. Writes at most `cap` values
/// and the full count to `out_len`; returns `BufferTooSmall` when they do
/// not fit.
///
/// # Safety
/// `out_values` must have room for `cap` doubles; `out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn nhrmt_nn_spacings(
    spectrum: *const NhrmtSpectrum,
    density: *const NhrmtDensity,
    r_min: f64,
    r_max: f64,
    out_values: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> NhrmtStatus {
    guard(|| {
        let s = &get(spectrum, "spectrum")?.0;
        let len = out(out_len, "out_len")?;
        let w = RadialWindow::new(r_min, r_max).map_err(|e| Fail::invalid(e.to_string()))?;
        let d = density.as_ref().map(|d| &d.0);
        let v = nn_spacings_within(s, d, Some(&w)).map_err(Fail::numeric)?;
        *len = v.len();
        if v.len() > cap {
            return Err(Fail(NhrmtStatus::BufferTooSmall, format!("need {} slots, got {cap}", v.len())));
        }
        slice_mut(out_values, v.len(), "out_values")?.copy_from_slice(&v);
        Ok(())
    })
}

/// Number variance with discs in `|z| <= r_max` of spectra at constant
/// density `rho`. Fills `sigma2` and `stderr` (length `count`).
///
/// # Safety
/// `targets`, `sigma2`, `stderr` must hold `count` doubles.
#[no_mangle]
pub unsafe extern "C" fn nhrmt_number_variance_disc(
    ensemble: *const NhrmtEnsemble,
    r_max: f64,
    rho: f64,
    targets: *const f64,
    count: usize,
    centers: usize,
    seed: u64,
    sigma2: *mut f64,
    stderr: *mut f64,
) -> NhrmtStatus {
    guard(|| {
        let e = &get(ensemble, "ensemble")?.0;
        let w = RadialWindow::new(0.0, r_max).map_err(|e| Fail::invalid(e.to_string()))?;
        let scheme = DiscCounting::new(e, w, rho).map_err(Fail::numeric)?;
        let c = number_variance(&scheme, slice(targets, count, "targets")?, centers, seed).map_err(Fail::numeric)?;
        slice_mut(sigma2, count, "sigma2")?.copy_from_slice(&c.sigma2);
        slice_mut(stderr, count, "stderr")?.copy_from_slice(&c.stderr);
        Ok(())
    })
}

/// Number variance with isochrone curves of the fitted density.
///
/// # Safety
/// `targets`, `sigma2`, `stderr` must hold `count` doubles.
#[no_mangle]
pub unsafe extern "C" fn nhrmt_number_variance_isochrone(
    ensemble: *const NhrmtEnsemble,
    density: *const NhrmtDensity,
    targets: *const f64,
    count: usize,
    centers: usize,
    directions: usize,
    steps: usize,
    seed: u64,
    sigma2: *mut f64,
    stderr: *mut f64,
) -> NhrmtStatus {
    guard(|| {
        let e = &get(ensemble, "ensemble")?.0;
        let d = &get(density, "density")?.0;
        let scheme = IsochroneCounting::new(e, d.clone(), d.support, directions, steps).map_err(Fail::numeric)?;
        let c = number_variance(&scheme, slice(targets, count, "targets")?, centers, seed).map_err(Fail::numeric)?;
        slice_mut(sigma2, count, "sigma2")?.copy_from_slice(&c.sigma2);
        slice_mut(stderr, count, "stderr")?.copy_from_slice(&c.stderr);
        Ok(())
    })
}

/// Endpoint of the geodesic of `pi R1 |dz|^2` from `(cx, cy)` along
/// `(dx, dy)` at unfolded arclength `s`, RK4 steps at most `step`.
///
/// # Safety
/// `density` must be live; `out_x` and `out_y` writable.
#[no_mangle]
pub unsafe extern "C" fn nhrmt_geodesic_shoot(
    density: *const NhrmtDensity,
    cx: f64,
    cy: f64,
    dx: f64,
    dy: f64,
    s: f64,
    step: f64,
    out_x: *mut f64,
    out_y: *mut f64,
) -> NhrmtStatus {
    guard(|| {
        let d = &get(density, "density")?.0;
        let p = geodesic_shoot(d, Complex64::new(cx, cy), Complex64::new(dx, dy), s, step).map_err(Fail::numeric)?;
        *out(out_x, "out_x")? = p.re;
        *out(out_y, "out_y")? = p.im;
        Ok(())
    })
}
