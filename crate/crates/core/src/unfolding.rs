//! Unfolding of complex spectra.
//!
//! Local unfolding rescales a nearest-neighbour distance by the square root
//! of the conformal factor `pi R1` at the pair midpoint. Non-local unfolding
//! measures lengths in the metric `ds^2 = pi R1(|z|) |dz|^2`: geodesics are
//! shot from a center and their endpoints at fixed arclength trace an
//! isochrone curve, the curved-space analogue of a counting disc.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::spatial::PointGrid;
use crate::spectra::{RadialDensityModel, Spectrum};

/// Default number of rays per isochrone.
pub const DEFAULT_DIRECTIONS: usize = 256;
/// Default integration step as a fraction of the arclength.
pub const DEFAULT_STEP_FRACTION: f64 = 1.0 / 2000.0;
/// Central region dropped from Cartesian-control counting (unfolded units).
pub const CARTESIAN_EXCLUSION_RADIUS: f64 = 2.0;

#[derive(Debug, Error, PartialEq)]
pub enum UnfoldingError {
    #[error("density undefined at r = {r}")]
    DensityUndefined { r: f64 },
    #[error("geodesic left the density support at arclength {reached} of {target}")]
    ExitsSupport { reached: f64, target: f64 },
    #[error("arclength must be positive and finite, got {0}")]
    BadArclength(f64),
    #[error("integration step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("initial direction has zero length")]
    ZeroDirection,
    #[error("an isochrone needs at least 16 directions, got {0}")]
    TooFewDirections(usize),
    #[error("isochrone polygon intersects itself (edges {0} and {1})")]
    SelfIntersecting(usize, usize),
    #[error("degenerate polygon with area {0:e}")]
    DegeneratePolygon(f64),
    #[error("power-law exponent must be at least 1")]
    BadExponent,
    #[error("r = {r} is not strictly inside the support")]
    AtSupportEdge { r: f64 },
}

/// `sqrt(pi R1(|z_mid|)) |z_a - z_b|` with `z_mid` the pair midpoint.
pub fn local_unfold_spacing(
    z_a: Complex64,
    z_b: Complex64,
    density: &RadialDensityModel,
) -> Result<f64, UnfoldingError> {
    let r = (0.5 * (z_a + z_b)).norm();
    let rho = density.density(r);
    if !density.in_support(r) || rho <= 0.0 {
        return Err(UnfoldingError::DensityUndefined { r });
    }
    Ok((PI * rho).sqrt() * (z_a - z_b).norm())
}

/// Gradient of `phi = ln(pi R1) / 2`, or `None` outside the usable support.
#[inline]
fn phi_gradient(density: &RadialDensityModel, x: f64, y: f64) -> Option<(f64, f64)> {
    let r = x.hypot(y);
    if !density.in_support(r) {
        return None;
    }
    let rho = density.density(r);
    if rho <= 0.0 {
        return None;
    }
    if r == 0.0 {
        return Some((0.0, 0.0));
    }
    let g = density.density_derivative(r) / (2.0 * rho * r);
    Some((g * x, g * y))
}

type State = [f64; 4];

#[inline]
fn rhs(density: &RadialDensityModel, s: &State) -> Option<State> {
    let [x, y, vx, vy] = *s;
    let (px, py) = phi_gradient(density, x, y)?;
    Some([vx, vy, -px * (vx * vx - vy * vy) - 2.0 * py * vx * vy, -py * (vy * vy - vx * vx) - 2.0 * px * vx * vy])
}

#[inline]
fn axpy(s: &State, h: f64, k: &State) -> State {
    [s[0] + h * k[0], s[1] + h * k[1], s[2] + h * k[2], s[3] + h * k[3]]
}

/// Endpoint of a geodesic together with its unit Euclidean tangent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicEnd {
    pub point: Complex64,
    pub tangent: Complex64,
}

/// Integrates the geodesic of `pi R1 |dz|^2` leaving `center` along
/// `direction` up to unfolded arclength `s` (classical RK4, steps no longer
/// than `step`).
pub fn geodesic_trace(
    density: &RadialDensityModel,
    center: Complex64,
    direction: Complex64,
    s: f64,
    step: f64,
) -> Result<GeodesicEnd, UnfoldingError> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(UnfoldingError::BadArclength(s));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(UnfoldingError::BadStep(step));
    }
    let len = direction.norm();
    if len == 0.0 || !len.is_finite() {
        return Err(UnfoldingError::ZeroDirection);
    }
    let r0 = center.norm();
    let rho0 = density.density(r0);
    if !density.in_support(r0) || rho0 <= 0.0 {
        return Err(UnfoldingError::DensityUndefined { r: r0 });
    }
    // unit metric speed
    let speed = 1.0 / (PI * rho0).sqrt();
    let d = direction / len;
    let mut state: State = [center.re, center.im, d.re * speed, d.im * speed];
    let steps = (s / step).ceil().max(1.0) as usize;
    let h = s / steps as f64;
    let exits = |i: usize| UnfoldingError::ExitsSupport { reached: i as f64 * h, target: s };
    for i in 0..steps {
        let k1 = rhs(density, &state).ok_or_else(|| exits(i))?;
        let k2 = rhs(density, &axpy(&state, 0.5 * h, &k1)).ok_or_else(|| exits(i))?;
        let k3 = rhs(density, &axpy(&state, 0.5 * h, &k2)).ok_or_else(|| exits(i))?;
        let k4 = rhs(density, &axpy(&state, h, &k3)).ok_or_else(|| exits(i))?;
        for j in 0..4 {
            state[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    let r = state[0].hypot(state[1]);
    if !density.in_support(r) || density.density(r) <= 0.0 {
        return Err(exits(steps));
    }
    let v = Complex64::new(state[2], state[3]);
    Ok(GeodesicEnd { point: Complex64::new(state[0], state[1]), tangent: v / v.norm() })
}

/// Endpoint of [`geodesic_trace`].
pub fn geodesic_shoot(
    density: &RadialDensityModel,
    center: Complex64,
    direction: Complex64,
    s: f64,
    step: f64,
) -> Result<Complex64, UnfoldingError> {
    geodesic_trace(density, center, direction, s, step).map(|e| e.point)
}

/// Closed polygon of geodesic endpoints at arclength `arc_radius`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IsochroneCurve {
    pub center: Complex64,
    pub arc_radius: f64,
    pub vertices: Vec<Complex64>,
    pub directions: usize,
}

impl IsochroneCurve {
    /// Signed shoelace area (positive for counter-clockwise vertices).
    pub fn signed_area(&self) -> f64 {
        polygon_signed_area(&self.vertices)
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounds(&self) -> (Complex64, Complex64) {
        polygon_bounds(&self.vertices)
    }

    pub fn contains(&self, p: Complex64) -> bool {
        point_in_polygon(&self.vertices, p)
    }

    /// `integral R1 dA` over the polygon, by fan triangulation from the
    /// center and a tensor Gauss rule on each triangle.
    pub fn expected_count(&self, density: &RadialDensityModel) -> f64 {
        let n = self.vertices.len();
        let mut total = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            total += triangle_integral(self.center, a, b, |z| density.density(z.norm()));
        }
        total
    }
}

fn triangle_integral(p0: Complex64, p1: Complex64, p2: Complex64, f: impl Fn(Complex64) -> f64) -> f64 {
    // Collapsed square (Duffy) map with 6 x 6 Gauss-Legendre nodes.
    const X: [f64; 6] = [
        0.033_765_242_898_423_99,
        0.169_395_306_766_867_74,
        0.380_690_406_958_401_5,
        0.619_309_593_041_598_5,
        0.830_604_693_233_132_3,
        0.966_234_757_101_576,
    ];
    const W: [f64; 6] = [
        0.085_662_246_189_585_17,
        0.180_380_786_524_069_3,
        0.233_956_967_286_345_5,
        0.233_956_967_286_345_5,
        0.180_380_786_524_069_3,
        0.085_662_246_189_585_17,
    ];
    let e1 = p1 - p0;
    let e2 = p2 - p0;
    let jac = (e1.re * e2.im - e1.im * e2.re).abs();
    let mut sum = 0.0;
    for (u, wu) in X.iter().zip(W) {
        for (v, wv) in X.iter().zip(W) {
            let a = u * (1.0 - v);
            let b = u * v;
            sum += wu * wv * u * f(p0 + e1 * a + e2 * b);
        }
    }
    sum * jac
}

pub fn polygon_signed_area(v: &[Complex64]) -> f64 {
    let n = v.len();
    let mut a = 0.0;
    for i in 0..n {
        let p = v[i];
        let q = v[(i + 1) % n];
        a += p.re * q.im - q.re * p.im;
    }
    0.5 * a
}

fn polygon_bounds(v: &[Complex64]) -> (Complex64, Complex64) {
    let mut lo = Complex64::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for z in v {
        lo.re = lo.re.min(z.re);
        lo.im = lo.im.min(z.im);
        hi.re = hi.re.max(z.re);
        hi.im = hi.im.max(z.im);
    }
    (lo, hi)
}

fn cross(o: Complex64, a: Complex64, b: Complex64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

fn on_segment(a: Complex64, b: Complex64, p: Complex64) -> bool {
    let scale = (b - a).norm().max(1e-300);
    cross(a, b, p).abs() <= 1e-12 * scale * scale.max((p - a).norm())
        && p.re >= a.re.min(b.re) - 1e-12 * scale
        && p.re <= a.re.max(b.re) + 1e-12 * scale
        && p.im >= a.im.min(b.im) - 1e-12 * scale
        && p.im <= a.im.max(b.im) + 1e-12 * scale
}

/// Winding-number test; points on an edge count as inside.
pub fn point_in_polygon(v: &[Complex64], p: Complex64) -> bool {
    let n = v.len();
    let mut winding = 0i32;
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        if on_segment(a, b, p) {
            return true;
        }
        if a.im <= p.im {
            if b.im > p.im && cross(a, b, p) > 0.0 {
                winding += 1;
            }
        } else if b.im <= p.im && cross(a, b, p) < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

fn segments_intersect(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// First pair of non-adjacent crossing edges, if any. Edges are sorted by
/// their leftmost x so each one only meets edges that start before it ends.
pub fn find_self_intersection(v: &[Complex64]) -> Option<(usize, usize)> {
    let n = v.len();
    if n < 4 {
        return None;
    }
    let edge = |i: usize| (v[i], v[(i + 1) % n]);
    let mut order: Vec<usize> = (0..n).collect();
    let left = |i: usize| edge(i).0.re.min(edge(i).1.re);
    order.sort_by(|&a, &b| left(a).total_cmp(&left(b)));
    for (oi, &i) in order.iter().enumerate() {
        let (a1, a2) = edge(i);
        let right = a1.re.max(a2.re);
        for &j in &order[oi + 1..] {
            if left(j) > right {
                break;
            }
            let adjacent = j == (i + 1) % n || i == (j + 1) % n;
            if adjacent {
                continue;
            }
            let (b1, b2) = edge(j);
            if segments_intersect(a1, a2, b1, b2) {
                return Some((i.min(j), i.max(j)));
            }
        }
    }
    None
}

/// Isochrone with the default step `s / 2000`.
pub fn isochrone(
    density: &RadialDensityModel,
    center: Complex64,
    s: f64,
    n_dirs: usize,
) -> Result<IsochroneCurve, UnfoldingError> {
    isochrone_with_step(density, center, s, n_dirs, s * DEFAULT_STEP_FRACTION)
}

/// Shoots `n_dirs` equally spaced rays and joins their endpoints.
pub fn isochrone_with_step(
    density: &RadialDensityModel,
    center: Complex64,
    s: f64,
    n_dirs: usize,
    step: f64,
) -> Result<IsochroneCurve, UnfoldingError> {
    if n_dirs < 16 {
        return Err(UnfoldingError::TooFewDirections(n_dirs));
    }
    let vertices = (0..n_dirs)
        .into_par_iter()
        .map(|i| {
            let dir = Complex64::from_polar(1.0, TAU * i as f64 / n_dirs as f64);
            geodesic_shoot(density, center, dir, s, step)
        })
        .collect::<Result<Vec<_>, _>>()?;
    if let Some((a, b)) = find_self_intersection(&vertices) {
        return Err(UnfoldingError::SelfIntersecting(a, b));
    }
    Ok(IsochroneCurve { center, arc_radius: s, vertices, directions: n_dirs })
}

/// Number of eigenvalues inside (or on) the curve.
pub fn count_inside(s: &Spectrum, curve: &IsochroneCurve) -> Result<usize, UnfoldingError> {
    check_polygon(curve)?;
    Ok(s.eigenvalues.iter().filter(|&&z| curve.contains(z)).count())
}

/// [`count_inside`] against a prebuilt spatial index.
pub fn count_inside_grid(grid: &PointGrid, curve: &IsochroneCurve) -> Result<usize, UnfoldingError> {
    check_polygon(curve)?;
    let (lo, hi) = curve.bounds();
    Ok(grid.in_box(lo, hi).filter(|&i| curve.contains(grid.points()[i])).count())
}

fn check_polygon(curve: &IsochroneCurve) -> Result<(), UnfoldingError> {
    let area = curve.signed_area().abs();
    if !(area >= 1e-12) {
        return Err(UnfoldingError::DegeneratePolygon(area));
    }
    Ok(())
}

/// Which map produced an [`UnfoldedSpectrum`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum UnfoldingMap {
    /// `r -> r^k`, `theta -> k theta` on `k` sheets.
    PowerLaw { k: u32 },
    /// Control: `r -> sqrt(k) r^k`, angle kept.
    RadialOnly { k: u32 },
    /// Control: `x -> 4/3 x^3 + 4 x y^2`, `y` kept.
    Cartesian,
}

impl UnfoldingMap {
    pub fn is_control(self) -> bool {
        !matches!(self, Self::PowerLaw { .. })
    }

    pub fn sheets(self) -> u32 {
        match self {
            Self::PowerLaw { k } => k,
            _ => 1,
        }
    }
}

impl fmt::Display for UnfoldingMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PowerLaw { k } => write!(f, "power-law(k={k})"),
            Self::RadialOnly { k } => write!(f, "radial-only(k={k})"),
            Self::Cartesian => f.write_str("cartesian"),
        }
    }
}

/// Unfolded point on sheet `sheet`; `angle` is in `[0, 2 pi)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UnfoldedPoint {
    pub radius: f64,
    pub angle: f64,
    pub sheet: u32,
}

impl UnfoldedPoint {
    pub fn position(&self) -> Complex64 {
        Complex64::from_polar(self.radius, self.angle)
    }

    /// Angle on the covering surface, `angle + 2 pi sheet`.
    pub fn lifted_angle(&self) -> f64 {
        self.angle + TAU * self.sheet as f64
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UnfoldedSpectrum {
    pub points: Vec<UnfoldedPoint>,
    pub map: UnfoldingMap,
    /// Counting regions must stay outside this radius.
    pub exclusion_radius: f64,
}

impl UnfoldedSpectrum {
    pub fn sheets(&self) -> u32 {
        self.map.sheets()
    }
}

fn polar(z: Complex64) -> (f64, f64) {
    let t = z.im.atan2(z.re);
    (z.norm(), if t < 0.0 { t + TAU } else { t })
}

/// `r~ = r^k`, `theta~ = k theta`; points spread over `k` Riemann sheets.
pub fn unfold_power_law(s: &Spectrum, k: u32) -> Result<UnfoldedSpectrum, UnfoldingError> {
    if k == 0 {
        return Err(UnfoldingError::BadExponent);
    }
    let kf = k as f64;
    let points = s
        .eigenvalues
        .iter()
        .map(|&z| {
            let (r, t) = polar(z);
            let lifted = kf * t;
            let sheet = ((lifted / TAU).floor() as u32).min(k - 1);
            UnfoldedPoint { radius: r.powi(k as i32), angle: lifted - TAU * sheet as f64, sheet }
        })
        .collect();
    Ok(UnfoldedSpectrum { points, map: UnfoldingMap::PowerLaw { k }, exclusion_radius: 0.0 })
}

/// Inverse of [`unfold_power_law`].
pub fn fold_power_law(u: &UnfoldedSpectrum) -> Result<Vec<Complex64>, UnfoldingError> {
    let UnfoldingMap::PowerLaw { k } = u.map else {
        return Err(UnfoldingError::BadExponent);
    };
    let kf = k as f64;
    Ok(u.points.iter().map(|p| Complex64::from_polar(p.radius.powf(1.0 / kf), p.lifted_angle() / kf)).collect())
}

/// Control map: only the radial coordinate is unfolded,
/// `r~ = sqrt(k) r^k` (`sqrt(2) r^2` for `k = 2`).
pub fn unfold_radial_only(s: &Spectrum, k: u32) -> Result<UnfoldedSpectrum, UnfoldingError> {
    if k == 0 {
        return Err(UnfoldingError::BadExponent);
    }
    let scale = (k as f64).sqrt();
    let points = s
        .eigenvalues
        .iter()
        .map(|&z| {
            let (r, t) = polar(z);
            UnfoldedPoint { radius: scale * r.powi(k as i32), angle: t, sheet: 0 }
        })
        .collect();
    Ok(UnfoldedSpectrum { points, map: UnfoldingMap::RadialOnly { k }, exclusion_radius: 0.0 })
}

/// Control map for `k = 2`: `x~ = 4/3 x^3 + 4 x y^2`, `y~ = y`.
pub fn unfold_cartesian(s: &Spectrum) -> UnfoldedSpectrum {
    let points = s
        .eigenvalues
        .iter()
        .map(|&z| {
            let (x, y) = (z.re, z.im);
            let w = Complex64::new(4.0 / 3.0 * x * x * x + 4.0 * x * y * y, y);
            let (r, t) = polar(w);
            UnfoldedPoint { radius: r, angle: t, sheet: 0 }
        })
        .collect();
    UnfoldedSpectrum { points, map: UnfoldingMap::Cartesian, exclusion_radius: CARTESIAN_EXCLUSION_RADIUS }
}

/// Gaussian curvature `K = -(1 / 2 rho) Laplacian(ln rho)` of the metric
/// `rho |dz|^2`, `rho = pi R1`, by centered differences with step `1e-4 R`.
pub fn metric_curvature(density: &RadialDensityModel, r: f64) -> Result<f64, UnfoldingError> {
    let h = 1e-4 * density.support.r_max;
    let edge = UnfoldingError::AtSupportEdge { r };
    if !(r - h > density.support.r_min && r + h < density.support.r_max && r > 0.0) {
        return Err(edge);
    }
    let log_rho = |x: f64| {
        let d = density.density(x);
        if d > 0.0 {
            Ok((PI * d).ln())
        } else {
            Err(UnfoldingError::AtSupportEdge { r })
        }
    };
    let (fm, f0, fp) = (log_rho(r - h)?, log_rho(r)?, log_rho(r + h)?);
    let second = (fp - 2.0 * f0 + fm) / (h * h);
    let first = (fp - fm) / (2.0 * h);
    Ok(-(second + first / r) / (2.0 * PI * density.density(r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::RadialWindow;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn uniform(radius: f64) -> RadialDensityModel {
        RadialDensityModel::uniform(1.0 / PI, RadialWindow::new(0.0, radius).unwrap())
    }

    fn spectrum(z: Vec<Complex64>) -> Spectrum {
        Spectrum::new(z, "test", "", 0).unwrap()
    }

    #[test]
    fn local_spacing_scales_with_density() {
        let d = uniform(10.0);
        assert!((local_unfold_spacing(c(0.0, 0.0), c(0.7, 0.0), &d).unwrap() - 0.7).abs() < 1e-15);
        let d4 = RadialDensityModel::uniform(4.0 / PI, RadialWindow::new(0.0, 10.0).unwrap());
        let raw = (c(1.0, 2.0) - c(1.3, 1.6)).norm();
        assert!((local_unfold_spacing(c(1.0, 2.0), c(1.3, 1.6), &d4).unwrap() - 2.0 * raw).abs() < 1e-14);
        assert!(matches!(
            local_unfold_spacing(c(20.0, 0.0), c(21.0, 0.0), &d),
            Err(UnfoldingError::DensityUndefined { .. })
        ));
    }

    #[test]
    fn uniform_geodesics_are_straight() {
        let d = uniform(10.0);
        let dir = Complex64::from_polar(1.0, 0.3);
        let end = geodesic_shoot(&d, c(0.5, -1.0), dir * 3.0, 2.0, 2.0 / 2000.0).unwrap();
        assert!((end - (c(0.5, -1.0) + 2.0 * dir)).norm() < 1e-12);
    }

    #[test]
    fn power_law_radial_geodesic() {
        let d = RadialDensityModel::power_law(2, RadialWindow::new(0.0, 4.0).unwrap());
        let r0 = 0.3;
        let end = geodesic_shoot(&d, c(r0, 0.0), c(1.0, 0.0), 5.0, 5.0 / 2000.0).unwrap();
        assert!((end.norm().powi(2) - r0 * r0 - 5.0).abs() < 1e-4);
        assert!(end.im.abs() < 1e-12);
    }

    #[test]
    fn geodesic_failures() {
        let d = uniform(1.0);
        assert!(matches!(
            geodesic_shoot(&d, c(0.0, 0.0), c(1.0, 0.0), 3.0, 0.01),
            Err(UnfoldingError::ExitsSupport { .. })
        ));
        assert_eq!(geodesic_shoot(&d, c(0.0, 0.0), c(1.0, 0.0), 0.0, 0.01), Err(UnfoldingError::BadArclength(0.0)));
        assert_eq!(geodesic_shoot(&d, c(0.0, 0.0), c(0.0, 0.0), 0.5, 0.01), Err(UnfoldingError::ZeroDirection));
    }

    #[test]
    fn uniform_isochrone_is_circle() {
        let d = uniform(10.0);
        let curve = isochrone(&d, c(1.0, 1.0), 2.0, DEFAULT_DIRECTIONS).unwrap();
        let dev = curve.vertices.iter().map(|v| ((v - c(1.0, 1.0)).norm() - 2.0).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-5, "{dev}");
        assert!((curve.expected_count(&d) - 4.0).abs() < 0.01);
        assert_eq!(isochrone(&d, c(0.0, 0.0), 1.0, 8), Err(UnfoldingError::TooFewDirections(8)));
    }

    #[test]
    fn power_law_isochrone_from_origin() {
        let d = RadialDensityModel::power_law(2, RadialWindow::new(0.0, 4.0).unwrap());
        let curve = isochrone(&d, c(3.0, 0.0), 3.0, 64).unwrap();
        let n = curve.expected_count(&d);
        assert!((n / 9.0 - 1.0).abs() < 0.03, "{n}");
    }

    #[test]
    fn counting_in_polygons() {
        let square = IsochroneCurve {
            center: c(0.5, 0.5),
            arc_radius: 0.5,
            vertices: vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0), c(0.0, 1.0)],
            directions: 4,
        };
        assert_eq!(count_inside(&spectrum(vec![c(0.5, 0.5), c(2.0, 2.0)]), &square).unwrap(), 1);
        assert_eq!(count_inside(&spectrum(vec![c(1.0, 0.5), c(0.0, 0.0), c(1.0 + 1e-9, 0.5)]), &square).unwrap(), 2);
        let grid = PointGrid::new(&[]);
        assert_eq!(count_inside_grid(&grid, &square).unwrap(), 0);
        let flat = IsochroneCurve { vertices: vec![c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)], ..square.clone() };
        assert!(matches!(count_inside_grid(&grid, &flat), Err(UnfoldingError::DegeneratePolygon(_))));
        // clockwise orientation counts the same
        let cw = IsochroneCurve { vertices: square.vertices.iter().rev().copied().collect(), ..square };
        assert!(cw.contains(c(0.2, 0.9)));
    }

    #[test]
    fn self_intersection_detected() {
        let bow = [c(0.0, 0.0), c(1.0, 1.0), c(1.0, 0.0), c(0.0, 1.0)];
        assert!(find_self_intersection(&bow).is_some());
        let ok = [c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0), c(0.0, 1.0)];
        assert!(find_self_intersection(&ok).is_none());
    }

    #[test]
    fn power_law_map() {
        let s = spectrum(vec![Complex64::from_polar(0.5, PI / 3.0), Complex64::from_polar(1.2, 4.0)]);
        let u = unfold_power_law(&s, 2).unwrap();
        assert!((u.points[0].radius - 0.25).abs() < 1e-15);
        assert!((u.points[0].angle - 2.0 * PI / 3.0).abs() < 1e-14);
        assert_eq!(u.points[0].sheet, 0);
        assert_eq!(u.points[1].sheet, 1);
        let back = fold_power_law(&u).unwrap();
        for (a, b) in back.iter().zip(&s.eigenvalues) {
            assert!((a - b).norm() < 1e-12);
        }
        let id = unfold_power_law(&s, 1).unwrap();
        assert!((id.points[1].position() - s.eigenvalues[1]).norm() < 1e-14);
        assert_eq!(unfold_power_law(&s, 0), Err(UnfoldingError::BadExponent));
    }

    #[test]
    fn control_maps() {
        let s = spectrum(vec![c(0.5, 0.0), c(1.0, 0.0), c(0.0, -0.7)]);
        let r = unfold_radial_only(&s, 2).unwrap();
        assert!((r.points[0].radius - 2f64.sqrt() * 0.25).abs() < 1e-15);
        assert!(r.map.is_control());
        let cart = unfold_cartesian(&s);
        assert!((cart.points[1].position() - c(4.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!((cart.points[2].position() - c(0.0, -0.7)).norm() < 1e-15);
        assert!(cart.exclusion_radius > 0.0);
    }

    #[test]
    fn curvature_of_flat_metrics() {
        let u = uniform(3.0);
        assert_eq!(metric_curvature(&u, 1.0).unwrap(), 0.0);
        let d = RadialDensityModel::power_law(2, RadialWindow::new(0.0, 4.0).unwrap());
        for i in 0..=14 {
            let r = 4.0 * (0.2 + 0.05 * i as f64);
            assert!(metric_curvature(&d, r).unwrap().abs() < 1e-6);
        }
        assert!(matches!(metric_curvature(&d, 4.0), Err(UnfoldingError::AtSupportEdge { .. })));
        // Gaussian bump: ln rho = -r^2 has Laplacian -4
        let bump =
            RadialDensityModel::from_r_coefficients(&[1.0 / PI, 0.0, -1.0 / PI], RadialWindow::new(0.0, 0.9).unwrap());
        assert!(metric_curvature(&bump, 0.5).unwrap() > 0.0);
    }
}
