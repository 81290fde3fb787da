//! Conservative and dissipative quantum kicked tops.
//!
//! Operators act on the `2J + 1` dimensional spin space in the `J_z`
//! eigenbasis, ordered `m = -J, ..., J`. Exponentials of non-diagonal
//! generators go through Hermitian eigendecompositions, which keeps the
//! conservative Floquet operators unitary to roundoff.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::numerics::{eig_general, eig_hermitian, ComplexMatrix, HermitianEigen, NumericsError};
use crate::seed::mix_seed;
use crate::spectra::{dedup_kramers, Spectrum, SpectrumError};

#[derive(Debug, Error)]
pub enum TopError {
    #[error("invalid spin J = {0}: 2J must be a positive integer")]
    InvalidSpin(f64),
    #[error("the SE top needs half-integer J for Kramers degeneracy, got J = {0}")]
    NeedsHalfInteger(f64),
    #[error("dissipation strength must be non-negative, got {0}")]
    NegativeGamma(f64),
    #[error("empty or reversed sweep range for {param}: [{lo}, {hi}] with {points} points")]
    BadSweep { param: SweptParam, lo: f64, hi: f64, points: usize },
    #[error("parameter {param} cannot be swept for the {class} top")]
    SweepNotAllowed { param: SweptParam, class: TopClass },
    #[error("the SE top has no parity symmetry to split")]
    NoParity,
    #[error("member {member}: {source}")]
    Member { member: usize, source: Box<TopError> },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

/// Total angular momentum, stored as `2J` so half-integers are exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Spin {
    twice_j: u32,
}

impl Spin {
    pub fn from_twice(twice_j: u32) -> Result<Self, TopError> {
        if twice_j == 0 {
            return Err(TopError::InvalidSpin(0.0));
        }
        Ok(Self { twice_j })
    }

    pub fn new(j: f64) -> Result<Self, TopError> {
        let twice = 2.0 * j;
        if !(twice.is_finite() && twice >= 1.0 && (twice - twice.round()).abs() < 1e-9) {
            return Err(TopError::InvalidSpin(j));
        }
        Self::from_twice(twice.round() as u32)
    }

    pub fn j(self) -> f64 {
        self.twice_j as f64 / 2.0
    }

    /// Hilbert-space dimension `N = 2J + 1`.
    pub fn dim(self) -> usize {
        self.twice_j as usize + 1
    }

    pub fn is_half_integer(self) -> bool {
        self.twice_j % 2 == 1
    }

    /// `m` values in basis order.
    pub fn m_values(self) -> impl Iterator<Item = f64> {
        let j = self.j();
        (0..self.dim()).map(move |i| i as f64 - j)
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_half_integer() {
            write!(f, "{}/2", self.twice_j)
        } else {
            write!(f, "{}", self.twice_j / 2)
        }
    }
}

/// `(J_x, J_y, J_z)` in the `J_z` eigenbasis.
pub fn build_j_ops(spin: Spin) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
    let n = spin.dim();
    let j = spin.j();
    let m: Vec<f64> = spin.m_values().collect();
    let mut jx = ComplexMatrix::zeros(n, n);
    let mut jy = ComplexMatrix::zeros(n, n);
    for i in 0..n - 1 {
        // <m+1| J+ |m>
        let a = (j * (j + 1.0) - m[i] * (m[i] + 1.0)).sqrt();
        jx[(i + 1, i)] = Complex64::new(0.5 * a, 0.0);
        jx[(i, i + 1)] = Complex64::new(0.5 * a, 0.0);
        jy[(i + 1, i)] = Complex64::new(0.0, -0.5 * a);
        jy[(i, i + 1)] = Complex64::new(0.0, 0.5 * a);
    }
    let jz = ComplexMatrix::from_diag(&m.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>());
    (jx, jy, jz)
}

fn phases(spin: Spin, f: impl Fn(f64) -> f64) -> Vec<Complex64> {
    spin.m_values().map(|m| Complex64::from_polar(1.0, -f(m))).collect()
}

const CACHE_SLOTS: usize = 8;

#[derive(Clone, Copy, PartialEq, Eq)]
enum CacheKey {
    Jx(u64),
    Jy2(u64),
}

fn expi(e: &HermitianEigen, theta: f64) -> ComplexMatrix {
    e.apply(|x| Complex64::from_polar(1.0, -theta * x))
}

/// Caches the decompositions shared by every member of a sweep, plus the
/// most recently used kick exponentials.
pub struct TopOperators {
    spin: Spin,
    jx: HermitianEigen,
    cache: Mutex<Vec<(CacheKey, Arc<ComplexMatrix>)>>,
    jy_sq: HermitianEigen,
    /// `J_x J_z + J_z J_x`
    xz: ComplexMatrix,
    /// `J_x J_y + J_y J_x`
    xy: ComplexMatrix,
    jz_sq: ComplexMatrix,
}

impl TopOperators {
    pub fn new(spin: Spin) -> Result<Self, TopError> {
        let (jx, jy, jz) = build_j_ops(spin);
        let jy_sq = jy.matmul(&jy)?;
        let jz_sq = jz.matmul(&jz)?;
        let xz = jx.matmul(&jz)?.add(&jz.matmul(&jx)?)?;
        let xy = jx.matmul(&jy)?.add(&jy.matmul(&jx)?)?;
        Ok(Self {
            spin,
            jx: eig_hermitian(&jx)?,
            cache: Mutex::new(Vec::new()),
            jy_sq: eig_hermitian(&jy_sq)?,
            xz,
            xy,
            jz_sq,
        })
    }

    fn cached(&self, key: CacheKey, build: impl FnOnce() -> ComplexMatrix) -> Arc<ComplexMatrix> {
        if let Some((_, m)) = self.cache.lock().unwrap().iter().find(|(k, _)| *k == key) {
            return m.clone();
        }
        let m = Arc::new(build());
        let mut cache = self.cache.lock().unwrap();
        if cache.len() >= CACHE_SLOTS {
            cache.remove(0);
        }
        cache.push((key, m.clone()));
        m
    }

    fn kick_x(&self, alpha: f64) -> Arc<ComplexMatrix> {
        self.cached(CacheKey::Jx(alpha.to_bits()), || expi(&self.jx, alpha))
    }

    fn kick_y2(&self, theta: f64) -> Arc<ComplexMatrix> {
        self.cached(CacheKey::Jy2(theta.to_bits()), || expi(&self.jy_sq, theta))
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    /// `exp(-i tau J_z^2) exp(-i alpha J_x)`; with `normalized` the kick is
    /// `tau J_z^2 / (2J)` instead.
    pub fn floquet_oe(&self, alpha: f64, tau: f64, normalized: bool) -> Result<ComplexMatrix, TopError> {
        let scale = if normalized { tau / (2.0 * self.spin.j()) } else { tau };
        let kick = phases(self.spin, |m| scale * m * m);
        Ok(self.kick_x(alpha).scale_rows(&kick)?)
    }

    /// `exp(-i k J_y^2 / 2J) exp(-i tau J_z^2 / 2J) exp(-i alpha J_x)`.
    pub fn floquet_ue(&self, alpha: f64, tau: f64, k: f64) -> Result<ComplexMatrix, TopError> {
        let two_j = 2.0 * self.spin.j();
        let kick = phases(self.spin, |m| tau * m * m / two_j);
        let inner = self.kick_x(alpha).scale_rows(&kick)?;
        Ok(self.kick_y2(k / two_j).matmul(&inner)?)
    }

    /// `exp(-i tau1 J_z^2 / 2J) exp(-(i / 2J)(tau2 J_z^2 + tau3 {J_x, J_z} + tau4 {J_x, J_y}))`.
    pub fn floquet_se(&self, tau1: f64, tau2: f64, tau3: f64, tau4: f64) -> Result<ComplexMatrix, TopError> {
        if !self.spin.is_half_integer() {
            return Err(TopError::NeedsHalfInteger(self.spin.j()));
        }
        let two_j = 2.0 * self.spin.j();
        let gen = self
            .jz_sq
            .scale(Complex64::new(tau2, 0.0))
            .add(&self.xz.scale(Complex64::new(tau3, 0.0)))?
            .add(&self.xy.scale(Complex64::new(tau4, 0.0)))?;
        let second = expi(&eig_hermitian(&gen)?, 1.0 / two_j);
        let first = phases(self.spin, |m| tau1 * m * m / two_j);
        Ok(second.scale_rows(&first)?)
    }

    /// Diagonal of `exp(-gamma J_z^2 / 2J)`.
    pub fn dissipation_diag(&self, gamma: f64) -> Result<Vec<f64>, TopError> {
        dissipation_diag(self.spin, gamma)
    }
}

pub fn floquet_oe(spin: Spin, alpha: f64, tau: f64) -> Result<ComplexMatrix, TopError> {
    TopOperators::new(spin)?.floquet_oe(alpha, tau, false)
}

pub fn floquet_ue(spin: Spin, alpha: f64, tau: f64, k: f64) -> Result<ComplexMatrix, TopError> {
    TopOperators::new(spin)?.floquet_ue(alpha, tau, k)
}

pub fn floquet_se(spin: Spin, tau1: f64, tau2: f64, tau3: f64, tau4: f64) -> Result<ComplexMatrix, TopError> {
    if !spin.is_half_integer() {
        return Err(TopError::NeedsHalfInteger(spin.j()));
    }
    TopOperators::new(spin)?.floquet_se(tau1, tau2, tau3, tau4)
}

fn dissipation_diag(spin: Spin, gamma: f64) -> Result<Vec<f64>, TopError> {
    if !(gamma >= 0.0) {
        return Err(TopError::NegativeGamma(gamma));
    }
    let two_j = 2.0 * spin.j();
    Ok(spin.m_values().map(|m| (-gamma * m * m / two_j).exp()).collect())
}

/// `D = exp(-gamma J_z^2 / 2J)` as a diagonal matrix.
pub fn dissipation_op(spin: Spin, gamma: f64) -> Result<ComplexMatrix, TopError> {
    let d = dissipation_diag(spin, gamma)?;
    Ok(ComplexMatrix::from_diag(&d.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopClass {
    /// Time-reversal invariant, `T^2 = +1`.
    OE,
    /// No time-reversal invariance.
    UE,
    /// Time-reversal invariant, `T^2 = -1` (half-integer J).
    SE,
}

impl TopClass {
    pub fn tag(self) -> &'static str {
        match self {
            Self::OE => "oe",
            Self::UE => "ue",
            Self::SE => "se",
        }
    }

    pub fn sweepable(self) -> &'static [SweptParam] {
        match self {
            Self::OE => &[SweptParam::Tau],
            Self::UE => &[SweptParam::Tau, SweptParam::K],
            Self::SE => &[SweptParam::Tau3, SweptParam::Tau4],
        }
    }
}

impl fmt::Display for TopClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for TopClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "oe" => Ok(Self::OE),
            "ue" => Ok(Self::UE),
            "se" => Ok(Self::SE),
            other => Err(format!("unknown top class `{other}` (expected oe, ue or se)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweptParam {
    Tau,
    K,
    Tau3,
    Tau4,
}

impl fmt::Display for SweptParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Tau => "tau",
            Self::K => "k",
            Self::Tau3 => "tau3",
            Self::Tau4 => "tau4",
        })
    }
}

/// Uniform grid over `[lo, hi]`; a single point sits at the midpoint.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Sweep {
    pub param: SweptParam,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Sweep {
    pub fn value(&self, i: usize) -> f64 {
        if self.points == 1 {
            0.5 * (self.lo + self.hi)
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.points - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.value(i)).collect()
    }
}

/// Which tabulated system size a preset uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// `J = 1000` (OE, UE) or `J = 999.5` (SE).
    Paper,
    /// `J = 250` (OE, UE) or `J = 249.5` (SE).
    Desk,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TopParams {
    pub class: TopClass,
    pub spin: Spin,
    pub alpha: f64,
    pub tau: f64,
    pub k: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub tau4: f64,
    pub gamma: f64,
    /// Use `tau J_z^2 / 2J` in the OE kick instead of the bare `tau J_z^2`.
    pub oe_normalized: bool,
    pub sweeps: Vec<Sweep>,
}

impl TopParams {
    /// Tabulated parameter set; `gamma` scales as `c / N` with the chosen size.
    pub fn preset(class: TopClass, scale: Scale) -> Self {
        let spin = match (class, scale) {
            (TopClass::SE, Scale::Paper) => Spin { twice_j: 1999 },
            (TopClass::SE, Scale::Desk) => Spin { twice_j: 499 },
            (_, Scale::Paper) => Spin { twice_j: 2000 },
            (_, Scale::Desk) => Spin { twice_j: 500 },
        };
        let n = spin.dim() as f64;
        let desk = scale == Scale::Desk;
        let base = Self {
            class,
            spin,
            alpha: 0.0,
            tau: 0.0,
            k: 0.0,
            tau1: 0.0,
            tau2: 0.0,
            tau3: 0.0,
            tau4: 0.0,
            gamma: 0.0,
            oe_normalized: false,
            sweeps: Vec::new(),
        };
        match class {
            TopClass::OE => Self {
                alpha: 7.0,
                tau: 325.0,
                gamma: 5.0 / n,
                sweeps: vec![Sweep {
                    param: SweptParam::Tau,
                    lo: 300.0,
                    hi: 350.0,
                    points: if desk { 201 } else { 51 },
                }],
                ..base
            },
            TopClass::UE => Self {
                alpha: 25.0,
                tau: 45.0,
                k: 63.0,
                gamma: 4.0 / n,
                sweeps: vec![
                    Sweep { param: SweptParam::Tau, lo: 40.0, hi: 50.0, points: if desk { 21 } else { 11 } },
                    Sweep { param: SweptParam::K, lo: 60.0, hi: 66.0, points: if desk { 13 } else { 7 } },
                ],
                ..base
            },
            TopClass::SE => Self {
                tau1: 307.0,
                tau2: 336.0,
                tau3: 518.0,
                tau4: 395.0,
                gamma: 5.0 / n,
                sweeps: vec![
                    Sweep { param: SweptParam::Tau3, lo: 506.0, hi: 530.0, points: if desk { 25 } else { 13 } },
                    Sweep { param: SweptParam::Tau4, lo: 370.0, hi: 420.0, points: if desk { 21 } else { 11 } },
                ],
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<(), TopError> {
        if !(self.gamma >= 0.0) {
            return Err(TopError::NegativeGamma(self.gamma));
        }
        if self.class == TopClass::SE && !self.spin.is_half_integer() {
            return Err(TopError::NeedsHalfInteger(self.spin.j()));
        }
        for s in &self.sweeps {
            if !self.class.sweepable().contains(&s.param) {
                return Err(TopError::SweepNotAllowed { param: s.param, class: self.class });
            }
            if s.points == 0 || !(s.lo <= s.hi) || (s.points > 1 && s.lo == s.hi) {
                return Err(TopError::BadSweep { param: s.param, lo: s.lo, hi: s.hi, points: s.points });
            }
        }
        Ok(())
    }

    pub fn members(&self) -> usize {
        self.sweeps.iter().map(|s| s.points).product()
    }

    /// Parameters of sweep member `index` (row-major over the sweep axes).
    pub fn member(&self, index: usize) -> TopParams {
        let mut p = self.clone();
        let mut rest = index;
        for s in self.sweeps.iter().rev() {
            let v = s.value(rest % s.points);
            rest /= s.points;
            match s.param {
                SweptParam::Tau => p.tau = v,
                SweptParam::K => p.k = v,
                SweptParam::Tau3 => p.tau3 = v,
                SweptParam::Tau4 => p.tau4 = v,
            }
        }
        p.sweeps.clear();
        p
    }

    pub fn digest(&self) -> String {
        let mut s = format!("class={};j={};gamma={};", self.class, self.spin, self.gamma);
        match self.class {
            TopClass::OE => s += &format!("alpha={};tau={};normalized={}", self.alpha, self.tau, self.oe_normalized),
            TopClass::UE => s += &format!("alpha={};tau={};k={}", self.alpha, self.tau, self.k),
            TopClass::SE => {
                s += &format!("tau1={};tau2={};tau3={};tau4={}", self.tau1, self.tau2, self.tau3, self.tau4)
            }
        }
        s
    }
}

/// Conservative Floquet operator of the class at the given (unswept) parameters.
pub fn conservative_floquet(ops: &TopOperators, p: &TopParams) -> Result<ComplexMatrix, TopError> {
    match p.class {
        TopClass::OE => ops.floquet_oe(p.alpha, p.tau, p.oe_normalized),
        TopClass::UE => ops.floquet_ue(p.alpha, p.tau, p.k),
        TopClass::SE => ops.floquet_se(p.tau1, p.tau2, p.tau3, p.tau4),
    }
}

/// `F = D * Floquet` with `D = exp(-gamma J_z^2 / 2J)`.
pub fn dissipative_floquet(p: &TopParams) -> Result<ComplexMatrix, TopError> {
    p.validate()?;
    let ops = TopOperators::new(p.spin)?;
    dissipative_floquet_with(&ops, p)
}

pub fn dissipative_floquet_with(ops: &TopOperators, p: &TopParams) -> Result<ComplexMatrix, TopError> {
    let f = conservative_floquet(ops, p)?;
    let d: Vec<Complex64> = ops.dissipation_diag(p.gamma)?.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
    Ok(f.scale_rows(&d)?)
}

/// Spectrum of one dissipative top; SE spectra are Kramers-deduplicated.
pub fn top_spectrum(ops: &TopOperators, p: &TopParams, seed: u64) -> Result<Spectrum, TopError> {
    let f = dissipative_floquet_with(ops, p)?;
    let ev = eig_general(&f)?;
    let s = Spectrum::new(ev, format!("kickedtop:{}", p.class), p.digest(), seed)?;
    if p.class == TopClass::SE {
        let tol = s.default_dedup_tol();
        return Ok(dedup_kramers(&s, tol)?);
    }
    Ok(s)
}

/// One spectrum per grid point of the parameter sweep.
pub fn sweep_ensemble(params: &TopParams, seed: u64) -> Result<Vec<Spectrum>, TopError> {
    params.validate()?;
    let ops = TopOperators::new(params.spin)?;
    (0..params.members())
        .into_par_iter()
        .map(|i| {
            top_spectrum(&ops, &params.member(i), mix_seed(seed, i as u64))
                .map_err(|e| TopError::Member { member: i, source: Box::new(e) })
        })
        .collect()
}

/// Sector of the parity `P |m> = |-m>`. The OE and UE Floquet operators and
/// the dissipation all commute with the rotation `exp(-i pi J_x)`, which acts
/// as `P` up to a global phase, so their spectra split into two independent
/// blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Self::Even => 1.0,
            Self::Odd => -1.0,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Self::Even => "even",
            Self::Odd => "odd",
        }
    }
}

/// `max |F[m, m'] - F[-m, -m']|`; zero when `F` commutes with `P`.
pub fn parity_defect(f: &ComplexMatrix) -> f64 {
    let n = f.rows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((f[(i, j)] - f[(n - 1 - i, n - 1 - j)]).norm());
        }
    }
    worst
}

/// Restriction of `F` to one parity sector, in the basis
/// `(|m> + s |-m>) / sqrt 2` for `m < 0`, plus `|0>` in the even sector.
pub fn parity_block(f: &ComplexMatrix, parity: Parity) -> Result<ComplexMatrix, TopError> {
    f.validate_square()?;
    let n = f.rows();
    let half = n / 2;
    let s = parity.sign();
    let middle = (n % 2 == 1 && parity == Parity::Even).then_some(half);
    let dim = half + middle.is_some() as usize;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    Ok(ComplexMatrix::from_fn(dim, dim, |a, b| match (a < half, b < half) {
        (true, true) => {
            let (i, j) = (a, b);
            let (ip, jp) = (n - 1 - i, n - 1 - j);
            (f[(i, j)] + f[(i, jp)] * s + f[(ip, j)] * s + f[(ip, jp)]) * 0.5
        }
        (true, false) => {
            let c = middle.unwrap_or(0);
            (f[(a, c)] + f[(n - 1 - a, c)] * s) * r
        }
        (false, true) => {
            let c = middle.unwrap_or(0);
            (f[(c, b)] + f[(c, n - 1 - b)] * s) * r
        }
        (false, false) => {
            let c = middle.unwrap_or(0);
            f[(c, c)]
        }
    }))
}

/// Even and odd sector spectra of one OE or UE top.
pub fn top_sector_spectra(ops: &TopOperators, p: &TopParams, seed: u64) -> Result<[Spectrum; 2], TopError> {
    if p.class == TopClass::SE {
        return Err(TopError::NoParity);
    }
    let f = dissipative_floquet_with(ops, p)?;
    let sector = |parity: Parity, stream: u64| -> Result<Spectrum, TopError> {
        let ev = eig_general(&parity_block(&f, parity)?)?;
        let digest = format!("{};parity={}", p.digest(), parity.tag());
        Ok(Spectrum::new(ev, format!("kickedtop:{}", p.class), digest, mix_seed(seed, stream))?)
    };
    Ok([sector(Parity::Even, 0)?, sector(Parity::Odd, 1)?])
}

/// Like [`sweep_ensemble`] but with each member split into its two parity
/// sectors: spectra `2i` and `2i + 1` belong to member `i`.
pub fn sweep_sector_ensemble(params: &TopParams, seed: u64) -> Result<Vec<Spectrum>, TopError> {
    params.validate()?;
    let ops = TopOperators::new(params.spin)?;
    let pairs = (0..params.members())
        .into_par_iter()
        .map(|i| {
            top_sector_spectra(&ops, &params.member(i), mix_seed(seed, i as u64))
                .map_err(|e| TopError::Member { member: i, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(pairs.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unitarity_defect(f: &ComplexMatrix) -> f64 {
        f.adjoint().matmul(f).unwrap().max_abs_diff(&ComplexMatrix::identity(f.rows())).unwrap()
    }

    #[test]
    fn spin_half_operators() {
        let (jx, _jy, jz) = build_j_ops(Spin::new(0.5).unwrap());
        assert_eq!(jz.diagonal(), vec![c(-0.5, 0.0), c(0.5, 0.0)]);
        assert!((jx[(0, 1)] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((jx[(1, 0)] - c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn spin_one_jx_spectrum() {
        let (jx, _, _) = build_j_ops(Spin::new(1.0).unwrap());
        let e = eig_hermitian(&jx).unwrap();
        for (got, want) in e.values.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn angular_momentum_algebra() {
        for twice in [1u32, 2, 3, 7, 20] {
            let spin = Spin::from_twice(twice).unwrap();
            let j = spin.j();
            let (jx, jy, jz) = build_j_ops(spin);
            let comm = jx.matmul(&jy).unwrap().sub(&jy.matmul(&jx).unwrap()).unwrap();
            assert!(comm.max_abs_diff(&jz.scale(c(0.0, 1.0))).unwrap() < 1e-10);
            let casimir =
                jx.matmul(&jx).unwrap().trace() + jy.matmul(&jy).unwrap().trace() + jz.matmul(&jz).unwrap().trace();
            let want = spin.dim() as f64 * j * (j + 1.0);
            assert!((casimir.re / want - 1.0).abs() < 1e-8 && casimir.im.abs() < 1e-8);
        }
    }

    #[test]
    fn spin_validation() {
        assert!(Spin::new(0.0).is_err());
        assert!(Spin::new(1.25).is_err());
        assert_eq!(Spin::new(999.5).unwrap().dim(), 2000);
        assert!(Spin::new(249.5).unwrap().is_half_integer());
    }

    #[test]
    fn trivial_parameters_give_identity() {
        let spin = Spin::new(3.5).unwrap();
        let id = ComplexMatrix::identity(spin.dim());
        assert!(floquet_oe(spin, 0.0, 0.0).unwrap().max_abs_diff(&id).unwrap() < 1e-12);
        assert!(floquet_ue(spin, 0.0, 0.0, 0.0).unwrap().max_abs_diff(&id).unwrap() < 1e-12);
        assert!(floquet_se(spin, 0.0, 0.0, 0.0, 0.0).unwrap().max_abs_diff(&id).unwrap() < 1e-12);
        assert!(dissipation_op(spin, 0.0).unwrap().max_abs_diff(&id).unwrap() == 0.0);
    }

    #[test]
    fn spin_half_oe_eigenvalues() {
        // J_z^2 = I/4 so F = e^{-i tau/4} e^{-i alpha J_x}.
        let (alpha, tau) = (0.7, 1.3);
        let f = floquet_oe(Spin::new(0.5).unwrap(), alpha, tau).unwrap();
        let mut ev = eig_general(&f).unwrap();
        ev.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
        let mut want = [
            Complex64::from_polar(1.0, -tau / 4.0 - alpha / 2.0),
            Complex64::from_polar(1.0, -tau / 4.0 + alpha / 2.0),
        ];
        want.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
        for (g, w) in ev.iter().zip(want) {
            assert!((g - w).norm() < 1e-12);
        }
    }

    #[test]
    fn ue_without_second_kick_is_rescaled_oe() {
        let spin = Spin::new(4.0).unwrap();
        let (alpha, tau) = (1.1, 2.7);
        let ue = floquet_ue(spin, alpha, tau, 0.0).unwrap();
        let oe = floquet_oe(spin, alpha, tau / (2.0 * spin.j())).unwrap();
        assert!(ue.max_abs_diff(&oe).unwrap() < 1e-12);
    }

    #[test]
    fn conservative_operators_are_unitary() {
        let spin = Spin::new(5.5).unwrap();
        assert!(unitarity_defect(&floquet_oe(spin, 7.0, 310.0).unwrap()) < 1e-9);
        assert!(unitarity_defect(&floquet_ue(spin, 25.0, 45.0, 63.0).unwrap()) < 1e-9);
        assert!(unitarity_defect(&floquet_se(spin, 307.0, 336.0, 510.0, 380.0).unwrap()) < 1e-9);
    }

    #[test]
    fn oe_time_reversal() {
        // T = exp(i alpha J_x) K:  T F T^-1 = A conj(F) A^dagger with A = exp(i alpha J_x).
        let spin = Spin::new(6.0).unwrap();
        let (alpha, tau) = (7.0, 312.0);
        let f = floquet_oe(spin, alpha, tau).unwrap();
        let (jx, _, _) = build_j_ops(spin);
        let a = crate::numerics::expi_hermitian(&jx, -alpha).unwrap();
        let tft = a.matmul(&f.conj()).unwrap().matmul(&a.adjoint()).unwrap();
        assert!(tft.max_abs_diff(&f.adjoint()).unwrap() < 1e-9);
    }

    #[test]
    fn se_requires_half_integer_spin() {
        assert!(matches!(floquet_se(Spin::new(3.0).unwrap(), 1.0, 1.0, 1.0, 1.0), Err(TopError::NeedsHalfInteger(_))));
    }

    #[test]
    fn se_pairs_stay_tight_above_recursion_size() {
        // preset SE couplings at a size where the tridiagonal solver
        // would otherwise switch to divide and conquer
        let p = TopParams {
            spin: Spin::from_twice(299).unwrap(),
            sweeps: vec![],
            ..TopParams::preset(TopClass::SE, Scale::Desk)
        };
        let s = Spectrum::new(eig_general(&dissipative_floquet(&p).unwrap()).unwrap(), "se", "", 0).unwrap();
        let dedup = dedup_kramers(&s, 1e-9 * s.median_modulus()).unwrap();
        assert_eq!(dedup.len(), 150);
    }

    #[test]
    fn se_small_spin_is_kramers_degenerate() {
        let spin = Spin::new(1.5).unwrap();
        for gamma in [0.0, 0.8] {
            let p = TopParams {
                tau1: 0.31,
                tau2: 0.47,
                tau3: 0.23,
                tau4: 0.59,
                gamma,
                sweeps: vec![],
                spin,
                ..TopParams::preset(TopClass::SE, Scale::Desk)
            };
            let f = dissipative_floquet(&p).unwrap();
            let mut ev = eig_general(&f).unwrap();
            ev.sort_by(|a, b| a.re.total_cmp(&b.re));
            // two pairs
            let mut partners = 0;
            for i in 0..4 {
                let d = (0..4).filter(|&j| j != i).map(|j| (ev[i] - ev[j]).norm()).fold(f64::INFINITY, f64::min);
                if d < 1e-8 {
                    partners += 1;
                }
            }
            assert_eq!(partners, 4, "gamma {gamma}: {ev:?}");
            let s = top_spectrum(&TopOperators::new(spin).unwrap(), &p, 0).unwrap();
            assert_eq!(s.len(), 2);
        }
    }

    #[test]
    fn dissipation_entries() {
        let d = dissipation_op(Spin::new(1.0).unwrap(), 2.0).unwrap();
        let e = (-1.0f64).exp();
        assert_eq!(d.diagonal(), vec![c(e, 0.0), c(1.0, 0.0), c(e, 0.0)]);
        let spin = Spin::new(1000.0).unwrap();
        let d = dissipation_diag(spin, 5.0 / 2001.0).unwrap();
        let want = (-5.0 * 1000.0f64.powi(2) / (2001.0 * 2000.0)).exp();
        assert!((d[2000] - want).abs() < 1e-15);
        assert!(((-1.2494f64).exp() / d[2000] - 1.0).abs() < 1e-4);
        assert!(matches!(dissipation_op(spin, -0.1), Err(TopError::NegativeGamma(_))));
    }

    #[test]
    fn dissipative_spectrum_inside_unit_disc() {
        let mut p = TopParams::preset(TopClass::UE, Scale::Desk);
        p.spin = Spin::new(20.0).unwrap();
        p.gamma = 4.0 / 41.0;
        p.sweeps.clear();
        let ev = eig_general(&dissipative_floquet(&p).unwrap()).unwrap();
        assert!(ev.iter().all(|z| z.norm() <= 1.0 + 1e-9));
        assert!(ev.iter().any(|z| z.norm() < 0.999));
        p.gamma = 0.0;
        let ev = eig_general(&dissipative_floquet(&p).unwrap()).unwrap();
        assert!(ev.iter().all(|z| (z.norm() - 1.0).abs() < 1e-9));
    }

    #[test]
    fn sweep_grids() {
        let mut p = TopParams::preset(TopClass::OE, Scale::Paper);
        assert_eq!(p.sweeps[0].values(), (300..=350).map(f64::from).collect::<Vec<_>>());
        p.sweeps[0].points = 1;
        assert_eq!(p.member(0).tau, 325.0);

        let ue = TopParams::preset(TopClass::UE, Scale::Paper);
        assert_eq!(ue.members(), 11 * 7);
        let last = ue.member(ue.members() - 1);
        assert_eq!((last.tau, last.k), (50.0, 66.0));
        let second = ue.member(1);
        assert_eq!((second.tau, second.k), (40.0, 61.0));

        let mut bad = ue.clone();
        bad.sweeps[0].lo = 60.0;
        assert!(matches!(bad.validate(), Err(TopError::BadSweep { .. })));
        let mut bad = ue.clone();
        bad.sweeps.push(Sweep { param: SweptParam::Tau3, lo: 0.0, hi: 1.0, points: 2 });
        assert!(matches!(bad.validate(), Err(TopError::SweepNotAllowed { .. })));
    }

    #[test]
    fn small_sweep_is_deterministic() {
        let mut p = TopParams::preset(TopClass::SE, Scale::Desk);
        p.spin = Spin::new(9.5).unwrap();
        p.gamma = 5.0 / 20.0;
        p.sweeps[0].points = 2;
        p.sweeps[1].points = 2;
        let a = sweep_ensemble(&p, 5).unwrap();
        assert_eq!(a.len(), 4);
        assert!(a.iter().all(|s| s.len() == 10 && s.dedup_applied));
        assert_eq!(a, sweep_ensemble(&p, 5).unwrap());
    }

    #[test]
    fn parity_blocks_carry_the_spectrum() {
        let spin = Spin::new(6.0).unwrap();
        let ops = TopOperators::new(spin).unwrap();
        let mut p = TopParams::preset(TopClass::UE, Scale::Desk);
        p.spin = spin;
        p.gamma = 0.3;
        p.sweeps.clear();
        let f = dissipative_floquet_with(&ops, &p).unwrap();
        assert!(parity_defect(&f) < 1e-12);
        let even = parity_block(&f, Parity::Even).unwrap();
        let odd = parity_block(&f, Parity::Odd).unwrap();
        assert_eq!((even.rows(), odd.rows()), (7, 6));
        let mut split: Vec<Complex64> = eig_general(&even).unwrap();
        split.extend(eig_general(&odd).unwrap());
        let full = eig_general(&f).unwrap();
        for z in &full {
            let d = split.iter().map(|w| (z - w).norm()).fold(f64::MAX, f64::min);
            assert!(d < 1e-9, "{z} missing from the sectors");
        }

        let se = floquet_se(Spin::new(4.5).unwrap(), 1.0, 2.0, 3.0, 4.0).unwrap();
        assert!(parity_defect(&se) > 1e-3);
    }

    #[test]
    fn sector_sweep_doubles_members() {
        let mut p = TopParams::preset(TopClass::OE, Scale::Desk);
        p.spin = Spin::new(10.0).unwrap();
        p.sweeps[0].points = 3;
        let s = sweep_sector_ensemble(&p, 2).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!((s[0].len(), s[1].len()), (11, 10));
        let mut se = TopParams::preset(TopClass::SE, Scale::Desk);
        se.spin = Spin::new(3.5).unwrap();
        assert!(matches!(sweep_sector_ensemble(&se, 0), Err(TopError::Member { .. })));
    }
}
