//! Gaussian non-Hermitian ensembles: complex symmetric (beta = 1),
//! Ginibre (beta = 2) and self-dual complex-quaternion (beta = 4).
//!
//! Component variances follow from the weight `exp(-(beta/2) Tr M^H M)`:
//!
//! | class        | diagonal | off-diagonal |
//! |--------------|----------|--------------|
//! | symmetric    | 1        | 1/2          |
//! | Ginibre      | 1/2      | 1/2          |
//! | self-dual    | 1/4 (in the 2N x 2N representation) |
//!
//! With these, every class has its eigenvalues in a disc of radius `sqrt(N)`
//! with bulk density `1/pi`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::numerics::{eig_general, ComplexMatrix, NumericsError};
use crate::seed::{mix_seed, stream_rng};
use crate::spectra::{dedup_kramers, Spectrum, SpectrumError};

/// Entrywise tolerance of [`check_selfdual`].
pub const SELFDUAL_TOL: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("matrix dimension must be at least 2, got {0}")]
    TooSmall(usize),
    #[error("self-duality needs an even dimension, got {0}")]
    OddDimension(usize),
    #[error("member {member}: {source}")]
    Member { member: usize, source: Box<EnsembleError> },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum EnsembleClass {
    #[serde(rename = "symm-gine")]
    SymmGinE,
    #[serde(rename = "gine")]
    GinE,
    #[serde(rename = "selfdual-gine")]
    SelfDualGinE,
}

impl EnsembleClass {
    pub fn beta(self) -> u32 {
        match self {
            Self::SymmGinE => 1,
            Self::GinE => 2,
            Self::SelfDualGinE => 4,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Self::SymmGinE => "symm-gine",
            Self::GinE => "gine",
            Self::SelfDualGinE => "selfdual-gine",
        }
    }
}

impl fmt::Display for EnsembleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for EnsembleClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "symm-gine" | "symm" | "sg" | "sgine" | "oe" => Ok(Self::SymmGinE),
            "gine" | "ginibre" | "g" | "ue" => Ok(Self::GinE),
            "selfdual-gine" | "self-dual-gine" | "selfdual" | "sdg" | "se" => Ok(Self::SelfDualGinE),
            other => Err(format!("unknown ensemble class `{other}` (expected symm-gine, gine or selfdual-gine)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EnsembleSpec {
    pub class: EnsembleClass,
    /// Scalar dimension for beta = 1, 2; quaternion dimension for beta = 4.
    pub n: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(class: EnsembleClass, n: usize, seed: u64) -> Result<Self, EnsembleError> {
        if n < 2 {
            return Err(EnsembleError::TooSmall(n));
        }
        Ok(Self { class, n, seed })
    }

    pub fn beta(&self) -> u32 {
        self.class.beta()
    }

    /// Side of the complex matrix actually diagonalised.
    pub fn matrix_dim(&self) -> usize {
        match self.class {
            EnsembleClass::SelfDualGinE => 2 * self.n,
            _ => self.n,
        }
    }

    pub fn digest(&self) -> String {
        format!("class={};n={};beta={}", self.class, self.n, self.beta())
    }
}

#[inline]
fn gauss<R: Rng + ?Sized>(rng: &mut R, var: f64) -> f64 {
    let x: f64 = rng.sample(StandardNormal);
    x * var.sqrt()
}

#[inline]
fn complex_gauss<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let re = gauss(rng, var);
    let im = gauss(rng, var);
    Complex64::new(re, im)
}

/// Complex symmetric Gaussian matrix, `M[j][k] = M[k][j]`.
pub fn sample_symm_gine<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        m[(j, j)] = complex_gauss(rng, 1.0);
        for k in (j + 1)..n {
            let z = complex_gauss(rng, 0.5);
            m[(j, k)] = z;
            m[(k, j)] = z;
        }
    }
    m
}

/// Ginibre matrix: i.i.d. complex Gaussians, variance 1/2 per component.
pub fn sample_gine<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| complex_gauss(rng, 0.5))
}

/// Quaternion dual of a `2n x 2n` matrix, `(M^D)_{jk} = (M_{kj})^D` blockwise,
/// with `[[a, b], [c, d]]^D = [[d, -b], [-c, a]]`.
pub fn quaternion_dual(m: &ComplexMatrix) -> Result<ComplexMatrix, EnsembleError> {
    let dim = m.rows();
    if dim % 2 == 1 || !m.is_square() {
        return Err(EnsembleError::OddDimension(dim));
    }
    let mut out = ComplexMatrix::zeros(dim, dim);
    for bj in 0..dim / 2 {
        for bk in 0..dim / 2 {
            let (r, c) = (2 * bk, 2 * bj);
            let (a, b, cc, d) = (m[(r, c)], m[(r, c + 1)], m[(r + 1, c)], m[(r + 1, c + 1)]);
            let (or, oc) = (2 * bj, 2 * bk);
            out[(or, oc)] = d;
            out[(or, oc + 1)] = -b;
            out[(or + 1, oc)] = -cc;
            out[(or + 1, oc + 1)] = a;
        }
    }
    Ok(out)
}

/// Self-dual `2n x 2n` matrix `(G + G^D) / 2` from a Ginibre draw `G`.
///
/// `G^D = J G^T J^T` with `J` the symplectic unit, so this is the projector
/// `(G - J G^T J) / 2`; each independent component ends with variance 1/4.
pub fn sample_selfdual_gine<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = sample_gine(2 * n, rng);
    let gd = quaternion_dual(&g).expect("even by construction");
    ComplexMatrix::from_fn(2 * n, 2 * n, |i, j| (g[(i, j)] + gd[(i, j)]) * 0.5)
}

/// Checks the four entrywise self-duality relations of the `2N x 2N`
/// representation. Returns whether all hold within [`SELFDUAL_TOL`] and the
/// largest violation.
pub fn check_selfdual(m: &ComplexMatrix) -> Result<(bool, f64), EnsembleError> {
    let dim = m.rows();
    if dim % 2 == 1 || !m.is_square() {
        return Err(EnsembleError::OddDimension(dim));
    }
    let half = dim / 2;
    let mut defect = 0.0f64;
    for k in 0..half {
        for j in 0..half {
            let (k0, k1, j0, j1) = (2 * k, 2 * k + 1, 2 * j, 2 * j + 1);
            defect = defect
                .max((m[(k0, j0)] - m[(j1, k1)]).norm())
                .max((m[(k0, j1)] + m[(j0, k1)]).norm())
                .max((m[(k1, j0)] + m[(j1, k0)]).norm())
                .max((m[(k1, j1)] - m[(j0, k0)]).norm());
        }
    }
    Ok((defect <= SELFDUAL_TOL, defect))
}

pub fn sample<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> ComplexMatrix {
    match spec.class {
        EnsembleClass::SymmGinE => sample_symm_gine(spec.n, rng),
        EnsembleClass::GinE => sample_gine(spec.n, rng),
        EnsembleClass::SelfDualGinE => sample_selfdual_gine(spec.n, rng),
    }
}

/// Draws one matrix and returns its spectrum; self-dual spectra come back
/// with the Kramers partners removed.
pub fn spectrum_of<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Result<Spectrum, EnsembleError> {
    let m = sample(spec, rng);
    let ev = eig_general(&m)?;
    let s = Spectrum::new(ev, format!("ensemble:{}", spec.class), spec.digest(), spec.seed)?;
    match spec.class {
        EnsembleClass::SelfDualGinE => {
            let tol = s.default_dedup_tol();
            Ok(dedup_kramers(&s, tol)?)
        }
        _ => Ok(s),
    }
}

/// `members` independent spectra; member `i` uses the stream
/// `mix_seed(base_seed, i)`, so the result does not depend on scheduling.
pub fn ensemble_spectra(
    class: EnsembleClass,
    n: usize,
    members: usize,
    base_seed: u64,
) -> Result<Vec<Spectrum>, EnsembleError> {
    ensemble_spectra_range(class, n, 0..members, base_seed)
}

/// Like [`ensemble_spectra`] for an arbitrary range of member indices.
pub fn ensemble_spectra_range(
    class: EnsembleClass,
    n: usize,
    members: std::ops::Range<usize>,
    base_seed: u64,
) -> Result<Vec<Spectrum>, EnsembleError> {
    EnsembleSpec::new(class, n, base_seed)?;
    members
        .into_par_iter()
        .map(|i| {
            let spec = EnsembleSpec { class, n, seed: mix_seed(base_seed, i as u64) };
            let mut rng = stream_rng(base_seed, i as u64);
            spectrum_of(&spec, &mut rng).map_err(|e| EnsembleError::Member { member: i, source: Box::new(e) })
        })
        .collect()
}
