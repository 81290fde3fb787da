//! Dense complex linear algebra used throughout the crate.
//!
//! [`ComplexMatrix`] is a plain row-major container. The heavy lifting
//! (Schur reduction, Hermitian tridiagonalisation, products) is delegated to
//! `faer`; this module only adds validation and the matrix-function helpers.

use std::ops::{Index, IndexMut};

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors, SelfAdjointEvdParams};
use faer::{Auto, Col, Mat, Par};
use num_complex::Complex64;
use thiserror::Error;

/// Entrywise tolerance on `|m - m^dagger|` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix dimensions must be positive")]
    Empty,
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not Hermitian: max |m - m^H| = {defect:e} exceeds {HERMITIAN_TOL:e}")]
    NotHermitian { defect: f64 },
    #[error("eigensolver did not converge on a {dim}x{dim} matrix")]
    NoConvergence { dim: usize },
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch { left: (usize, usize), right: (usize, usize) },
}

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::DimensionMismatch { left: (rows, cols), right: (data.len(), 1) });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, NumericsError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(NumericsError::DimensionMismatch { left: (r, c), right: (1, row.len()) });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { rows: r, cols: c, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> Complex64 {
        self.diagonal().into_iter().sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self, NumericsError> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, NumericsError> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, NumericsError> {
        if self.cols != other.rows {
            return Err(NumericsError::DimensionMismatch {
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        let prod = self.to_faer() * other.to_faer();
        Ok(Self::from_faer(prod.as_ref()))
    }

    /// `diag(d) * self`, scaling row `i` by `d[i]`.
    pub fn scale_rows(&self, d: &[Complex64]) -> Result<Self, NumericsError> {
        if d.len() != self.rows {
            return Err(NumericsError::DimensionMismatch { left: (self.rows, self.cols), right: (d.len(), 1) });
        }
        let mut out = self.clone();
        for (i, &di) in d.iter().enumerate() {
            for z in &mut out.data[i * self.cols..(i + 1) * self.cols] {
                *z *= di;
            }
        }
        Ok(out)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64, NumericsError> {
        self.same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - self^dagger`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows.min(self.cols) {
            for j in i..self.cols.min(self.rows) {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Checks the invariants every decomposition needs.
    pub fn validate_square(&self) -> Result<(), NumericsError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(NumericsError::Empty);
        }
        if !self.is_square() {
            return Err(NumericsError::NotSquare { rows: self.rows, cols: self.cols });
        }
        if let Some(k) = self.data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(NumericsError::NonFinite { row: k / self.cols, col: k % self.cols });
        }
        Ok(())
    }

    fn same_shape(&self, other: &Self) -> Result<(), NumericsError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(NumericsError::DimensionMismatch {
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        Ok(())
    }

    pub(crate) fn to_faer(&self) -> Mat<Complex64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }

    pub(crate) fn from_faer(m: faer::MatRef<'_, Complex64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// All eigenvalues of a general square matrix, with multiplicity and in no
/// particular order.
pub fn eig_general(m: &ComplexMatrix) -> Result<Vec<Complex64>, NumericsError> {
    m.validate_square()?;
    m.to_faer().eigenvalues().map_err(|_| NumericsError::NoConvergence { dim: m.rows() })
}

/// Spectral decomposition `m = U diag(values) U^dagger` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Columns are the orthonormal eigenvectors.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `U f(Lambda) U^dagger`.
    pub fn apply(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let n = self.values.len();
        let fvals: Vec<Complex64> = self.values.iter().map(|&x| f(x)).collect();
        let u = self.vectors.to_faer();
        let scaled = Mat::from_fn(n, n, |i, j| u[(i, j)] * fvals[j]);
        let out = &scaled * u.adjoint();
        ComplexMatrix::from_faer(out.as_ref())
    }
}

pub fn eig_hermitian(m: &ComplexMatrix) -> Result<HermitianEigen, NumericsError> {
    m.validate_square()?;
    let defect = m.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(NumericsError::NotHermitian { defect });
    }
    let n = m.rows();
    let sym = Mat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    // Tridiagonal QR throughout: faer's divide-and-conquer stage loses
    // accuracy on clustered (e.g. Kramers-paired) eigenvalues.
    let params =
        SelfAdjointEvdParams { recursion_threshold: usize::MAX, ..<SelfAdjointEvdParams as Auto<Complex64>>::auto() };
    let par = Par::Seq;
    let mut buf =
        MemBuffer::new(evd::self_adjoint_evd_scratch::<Complex64>(n, ComputeEigenvectors::Yes, par, params.into()));
    let mut s = Col::<Complex64>::zeros(n);
    let mut u = Mat::<Complex64>::zeros(n, n);
    evd::self_adjoint_evd(
        sym.as_ref(),
        s.as_diagonal_mut(),
        Some(u.as_mut()),
        par,
        MemStack::new(&mut buf),
        params.into(),
    )
    .map_err(|_| NumericsError::NoConvergence { dim: n })?;
    let values = (0..n).map(|i| s[i].re).collect();
    Ok(HermitianEigen { values, vectors: ComplexMatrix::from_faer(u.as_ref()) })
}

/// Matrix function `f(m)` of a Hermitian matrix through its eigendecomposition.
pub fn matfun_hermitian(m: &ComplexMatrix, f: impl Fn(f64) -> Complex64) -> Result<ComplexMatrix, NumericsError> {
    Ok(eig_hermitian(m)?.apply(f))
}

/// `exp(-i theta h)` for Hermitian `h`.
pub fn expi_hermitian(h: &ComplexMatrix, theta: f64) -> Result<ComplexMatrix, NumericsError> {
    matfun_hermitian(h, |x| Complex64::from_polar(1.0, -theta * x))
}
