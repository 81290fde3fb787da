//! Spectra of non-Hermitian random matrices and dissipative kicked tops,
//! unfolding in the complex plane, and their fluctuation statistics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod ensembles;
pub mod kickedtop;
pub mod numerics;
pub mod sampler;
pub mod seed;
pub mod spatial;
pub mod special;
pub mod spectra;
pub mod stats;
pub mod unfolding;

pub use num_complex::Complex64;
