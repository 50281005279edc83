//! Linear algebra used by the spectral solver: a sparse pencil container,
//! banded complex LU with partial pivoting, shift-invert Arnoldi and a dense
//! fallback eigensolver.

mod arnoldi;
mod band;
mod dense;
mod sparse;

pub use arnoldi::{shift_invert_arnoldi, ArnoldiConfig, EigenPair};
pub use band::BandLu;
pub use dense::{dense_eigen, dense_generalized_eigen, DenseEigen};
pub use sparse::SparseMatrix;

use num_complex::Complex64;

pub(crate) fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian inner product `x^H y`.
pub(crate) fn dotc(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Bilinear product `x^T y`.
pub(crate) fn dotu(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
