//! Structured exponentials of tridiagonal Toeplitz matrices.
//!
//! The exponential of `tridiag(a, b, c)` is assembled from modified Bessel
//! functions of the first kind as a symmetric Toeplitz part minus a
//! persymmetric Hankel part, scaled entrywise by powers of `sqrt(a/c)`.
//! Nothing is multiplied: the `n + 2` values `I_0(2z) .. I_{n+1}(2z)` are the
//! whole computation, and the result can be materialized densely or as a band.
//!
//! Modules:
//! - [`bessel`]: `I_k(x)` for complex `x`, whole sequences at once.
//! - [`matrices`]: tridiagonal specs, dense and band storage, the compact
//!   Toeplitz-minus-Hankel representation, Kronecker matvecs and file formats.
//! - [`spectral`]: exact reference exponentials (sine-basis diagonalization and
//!   dense Padé scaling-and-squaring).
//! - [`expm`]: the Bessel approximation, its error bounds and band selection.
//! - [`block`]: block tridiagonal Toeplitz exponentials via matrix-valued
//!   Fourier-cosine coefficients.
//! - [`heat`]: exponential time stepping for the 1D and 2D heat equation.

pub mod bessel;
pub mod block;
mod dense;
pub mod error;
pub mod expm;
pub mod heat;
pub mod matrices;
pub mod spectral;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};

/// Convenience constructor for a complex scalar.
#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
