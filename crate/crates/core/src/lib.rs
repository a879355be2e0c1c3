//! Mercer kernels built from pseudo-differential symbols.
//!
//! The crate discretizes a symbol `F(x, y)` on a uniform lattice, forms the
//! kernel `K(s, t) = \int F(x, s)* F(x, t) e^{i x.(t - s)} dx`, and estimates
//! MMD distances through independent routes (Gram sums, empirical
//! characteristic functions, gridded densities). The spectral module provides
//! the Nyström SVD, truncation and operator norms used by the bound checks in
//! [`harness`], and [`fit`] minimizes MMD over small parametric samplers.

pub mod cli;
pub mod error;
pub mod fit;
pub mod format;
pub mod harness;
pub mod kernels;
pub mod mmd;
pub mod numgrid;
pub mod spectral;
pub mod symbols;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
