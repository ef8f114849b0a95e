//! PML-truncated boundary integral equations for acoustic scattering in a
//! half-space and in a two-layer medium, discretized by a Chebyshev
//! rectangular-polar Nyström method.

pub mod cheb;
pub mod config;
pub mod driver;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod operators;
pub mod pml;
pub mod scalar;
pub mod selftest;
pub mod solve;
pub mod specfun;

pub use error::{Error, Result};
pub use num_complex::Complex64;
