//! Kernel interpolation with finitely smooth radial basis functions.
//!
//! The crate covers kernel evaluation, point geometry and greedy
//! selection, stable interpolation, Nyström spectral models with power
//! space norms, constructive L2 subsampling, and convergence-rate
//! diagnostics.

pub mod error;
pub mod functions;
pub mod geometry;
pub mod interpolation;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod quadrature;
pub mod rates;
pub mod spectral;
pub mod subsampling;

pub use error::{Error, Result};
