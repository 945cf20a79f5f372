//! Numerical toolkit for the fractional conformal Laplacian on flat model
//! geometries: the operator in its Fourier-multiplier, singular-integral and
//! extension (Dirichlet-to-Neumann) forms, the Gamma-function constants
//! governing singular model solutions, and desk-scale verifications of the
//! homogeneous profiles, bubbles and growth estimates they satisfy.

pub mod error;
pub mod extension;
pub mod fieldio;
pub mod gamma;
pub mod grid;
pub mod models;
pub(crate) mod quad;
pub mod selftest;
pub mod spectral;

pub use error::{Error, Result};

/// Toolkit version, stamped into every CLI report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
