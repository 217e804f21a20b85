//! Mode-selective photon subtraction from multimode Gaussian light.
//!
//! Gaussian states are covariance matrices in `(x0, p0, x1, p1, ...)` order
//! with vacuum variance 1. Subtracted states are handled analytically
//! through Wick contractions ([`wick`]) and checked against a truncated
//! Fock-space oracle ([`fock`]). [`homodyne`] and [`tomography`] simulate
//! the measurement chain; [`scenario`] ties everything to JSON configs.
//!
//! The numerical core is generic over [`scalar::Real`]; the aliases below
//! fix the scalar type.

pub mod error;
pub mod fock;
pub mod gaussian;
pub mod homodyne;
pub mod linalg;
pub mod mode_basis;
pub mod scalar;
pub mod scenario;
pub mod subtraction;
pub mod tomography;
pub mod wick;

pub use error::{Error, Result};

pub type Covariance = gaussian::CovarianceMatrix<f64>;
pub type Covariance32 = gaussian::CovarianceMatrix<f32>;
pub type Modes = mode_basis::CoefficientVector<f64>;
pub type Modes32 = mode_basis::CoefficientVector<f32>;
pub type Transform = mode_basis::ModeTransform<f64>;
pub type Transform32 = mode_basis::ModeTransform<f32>;
pub type Subtraction = subtraction::SubtractionSpec<f64>;
pub type Subtraction32 = subtraction::SubtractionSpec<f32>;
pub type Subtracted = wick::SubtractedState<f64>;
pub type Subtracted32 = wick::SubtractedState<f32>;
pub type Density = fock::FockDensity<f64>;
pub type Density32 = fock::FockDensity<f32>;
