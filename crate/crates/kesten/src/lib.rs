//! Simulation and numerical-verification toolkit for multidimensional
//! affine stochastic recursions `X_n = M_n X_{n-1} + Q_n` whose linear
//! parts are componentwise similarities.
//!
//! The crate computes the tail exponent and tail measure of the stationary
//! law, evaluates the limit-law characteristic functions of normalized
//! partial sums in every tail-index regime, discretizes the associated
//! Fourier (perturbed transfer) operators to probe their dominant
//! eigenvalue expansions, and statistically verifies the distributional
//! and local limit behaviour of the sums.
//!
//! All numeric code is generic over the scalar type via [`scalar::Real`]
//! (`f32`/`f64`); concrete `f64` aliases live at the crate root.

pub mod config;
pub mod engine;
pub mod error;
pub mod group;
pub mod law;
pub mod linalg;
pub mod measure;
pub mod presets;
pub mod rng;
pub mod scalar;
pub mod special;
pub mod spectral;
pub mod stats;
pub mod tails;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

/// Concrete `f64` aliases for the main domain types.
pub type BlockStructure64 = group::BlockStructure<f64>;
pub type Similarity64 = group::Similarity<f64>;
pub type GroupStructure64 = group::GroupStructure<f64>;
pub type MuSpec64 = measure::MuSpec<f64>;
pub type HypothesisReport64 = measure::HypothesisReport<f64>;
