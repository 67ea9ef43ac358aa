//! Core numerics for multi-strategy solver search.
//!
//! Everything here is generic over a floating-point [`Scalar`]; the
//! aliases at the crate root fix the scalar to `f64`, which is what the
//! search engine uses end to end.

pub mod analytics;
pub mod cop;
pub mod matrix;
pub mod reward;
pub mod rng;
pub mod scalar;
pub mod solvers;

pub use scalar::Scalar;

/// Dense row-major matrix of `f64`.
pub type Matrix = matrix::Matrix<f64>;
/// Problem instance with `f64` data.
pub type Instance = cop::Instance<f64>;
/// Dataset of `f64` instances.
pub type Dataset = cop::Dataset<f64>;
/// Reward parameters over `f64`.
pub type RewardParams = reward::RewardParams<f64>;
/// Single-precision instance, mostly useful for memory-bound sweeps.
pub type Instance32 = cop::Instance<f32>;
/// Single-precision matrix.
pub type Matrix32 = matrix::Matrix<f32>;
