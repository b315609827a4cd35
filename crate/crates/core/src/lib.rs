//! Quenched central limit theory laboratory for Fourier sums of stationary
//! processes.
//!
//! The crate simulates several stationary process families, computes finite
//! Fourier transforms and periodograms, builds martingale approximations of
//! Fourier sums analytically, evaluates classical sufficient conditions for
//! quenched normality, and verifies the limit theorems by seeded Monte Carlo.

pub mod coeffs;
pub mod conditions;
pub mod error;
pub mod fourier;
pub mod martingale;
pub mod models;
pub mod quenched;
pub mod report;
pub mod seeding;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
