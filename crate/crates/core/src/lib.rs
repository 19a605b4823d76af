//! Gaussian-process uncertainty quantification for Bayesian optimization.
//!
//! Provides GP regression with product kernels, the uniform upper confidence
//! limit `UpperCL`, confidence regions and intervals for the maximizer and the
//! maximum, an abstract Bayesian optimization loop, and the Monte Carlo
//! calibration of the constant `C₀`.

pub mod abo;
pub mod calibration;
pub mod config;
pub mod coverage;
pub mod csvio;
pub mod designs;
pub mod error;
pub mod experiment;
pub mod gp;
pub mod kernels;
pub mod linalg;
pub mod objectives;
pub mod points;
pub mod rng;
pub mod search;
pub mod uq;

pub use error::{Error, Result};
pub use gp::{Dataset, GpPosterior, Prediction};
pub use kernels::{Domain, Family, Kernel1d, ProductKernel};
pub use points::Points;
pub use uq::{Interval, UqConstants};
