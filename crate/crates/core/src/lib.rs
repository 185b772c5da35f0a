//! Numerical laboratory for the linear stochastic fractional heat equation
//! driven by noise that is white in time and rough (fractional, H < 1/2) in space.

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod model;
pub mod quadrature;
pub mod sampler;
pub mod special;

pub use error::{Error, Result};
pub use model::{ModelConstants, ModelParams};
