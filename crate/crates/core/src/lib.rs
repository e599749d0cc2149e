//! Numerical laboratory for the fully Gaussian mean-field spin glass.
//!
//! Closed-form pressures (annealed, replica symmetric, broken replica,
//! spherical shell bound), the fluctuation ODE system, and a quenched Monte
//! Carlo engine that checks the bounds and sum rules at small sizes.

pub mod error;
pub mod gibbs;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
pub mod model;
pub mod montecarlo;
pub mod closed_forms;
pub mod parisi;
pub mod fluctuations;
pub mod sumrules;
pub mod acceptance;
