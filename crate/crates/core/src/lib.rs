//! Bayesian hierarchical modelling of athlete performance trajectories.
//!
//! Performances are decomposed into a population age curve, a piecewise
//! linear individual trend, shape-constrained within-season curves built
//! from restricted Bernstein polynomials, confounder effects and a skewed,
//! heavy-tailed error. [`mcmc`] fits the model by Gibbs sampling,
//! [`summaries`] turns draws into trajectories and diagnostics, and
//! [`simgen`] generates synthetic careers with known truth.

pub mod bernstein;
pub mod cli;
pub mod error;
pub mod io;
pub mod mcmc;
pub mod model;
pub mod samplers;
pub mod simgen;
pub mod summaries;

pub use error::{Error, Result};
