//! Numerics for the extended additive hazard model `h*(x | z) = a(x, z) + h(x)`.
//!
//! * [`model`]: baseline, covariate effect and covariate distribution, and the
//!   conditional and mixture quantities (`S*`, `f*`, `h*`, covariate weights,
//!   lifetime sampling).
//! * [`numerics`]: adaptive Gauss–Kronrod quadrature, covariate expectations
//!   and monotone root finding.
//! * [`analyzers`]: grid-based classifiers for aging classes, stochastic
//!   orders and TP2/RR2 kernels.
//! * [`theorem`]: end-to-end verification that a DFR baseline yields a DLR
//!   mixture under the effect hypotheses, identity checks, Monte Carlo
//!   consistency and counterexample search.
//! * [`catalog`]: serializable model descriptions and the built-in scenarios.

pub mod analyzers;
pub mod catalog;
pub mod error;
pub mod model;
pub mod numerics;
pub mod theorem;

pub use error::{EahmError, Result};
pub use model::{BaselineModel, CovariateDistribution, CovariateEffect, EahmModel, EffectFamily, Grid, TimeProfile};
pub use numerics::{IntegrationResult, QuadratureSpec};
