//! Bayesian ensembles of binary-event probability forecasts.
//!
//! The crate aggregates probability forecasts from several experts (or base
//! models) into a single forecast, fits the aggregators to data by maximum
//! likelihood, and evaluates everything with proper scoring rules under a
//! cross-validated stacking protocol.
//!
//! Main pieces:
//!
//! * [`distributions`] — location-scale link families (normal, logistic,
//!   exponential-power) and the special functions they need.
//! * [`conjugate`] — the four conjugate prior/likelihood pairs and their
//!   closed-form Bayesian aggregators, with and without shared information.
//! * [`ensemble`] — the generalized probit ensemble over latent Gaussian
//!   information states, plus benchmark opinion pools (LOP, KLOP, BLOP,
//!   logit).
//! * [`fitting`] — maximum-likelihood estimation of every fittable
//!   aggregator, including the power-parameter grid search.
//! * [`scoring`] — log score, asymmetric log score, AUC, and the
//!   extremizing classifier.
//! * [`evaluation`] — fold management, the cross-validation harness, report
//!   rendering, and file formats.
//! * [`simulation`] — seeded synthetic data generators used as ground-truth
//!   oracles in tests and experiments.

// Negated comparisons like `!(x > 0.0)` are deliberate: they reject NaN
// along with the out-of-range values. Long float literals document the
// published constants they came from.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod conjugate;
pub mod distributions;
pub mod ensemble;
mod error;
pub mod evaluation;
pub mod fitting;
mod linalg;
pub mod rng;
pub mod scoring;
pub mod simulation;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
