//! Bayesian clustered-coefficient regression for spatially indexed data.
//!
//! Each location carries a regression coefficient vector drawn from a
//! truncated stick-breaking Dirichlet-process mixture, so locations with
//! similar covariate effects share a cluster. Residual spatial dependence is
//! absorbed by a Gaussian-process random effect whose correlation matrix is
//! built from great-circle distances under one of three weighting schemes.
//!
//! The crate is organised bottom-up:
//!
//! * [`geo`] great-circle distances and the normalized distance matrix,
//! * [`numerics`] seeded RNG streams, Cholesky factors, samplers and HPD,
//! * [`model`] the model state and one update per parameter block,
//! * [`chain`] sweep orchestration, storage and snapshot files,
//! * [`posterior`] least-squares (Dahl) clustering and cluster summaries,
//! * [`assess`] CPO/LPML, effective parameter count, Rand index and
//!   replicate-study metrics,
//! * [`baseline`] a conjugate Bayesian linear regression for comparison,
//! * [`simgen`] synthetic scenarios and the replicate-study driver,
//! * [`cli`] the `geodpm` command-line front end.

// `!(x > 0.0)` is used on purpose so that NaN is rejected alongside
// non-positive values; index loops mirror the matrix algebra they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assess;
pub mod baseline;
pub mod chain;
pub mod cli;
pub mod error;
pub mod geo;
pub mod model;
pub mod numerics;
pub mod posterior;
pub mod simgen;

pub use error::{Error, Result};
