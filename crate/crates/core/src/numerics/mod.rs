//! Seeded random streams and the dense linear algebra every sampler uses.

mod hpd;
mod linalg;
mod rng;
mod sample;

pub use hpd::hpd_interval;
pub use linalg::{cholesky, Cholesky};
pub use rng::{RngStream, RNG_ID};
pub use sample::{
    log_sum_exp, mvn_logpdf, mvn_sample, normal_logpdf, sample_beta, sample_categorical,
    sample_categorical_log, sample_gamma, sample_normal, standard_normal, standard_normal_vec,
};
