//! The clustered-coefficient spatial model: state, likelihood, and one update
//! per parameter block.
//!
//! For location `i` with covariates `x_i`,
//!
//! ```text
//! y_i | z, β, W, τ_y  ~ N(x_iᵀ β_{z_i} + W_i, 1/τ_y)
//! W | τ_w, φ          ~ MVN(0, τ_w⁻¹ H(φ))
//! β_c | μ_b, τ_b      ~ MVN(μ_b, τ_b⁻¹ I),            c = 1..M
//! P(z_i = c)          = π_c,  π from stick fractions V_c ~ Beta(1, α)
//! ```
//!
//! with Gamma(1, 1) priors on `τ_y`, `τ_w`, `τ_b`, `α`, N(0, 1) on each entry
//! of `μ_b`, and `φ ~ U(0, D)`. Every block except `φ` has a closed-form full
//! conditional; `φ` is updated by random-walk Metropolis.

mod config;
mod data;
mod kernel;
mod state;
mod updates;

pub use config::{Block, GammaPrior, ModelConfig, NormalPrior, Scheme, DEFAULT_BLOCK_ORDER};
pub use data::{Dataset, Standardization};
pub use kernel::{kernel_matrix, SpatialKernel};
pub use state::{stick_breaking, BetaTable, ChainState};
pub use updates::{
    alpha_conditional, beta_conditional, loglik, mu_b_conditional, phi_log_target, phi_mh_step, pointwise_loglik,
    stick_conditionals, tau_b_conditional, tau_w_conditional, tau_y_conditional, update_base_measure,
    update_beta_table, update_phi, update_spatial, update_sticks_and_alpha, update_tau_y, update_z,
    w_conditional, z_log_weights, GammaParams, GaussianConditional, PhiTuner, PrecisionFactor,
    V_CLAMP,
};
