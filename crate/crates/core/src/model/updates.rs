use nalgebra::DMatrix;
use rand::Rng;

use super::config::{GammaPrior, NormalPrior};
use super::data::Dataset;
use super::kernel::SpatialKernel;
use super::state::ChainState;
use crate::error::{Error, Result};
use crate::numerics::{
    cholesky, normal_logpdf, sample_beta, sample_categorical_log, sample_gamma, standard_normal,
    Cholesky,
};

/// Stick fractions are kept below this so `ln(1 − V)` stays finite.
pub const V_CLAMP: f64 = 1.0 - 1e-12;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Gamma distribution in shape/rate form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    pub shape: f64,
    pub rate: f64,
}

impl GammaParams {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        sample_gamma(rng, self.shape, self.rate)
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }
}

/// How the precision of a Gaussian full conditional is stored.
#[derive(Debug, Clone)]
pub enum PrecisionFactor {
    /// `q · I`.
    Scalar(f64),
    /// Cholesky factor of a dense precision matrix.
    Dense(Cholesky),
}

/// Multivariate normal full conditional in mean/precision form.
#[derive(Debug, Clone)]
pub struct GaussianConditional {
    pub mean: Vec<f64>,
    pub precision: PrecisionFactor,
}

impl GaussianConditional {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `mean + L⁻ᵀ ζ`, which has covariance `(L Lᵀ)⁻¹`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut z: Vec<f64> = (0..self.dim()).map(|_| standard_normal(rng)).collect();
        match &self.precision {
            PrecisionFactor::Scalar(q) => {
                let sd = q.sqrt().recip();
                z.iter_mut().for_each(|v| *v *= sd);
            }
            PrecisionFactor::Dense(chol) => chol.solve_upper_in_place(&mut z),
        }
        z.iter_mut().zip(&self.mean).for_each(|(v, m)| *v += m);
        z
    }

    pub fn precision_matrix(&self) -> DMatrix<f64> {
        match &self.precision {
            PrecisionFactor::Scalar(q) => DMatrix::identity(self.dim(), self.dim()) * *q,
            PrecisionFactor::Dense(chol) => chol.reconstruct(),
        }
    }

    /// Marginal variance of coordinate `i`.
    pub fn variance(&self, i: usize) -> f64 {
        match &self.precision {
            PrecisionFactor::Scalar(q) => 1.0 / q,
            PrecisionFactor::Dense(chol) => chol.inverse()[(i, i)],
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y_i − x_iᵀ β_{z_i}` for every location.
fn coefficient_residuals(state: &ChainState, data: &Dataset) -> Vec<f64> {
    (0..data.n())
        .map(|i| data.y()[i] - dot(data.x_row(i), state.beta.row(state.z[i])))
        .collect()
}

/// `log N(y_i; x_iᵀ β_{z_i} + W_i, 1/τ_y)` for each location.
pub fn pointwise_loglik(state: &ChainState, data: &Dataset) -> Vec<f64> {
    let var = 1.0 / state.tau_y;
    (0..data.n())
        .map(|i| {
            let mean = dot(data.x_row(i), state.beta.row(state.z[i])) + state.w[i];
            normal_logpdf(data.y()[i], mean, var)
        })
        .collect()
}

pub fn loglik(state: &ChainState, data: &Dataset) -> f64 {
    pointwise_loglik(state, data).iter().sum()
}

/// Unnormalized `log P(z_i = c | ·)` for `c = 1..M`.
pub fn z_log_weights(state: &ChainState, data: &Dataset, i: usize) -> Vec<f64> {
    let x = data.x_row(i);
    let target = data.y()[i] - state.w[i];
    (0..state.m())
        .map(|c| {
            let r = target - dot(x, state.beta.row(c));
            state.pi[c].ln() - 0.5 * state.tau_y * r * r
        })
        .collect()
}

pub fn update_z<R: Rng + ?Sized>(state: &mut ChainState, data: &Dataset, rng: &mut R) -> Result<()> {
    let m = state.m();
    let log_pi: Vec<f64> = state.pi.iter().map(|p| p.ln()).collect();
    let mut logw = vec![0.0; m];
    let mut scratch = Vec::with_capacity(m);
    let half_tau = 0.5 * state.tau_y;
    for i in 0..data.n() {
        let x = data.x_row(i);
        let target = data.y()[i] - state.w[i];
        for (c, lw) in logw.iter_mut().enumerate() {
            let r = target - dot(x, state.beta.row(c));
            *lw = log_pi[c] - half_tau * r * r;
        }
        state.z[i] = sample_categorical_log(rng, &logw, &mut scratch).map_err(|e| match e {
            Error::NumericalDegeneracy(msg) => {
                Error::NumericalDegeneracy(format!("label weights for location {i}: {msg}"))
            }
            other => other,
        })?;
    }
    Ok(())
}

/// Beta parameters `(1 + n_c, α + Σ_{ℓ>c} n_ℓ)` of each stick fraction.
pub fn stick_conditionals(state: &ChainState) -> Vec<(f64, f64)> {
    let counts = state.counts();
    let m = state.m();
    let mut tail = 0usize;
    let mut params = vec![(0.0, 0.0); m - 1];
    for c in (0..m).rev() {
        if c < m - 1 {
            params[c] = (1.0 + counts[c] as f64, state.alpha + tail as f64);
        }
        tail += counts[c];
    }
    params
}

/// Draw the sticks given the labels, recompute `π`, then draw `α`.
/// Returns how many fractions had to be clamped below one.
pub fn update_sticks_and_alpha<R: Rng + ?Sized>(
    state: &mut ChainState,
    alpha_prior: &GammaPrior,
    rng: &mut R,
) -> Result<usize> {
    let mut clamped = 0;
    for (c, (a, b)) in stick_conditionals(state).into_iter().enumerate() {
        let mut v = sample_beta(rng, a, b)?;
        if v > V_CLAMP {
            v = V_CLAMP;
            clamped += 1;
        }
        state.v[c] = v;
    }
    state.refresh_weights();
    state.alpha = alpha_conditional(state, alpha_prior).sample(rng)?;
    Ok(clamped)
}

/// `α | V ~ Gamma(a + M − 1, b − Σ ln(1 − V_c))`.
pub fn alpha_conditional(state: &ChainState, prior: &GammaPrior) -> GammaParams {
    let log_rest: f64 = state.v.iter().map(|v| (1.0 - v).ln()).sum();
    GammaParams {
        shape: prior.shape + (state.m() - 1) as f64,
        rate: prior.rate - log_rest,
    }
}

struct ClusterStats {
    count: usize,
    /// Row-major `p × p` Gram matrix.
    xtx: Vec<f64>,
    xtr: Vec<f64>,
}

fn cluster_stats(state: &ChainState, data: &Dataset) -> Vec<ClusterStats> {
    let p = data.p();
    let mut stats: Vec<ClusterStats> = (0..state.m())
        .map(|_| ClusterStats {
            count: 0,
            xtx: vec![0.0; p * p],
            xtr: vec![0.0; p],
        })
        .collect();
    for i in 0..data.n() {
        let s = &mut stats[state.z[i]];
        let x = data.x_row(i);
        let r = data.y()[i] - state.w[i];
        s.count += 1;
        for a in 0..p {
            s.xtr[a] += x[a] * r;
            for b in 0..p {
                s.xtx[a * p + b] += x[a] * x[b];
            }
        }
    }
    stats
}

fn beta_conditional_from(state: &ChainState, s: &ClusterStats) -> Result<GaussianConditional> {
    let p = state.p();
    if s.count == 0 {
        return Ok(GaussianConditional {
            mean: state.mu_b.clone(),
            precision: PrecisionFactor::Scalar(state.tau_b),
        });
    }
    let prec = DMatrix::from_fn(p, p, |a, b| {
        let prior = if a == b { state.tau_b } else { 0.0 };
        prior + state.tau_y * s.xtx[a * p + b]
    });
    let chol = cholesky(&prec)?;
    let rhs: Vec<f64> = (0..p)
        .map(|a| state.tau_b * state.mu_b[a] + state.tau_y * s.xtr[a])
        .collect();
    let mean = chol.solve(&rhs)?;
    Ok(GaussianConditional {
        mean,
        precision: PrecisionFactor::Dense(chol),
    })
}

/// Full conditional of `β_c`: precision `τ_b I + τ_y X_cᵀX_c`, mean
/// `P⁻¹(τ_b μ_b + τ_y X_cᵀ(y_c − W_c))`; the base measure when cluster `c` is empty.
pub fn beta_conditional(state: &ChainState, data: &Dataset, c: usize) -> Result<GaussianConditional> {
    let stats = cluster_stats(state, data);
    beta_conditional_from(state, &stats[c])
}

pub fn update_beta_table<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &Dataset,
    rng: &mut R,
) -> Result<()> {
    let stats = cluster_stats(state, data);
    for (c, s) in stats.iter().enumerate() {
        let draw = beta_conditional_from(state, s)?.sample(rng);
        state.beta.row_mut(c).copy_from_slice(&draw);
    }
    Ok(())
}

/// Independent normal conditionals `(mean, var)` of each entry of `μ_b`,
/// using every row of the table.
pub fn mu_b_conditional(state: &ChainState, prior: &NormalPrior) -> Vec<(f64, f64)> {
    let m = state.m();
    let prec = 1.0 / prior.var + m as f64 * state.tau_b;
    (0..state.p())
        .map(|j| {
            let sum: f64 = (0..m).map(|c| state.beta.row(c)[j]).sum();
            ((prior.mean / prior.var + state.tau_b * sum) / prec, 1.0 / prec)
        })
        .collect()
}

pub fn tau_b_conditional(state: &ChainState, prior: &GammaPrior) -> GammaParams {
    let (m, p) = (state.m(), state.p());
    let ss: f64 = (0..m)
        .map(|c| {
            state
                .beta
                .row(c)
                .iter()
                .zip(&state.mu_b)
                .map(|(b, mu)| (b - mu).powi(2))
                .sum::<f64>()
        })
        .sum();
    GammaParams {
        shape: prior.shape + (m * p) as f64 / 2.0,
        rate: prior.rate + 0.5 * ss,
    }
}

/// Draw `μ_b` and then `τ_b`.
pub fn update_base_measure<R: Rng + ?Sized>(
    state: &mut ChainState,
    mu_prior: &NormalPrior,
    tau_prior: &GammaPrior,
    rng: &mut R,
) -> Result<()> {
    for (j, (mean, var)) in mu_b_conditional(state, mu_prior).into_iter().enumerate() {
        state.mu_b[j] = mean + var.sqrt() * standard_normal(rng);
    }
    state.tau_b = tau_b_conditional(state, tau_prior).sample(rng)?;
    Ok(())
}

/// Full conditional of `W`: precision `Q = τ_y I + τ_w H⁻¹`, mean
/// `Q⁻¹ τ_y (y − Xβ_z)`.
pub fn w_conditional(
    state: &ChainState,
    data: &Dataset,
    kernel: &SpatialKernel,
) -> Result<GaussianConditional> {
    let resid = coefficient_residuals(state, data);
    let (ty, tw) = (state.tau_y, state.tau_w);
    match kernel.precision() {
        None => {
            let q = ty + tw;
            Ok(GaussianConditional {
                mean: resid.iter().map(|r| ty * r / q).collect(),
                precision: PrecisionFactor::Scalar(q),
            })
        }
        Some(h_inv) => {
            let n = data.n();
            let mut q = h_inv * tw;
            for i in 0..n {
                q[(i, i)] += ty;
            }
            let chol = cholesky(&q).map_err(|e| match e {
                Error::NotPositiveDefinite { pivot } => Error::NumericalDegeneracy(format!(
                    "spatial precision not positive definite at pivot {pivot}"
                )),
                other => other,
            })?;
            let rhs: Vec<f64> = resid.iter().map(|r| ty * r).collect();
            let mean = chol.solve(&rhs)?;
            Ok(GaussianConditional {
                mean,
                precision: PrecisionFactor::Dense(chol),
            })
        }
    }
}

pub fn tau_w_conditional(
    state: &ChainState,
    kernel: &SpatialKernel,
    prior: &GammaPrior,
) -> Result<GammaParams> {
    let quad = if kernel.is_identity() {
        state.w.iter().map(|w| w * w).sum()
    } else {
        kernel.chol().quad_form_inv(&state.w)?
    };
    Ok(GammaParams {
        shape: prior.shape + state.n() as f64 / 2.0,
        rate: prior.rate + 0.5 * quad,
    })
}

/// Draw `W` and then `τ_w`.
pub fn update_spatial<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &Dataset,
    kernel: &SpatialKernel,
    tau_w_prior: &GammaPrior,
    rng: &mut R,
) -> Result<()> {
    state.w = w_conditional(state, data, kernel)?.sample(rng);
    state.tau_w = tau_w_conditional(state, kernel, tau_w_prior)?.sample(rng)?;
    Ok(())
}

/// `log MVN(W; 0, τ_w⁻¹ H(φ))` given the factor of `H(φ)`.
pub fn phi_log_target(w: &[f64], tau_w: f64, chol_h: &Cholesky) -> Result<f64> {
    let n = w.len() as f64;
    let quad = chol_h.quad_form_inv(w)?;
    Ok(-0.5 * (n * LN_2PI + chol_h.log_det() - n * tau_w.ln() + tau_w * quad))
}

/// Random-walk step size for `φ`, tuned during burn-in.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiTuner {
    pub step: f64,
    pub accepted: u64,
    pub proposed: u64,
    window_accepted: u64,
    window_proposed: u64,
    adapting: bool,
}

impl PhiTuner {
    const WINDOW: u64 = 50;
    const TARGET: (f64, f64) = (0.30, 0.45);

    pub fn new(step: f64, adapting: bool) -> Self {
        Self {
            step,
            accepted: 0,
            proposed: 0,
            window_accepted: 0,
            window_proposed: 0,
            adapting,
        }
    }

    pub fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.window_proposed += 1;
        if accepted {
            self.accepted += 1;
            self.window_accepted += 1;
        }
        if self.adapting && self.window_proposed == Self::WINDOW {
            let rate = self.window_accepted as f64 / self.window_proposed as f64;
            if rate < Self::TARGET.0 {
                self.step *= 0.8;
            } else if rate > Self::TARGET.1 {
                self.step *= 1.25;
            }
            self.step = self.step.clamp(1e-4, 1e3);
            self.window_accepted = 0;
            self.window_proposed = 0;
        }
    }

    /// Stop adapting and reset the counters so they cover retained sweeps only.
    pub fn freeze(&mut self) {
        self.adapting = false;
        self.accepted = 0;
        self.proposed = 0;
    }

    pub fn is_adapting(&self) -> bool {
        self.adapting
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

fn reflect(x: f64, upper: f64) -> f64 {
    let period = 2.0 * upper;
    let y = x.rem_euclid(period);
    if y > upper {
        period - y
    } else {
        y
    }
}

/// Metropolis accept/reject of a given proposal `φ'` with `log_u = ln U`.
/// A proposal outside `(0, D)` or with a non-positive-definite `H(φ')` is
/// rejected.
pub fn phi_mh_step(
    state: &mut ChainState,
    kernel: &mut SpatialKernel,
    proposal: f64,
    log_u: f64,
    bandwidth_max: f64,
) -> Result<bool> {
    if !(proposal > 0.0 && proposal < bandwidth_max) {
        return Ok(false);
    }
    let chol_new = match kernel.factor_at(proposal) {
        Ok(c) => c,
        Err(e) if e.is_recoverable() => return Ok(false),
        Err(e) => return Err(e),
    };
    let current = phi_log_target(&state.w, state.tau_w, kernel.chol())?;
    let proposed = phi_log_target(&state.w, state.tau_w, &chol_new)?;
    if log_u < proposed - current {
        kernel.accept(proposal, chol_new);
        state.phi = proposal;
        Ok(true)
    } else {
        Ok(false)
    }
}

/// One random-walk Metropolis step on `φ` with reflection into `(0, D)`.
/// A no-op under the unity scheme, returning `None`.
pub fn update_phi<R: Rng + ?Sized>(
    state: &mut ChainState,
    kernel: &mut SpatialKernel,
    tuner: &mut PhiTuner,
    bandwidth_max: f64,
    rng: &mut R,
) -> Result<Option<bool>> {
    if kernel.is_identity() {
        return Ok(None);
    }
    let proposal = reflect(state.phi + tuner.step * standard_normal(rng), bandwidth_max);
    let log_u = rng.random::<f64>().ln();
    let accepted = phi_mh_step(state, kernel, proposal, log_u, bandwidth_max)?;
    tuner.record(accepted);
    Ok(Some(accepted))
}

pub fn tau_y_conditional(state: &ChainState, data: &Dataset, prior: &GammaPrior) -> GammaParams {
    let rss: f64 = coefficient_residuals(state, data)
        .iter()
        .zip(&state.w)
        .map(|(r, w)| (r - w).powi(2))
        .sum();
    GammaParams {
        shape: prior.shape + data.n() as f64 / 2.0,
        rate: prior.rate + 0.5 * rss,
    }
}

pub fn update_tau_y<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &Dataset,
    prior: &GammaPrior,
    rng: &mut R,
) -> Result<()> {
    state.tau_y = tau_y_conditional(state, data, prior).sample(rng)?;
    Ok(())
}
