use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};

use super::linalg::Cholesky;
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn standard_normal_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| standard_normal(rng)).collect()
}

pub fn sample_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, var: f64) -> Result<f64> {
    if !(var >= 0.0 && var.is_finite() && mean.is_finite()) {
        return Err(Error::invalid(format!("normal parameters ({mean}, {var})")));
    }
    Ok(mean + var.sqrt() * standard_normal(rng))
}

/// Gamma draw with shape/rate parameterization.
pub fn sample_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> Result<f64> {
    if !(shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()) {
        return Err(Error::invalid(format!(
            "gamma needs positive shape and rate, got ({shape}, {rate})"
        )));
    }
    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(g.sample(rng))
}

pub fn sample_beta<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::invalid(format!(
            "beta needs positive parameters, got ({a}, {b})"
        )));
    }
    let d = Beta::new(a, b).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(d.sample(rng))
}

/// Zero-based index drawn with probability proportional to `weights`.
pub fn sample_categorical<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> Result<usize> {
    let mut total = 0.0;
    for &w in weights {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::invalid(format!("categorical weight {w}")));
        }
        total += w;
    }
    if !(total > 0.0) {
        return Err(Error::invalid("categorical weights sum to zero"));
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if u < acc {
                return Ok(i);
            }
        }
    }
    Ok(last_positive)
}

/// Categorical draw from unnormalized log weights, using max subtraction.
/// `scratch` is reused to avoid allocation in hot loops.
pub fn sample_categorical_log<R: Rng + ?Sized>(
    rng: &mut R,
    log_weights: &[f64],
    scratch: &mut Vec<f64>,
) -> Result<usize> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::NumericalDegeneracy(
            "all categorical log weights are -inf or NaN".into(),
        ));
    }
    scratch.clear();
    scratch.extend(log_weights.iter().map(|lw| (lw - max).exp()));
    sample_categorical(rng, scratch)
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// log N(x; mean, var).
pub fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    let r = x - mean;
    -0.5 * (LN_2PI + var.ln() + r * r / var)
}

/// `mean + L ζ` with ζ standard normal.
pub fn mvn_sample<R: Rng + ?Sized>(rng: &mut R, mean: &[f64], chol_cov: &Cholesky) -> Result<Vec<f64>> {
    if mean.len() != chol_cov.dim() {
        return Err(Error::invalid(format!(
            "mean has length {}, covariance is {}",
            mean.len(),
            chol_cov.dim()
        )));
    }
    let z = standard_normal_vec(rng, mean.len());
    let lz = chol_cov.mul_lower(&z)?;
    Ok(mean.iter().zip(lz).map(|(m, v)| m + v).collect())
}

pub fn mvn_logpdf(x: &[f64], mean: &[f64], chol_cov: &Cholesky) -> Result<f64> {
    let d = chol_cov.dim();
    if x.len() != d || mean.len() != d {
        return Err(Error::invalid(format!(
            "dimension mismatch: x {}, mean {}, covariance {d}",
            x.len(),
            mean.len()
        )));
    }
    let r: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let q = chol_cov.quad_form_inv(&r)?;
    Ok(-0.5 * (d as f64 * (2.0 * PI).ln() + chol_cov.log_det() + q))
}
