//! Vanilla Bayesian linear regression: one coefficient vector shared by all
//! locations and no spatial effect. Used as the comparison model.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::assess::{compute_cpo_lpml, compute_pd, lpml_jackknife_se, PointEstimate};
use crate::chain::LogLikMatrix;
use crate::error::{Error, Result};
use crate::model::{Dataset, GammaParams, GaussianConditional, ModelConfig, PrecisionFactor};
use crate::numerics::{cholesky, hpd_interval, normal_logpdf, RngStream};

/// Prior precision of each coefficient, i.e. `β ~ N(0, 100 I)`.
pub const BETA_PRIOR_PRECISION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineDraws {
    pub p: usize,
    /// `draws × p`.
    pub beta: Vec<f64>,
    pub tau_y: Vec<f64>,
    pub loglik: LogLikMatrix,
}

impl BaselineDraws {
    pub fn len(&self) -> usize {
        self.tau_y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau_y.is_empty()
    }

    pub fn beta(&self, t: usize) -> &[f64] {
        &self.beta[t * self.p..(t + 1) * self.p]
    }
}

/// Posterior summaries for the baseline fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub draws: usize,
    pub beta_mean: Vec<f64>,
    pub beta_hpd: Vec<(f64, f64)>,
    pub tau_y_mean: f64,
    pub lpml: f64,
    pub lpml_jackknife_se: Option<f64>,
    pub p_d: f64,
    pub d_bar: f64,
    pub d_at_mean: f64,
}

struct Sufficient {
    xtx: DMatrix<f64>,
    xty: Vec<f64>,
}

fn sufficient(data: &Dataset) -> Sufficient {
    let p = data.p();
    let mut xtx = DMatrix::zeros(p, p);
    let mut xty = vec![0.0; p];
    for i in 0..data.n() {
        let x = data.x_row(i);
        for a in 0..p {
            xty[a] += x[a] * data.y()[i];
            for b in 0..p {
                xtx[(a, b)] += x[a] * x[b];
            }
        }
    }
    Sufficient { xtx, xty }
}

fn fitted(data: &Dataset, beta: &[f64]) -> Vec<f64> {
    (0..data.n())
        .map(|i| data.x_row(i).iter().zip(beta).map(|(x, b)| x * b).sum())
        .collect()
}

/// `β | τ ~ N(P⁻¹ τ Xᵀy, P⁻¹)` with `P = 0.01 I + τ XᵀX`.
pub fn baseline_beta_conditional(data: &Dataset, tau_y: f64) -> Result<GaussianConditional> {
    let s = sufficient(data);
    beta_from(&s, tau_y)
}

fn beta_from(s: &Sufficient, tau_y: f64) -> Result<GaussianConditional> {
    let p = s.xty.len();
    let prec = DMatrix::identity(p, p) * BETA_PRIOR_PRECISION + &s.xtx * tau_y;
    let chol = cholesky(&prec)?;
    let rhs: Vec<f64> = s.xty.iter().map(|v| tau_y * v).collect();
    Ok(GaussianConditional {
        mean: chol.solve(&rhs)?,
        precision: PrecisionFactor::Dense(chol),
    })
}

/// `τ | β ~ Gamma(a + n/2, b + RSS/2)`.
pub fn baseline_tau_conditional(data: &Dataset, beta: &[f64], config: &ModelConfig) -> GammaParams {
    let rss: f64 = fitted(data, beta)
        .iter()
        .zip(data.y())
        .map(|(m, y)| (y - m).powi(2))
        .sum();
    GammaParams {
        shape: config.tau_y_prior.shape + data.n() as f64 / 2.0,
        rate: config.tau_y_prior.rate + rss / 2.0,
    }
}

/// Two-block Gibbs sampler using the chain length, thinning and burn-in of
/// `config`.
pub fn run_baseline(config: &ModelConfig, data: &Dataset, mut rng: RngStream) -> Result<BaselineDraws> {
    config.validate()?;
    let (n, p) = (data.n(), data.p());
    let s = sufficient(data);
    let mut tau = 1.0;
    let mut out = BaselineDraws {
        p,
        beta: Vec::with_capacity(config.stored_draws() * p),
        tau_y: Vec::with_capacity(config.stored_draws()),
        loglik: LogLikMatrix::new(n),
    };
    for sweep in 1..=config.n_iter {
        let beta = beta_from(&s, tau)?.sample(&mut rng);
        tau = baseline_tau_conditional(data, &beta, config).sample(&mut rng)?;
        if sweep % config.thin == 0 && sweep / config.thin > config.burn_in {
            let var = 1.0 / tau;
            let ll: Vec<f64> = fitted(data, &beta)
                .iter()
                .zip(data.y())
                .map(|(m, y)| normal_logpdf(*y, *m, var))
                .collect();
            if ll.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericalDegeneracy(format!(
                    "non-finite baseline log-likelihood at sweep {sweep}"
                )));
            }
            out.beta.extend_from_slice(&beta);
            out.tau_y.push(tau);
            out.loglik.push_row(&ll);
        }
    }
    Ok(out)
}

pub fn summarize_baseline(draws: &BaselineDraws, data: &Dataset) -> Result<BaselineReport> {
    let t = draws.len();
    if t < 2 {
        return Err(Error::InsufficientData("baseline summary needs at least 2 draws".into()));
    }
    let p = draws.p;
    let mut beta_mean = Vec::with_capacity(p);
    let mut beta_hpd = Vec::with_capacity(p);
    for j in 0..p {
        let xs: Vec<f64> = (0..t).map(|s| draws.beta(s)[j]).collect();
        beta_mean.push(xs.iter().sum::<f64>() / t as f64);
        beta_hpd.push(hpd_interval(&xs, 0.95)?);
    }
    let tau_y_mean = draws.tau_y.iter().sum::<f64>() / t as f64;
    let point = PointEstimate {
        fitted: fitted(data, &beta_mean),
        tau_y: tau_y_mean,
    };
    let cpo = compute_cpo_lpml(&draws.loglik)?;
    let pd = compute_pd(&draws.loglik, data.y(), &point)?;
    Ok(BaselineReport {
        draws: t,
        beta_mean,
        beta_hpd,
        tau_y_mean,
        lpml: cpo.lpml,
        lpml_jackknife_se: lpml_jackknife_se(&draws.loglik).ok(),
        p_d: pd.p_d,
        d_bar: pd.d_bar,
        d_at_mean: pd.d_at_mean,
    })
}

impl BaselineReport {
    pub fn render_table(&self) -> String {
        let mut out = format!("{:<10}{:>10}{:>22}\n", "", "estimate", "95% HPD");
        for (j, (m, (lo, hi))) in self.beta_mean.iter().zip(&self.beta_hpd).enumerate() {
            out.push_str(&format!(
                "{:<10}{:>10.3}{:>22}\n",
                format!("beta{}", j + 1),
                m,
                format!("({lo:.3}, {hi:.3})")
            ));
        }
        out.push_str(&format!("LPML {:.3}   p_D {:.3}\n", self.lpml, self.p_d));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{Coordinates, LonLat};
    use crate::numerics::standard_normal;

    fn synthetic(n: usize, beta: &[f64], seed: u64) -> Dataset {
        let mut rng = RngStream::new(seed);
        let p = beta.len();
        let x: Vec<f64> = (0..n * p).map(|_| standard_normal(&mut rng)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let xb: f64 = x[i * p..(i + 1) * p].iter().zip(beta).map(|(a, b)| a * b).sum();
                xb + standard_normal(&mut rng)
            })
            .collect();
        let coords = Coordinates::new(
            (0..n)
                .map(|i| LonLat { lon: -84.0 + i as f64 * 0.01, lat: 32.0 })
                .collect(),
        )
        .unwrap();
        Dataset::new(y, x, p, coords, None).unwrap()
    }

    #[test]
    fn recovers_coefficients_and_reports_pd_near_p() {
        let truth = [1.0, 0.0, -2.0];
        let data = synthetic(200, &truth, 3);
        let config = ModelConfig {
            n_iter: 4000,
            thin: 2,
            burn_in: 200,
            ..ModelConfig::default()
        };
        let draws = run_baseline(&config, &data, RngStream::new(9)).unwrap();
        assert_eq!(draws.len(), config.stored_draws());
        let r = summarize_baseline(&draws, &data).unwrap();
        for (j, t) in truth.iter().enumerate() {
            let (lo, hi) = r.beta_hpd[j];
            assert!(lo < *t && *t < hi, "beta{j}: {t} outside ({lo}, {hi})");
        }
        // three coefficients plus the noise precision
        assert!((r.p_d - 4.0).abs() < 1.2, "p_D = {}", r.p_d);
        // compare with the least-squares residual variance of this sample
        let x = DMatrix::from_row_slice(200, 3, data.x_row_major());
        let y = nalgebra::DVector::from_column_slice(data.y());
        let ols = (x.transpose() * &x).try_inverse().unwrap() * x.transpose() * &y;
        let s2 = (y - x * ols).norm_squared() / 197.0;
        assert!((r.tau_y_mean * s2 - 1.0).abs() < 0.05, "tau {} vs 1/{s2}", r.tau_y_mean);
    }

    #[test]
    fn beta_conditional_matches_direct_inverse() {
        let data = synthetic(30, &[0.5, 1.5], 1);
        let g = baseline_beta_conditional(&data, 2.0).unwrap();
        let x = DMatrix::from_row_slice(30, 2, data.x_row_major());
        let y = nalgebra::DVector::from_column_slice(data.y());
        let prec = DMatrix::identity(2, 2) * 0.01 + x.transpose() * &x * 2.0;
        let mean = prec.clone().try_inverse().unwrap() * (x.transpose() * y * 2.0);
        for j in 0..2 {
            assert!((g.mean[j] - mean[j]).abs() < 1e-10);
        }
        assert!((g.precision_matrix() - prec).abs().max() < 1e-10);
    }

    #[test]
    fn deterministic_given_seed() {
        let data = synthetic(40, &[1.0, 2.0], 5);
        let config = ModelConfig { n_iter: 200, thin: 1, burn_in: 10, ..ModelConfig::default() };
        let a = run_baseline(&config, &data, RngStream::new(4)).unwrap();
        let b = run_baseline(&config, &data, RngStream::new(4)).unwrap();
        assert_eq!(a, b);
    }
}
