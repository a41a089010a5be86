//! Model assessment: CPO/LPML, effective number of parameters, Rand index and
//! the replicate-study error measures.

use serde::{Deserialize, Serialize};

use crate::chain::{LogLikMatrix, PosteriorDraws};
use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::numerics::{log_sum_exp, normal_logpdf};
use crate::posterior::{ClusterSummary, DahlResult};

const JACKKNIFE_BATCHES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpoLpml {
    pub cpo: Vec<f64>,
    pub log_cpo: Vec<f64>,
    pub lpml: f64,
}

/// Harmonic-mean CPO estimate per observation,
/// `CPO_i = [T⁻¹ Σ_t exp(−ℓ_{t,i})]⁻¹`, evaluated with log-sum-exp.
pub fn compute_cpo_lpml(loglik: &LogLikMatrix) -> Result<CpoLpml> {
    let (t, n) = (loglik.draws(), loglik.n());
    if t < 2 {
        return Err(Error::InsufficientData(format!("CPO needs at least 2 draws, got {t}")));
    }
    if let Some(pos) = loglik.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidDraws(format!(
            "non-finite log-likelihood at draw {}, observation {}",
            pos / n + 1,
            pos % n + 1
        )));
    }
    let ln_t = (t as f64).ln();
    let mut column = vec![0.0; t];
    let log_cpo: Vec<f64> = (0..n)
        .map(|i| {
            for (s, v) in column.iter_mut().enumerate() {
                *v = -loglik.get(s, i);
            }
            ln_t - log_sum_exp(&column)
        })
        .collect();
    Ok(CpoLpml {
        cpo: log_cpo.iter().map(|l| l.exp()).collect(),
        lpml: log_cpo.iter().sum(),
        log_cpo,
    })
}

/// Batch-jackknife standard error of LPML over contiguous blocks of draws.
pub fn lpml_jackknife_se(loglik: &LogLikMatrix) -> Result<f64> {
    let (t, n) = (loglik.draws(), loglik.n());
    let batches = JACKKNIFE_BATCHES.min(t / 2);
    if batches < 2 {
        return Err(Error::InsufficientData("too few draws for a jackknife".into()));
    }
    let bounds: Vec<usize> = (0..=batches).map(|b| b * t / batches).collect();
    let mut estimates = Vec::with_capacity(batches);
    for b in 0..batches {
        let mut rows = Vec::with_capacity((t - (bounds[b + 1] - bounds[b])) * n);
        for s in (0..t).filter(|s| *s < bounds[b] || *s >= bounds[b + 1]) {
            rows.extend_from_slice(loglik.row(s));
        }
        estimates.push(compute_cpo_lpml(&LogLikMatrix::from_rows(n, rows)?)?.lpml);
    }
    let mean = estimates.iter().sum::<f64>() / batches as f64;
    let ss: f64 = estimates.iter().map(|e| (e - mean).powi(2)).sum();
    Ok(((batches as f64 - 1.0) / batches as f64 * ss).sqrt())
}

/// A plug-in parameter value: fitted means and the noise precision.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEstimate {
    pub fitted: Vec<f64>,
    pub tau_y: f64,
}

pub fn deviance(y: &[f64], point: &PointEstimate) -> f64 {
    let var = 1.0 / point.tau_y;
    -2.0 * y
        .iter()
        .zip(&point.fitted)
        .map(|(yi, m)| normal_logpdf(*yi, *m, var))
        .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complexity {
    pub p_d: f64,
    pub d_bar: f64,
    pub d_at_mean: f64,
}

/// `p_D = D̄ − D(θ̄)` with `D_t = −2 Σ_i ℓ_{t,i}`.
pub fn compute_pd(loglik: &LogLikMatrix, y: &[f64], point: &PointEstimate) -> Result<Complexity> {
    let t = loglik.draws();
    if t == 0 {
        return Err(Error::InsufficientData("p_D needs at least one draw".into()));
    }
    if y.len() != loglik.n() || point.fitted.len() != y.len() {
        return Err(Error::invalid("p_D inputs have inconsistent lengths"));
    }
    let d_bar = (0..t).map(|s| -2.0 * loglik.row(s).iter().sum::<f64>()).sum::<f64>() / t as f64;
    let d_at_mean = deviance(y, point);
    Ok(Complexity {
        p_d: d_bar - d_at_mean,
        d_bar,
        d_at_mean,
    })
}

/// Posterior-mean plug-in for the clustered model: the least-squares
/// partition with per-cluster mean coefficients, posterior-mean `W` and `τ_y`.
pub fn posterior_mean_point(
    draws: &PosteriorDraws,
    data: &Dataset,
    dahl: &DahlResult,
    summary: &ClusterSummary,
) -> PointEstimate {
    let k = draws.len() as f64;
    let fitted = (0..data.n())
        .map(|i| {
            let beta = &summary.means[dahl.partition[i] as usize - 1];
            let xb: f64 = data.x_row(i).iter().zip(beta).map(|(x, b)| x * b).sum();
            let w_bar = (0..draws.len()).map(|t| draws.w(t)[i]).sum::<f64>() / k;
            xb + w_bar
        })
        .collect();
    PointEstimate {
        fitted,
        tau_y: draws.tau_y.iter().sum::<f64>() / k,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentReport {
    pub cpo: Vec<f64>,
    pub lpml: f64,
    pub lpml_jackknife_se: Option<f64>,
    pub p_d: f64,
    pub d_bar: f64,
    pub d_at_mean: f64,
}

impl AssessmentReport {
    pub fn new(loglik: &LogLikMatrix, y: &[f64], point: &PointEstimate) -> Result<Self> {
        let c = compute_cpo_lpml(loglik)?;
        let pd = compute_pd(loglik, y, point)?;
        Ok(Self {
            cpo: c.cpo,
            lpml: c.lpml,
            lpml_jackknife_se: lpml_jackknife_se(loglik).ok(),
            p_d: pd.p_d,
            d_bar: pd.d_bar,
            d_at_mean: pd.d_at_mean,
        })
    }
}

pub fn assess_fit(
    draws: &PosteriorDraws,
    data: &Dataset,
    dahl: &DahlResult,
    summary: &ClusterSummary,
) -> Result<AssessmentReport> {
    let point = posterior_mean_point(draws, data, dahl, summary);
    AssessmentReport::new(&draws.loglik, data.y(), &point)
}

/// Pair counts: (a) together in both, (b) apart in both, (c) together only in
/// the first, (d) together only in the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PairCounts {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

pub fn pair_counts<L: PartialEq>(z1: &[L], z2: &[L]) -> Result<PairCounts> {
    if z1.len() != z2.len() {
        return Err(Error::invalid(format!(
            "partitions have lengths {} and {}",
            z1.len(),
            z2.len()
        )));
    }
    if z1.len() < 2 {
        return Err(Error::invalid("Rand index needs at least two items"));
    }
    let mut pc = PairCounts::default();
    for i in 0..z1.len() {
        for j in i + 1..z1.len() {
            match (z1[i] == z1[j], z2[i] == z2[j]) {
                (true, true) => pc.a += 1,
                (false, false) => pc.b += 1,
                (true, false) => pc.c += 1,
                (false, true) => pc.d += 1,
            }
        }
    }
    Ok(pc)
}

/// `(a + b) / (n choose 2)`.
pub fn rand_index<L: PartialEq>(z1: &[L], z2: &[L]) -> Result<f64> {
    let pc = pair_counts(z1, z2)?;
    Ok((pc.a + pc.b) as f64 / (pc.a + pc.b + pc.c + pc.d) as f64)
}

/// What the coverage indicator checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverageMode {
    /// The true coefficient lies inside the replicate's 95% HPD interval.
    #[default]
    TrueValue,
    /// The point estimate lies inside its own interval, as literally printed.
    Estimate,
}

/// Per-replicate estimates for a study with `n` locations and `p` coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateInputs {
    pub n: usize,
    pub p: usize,
    /// Row-major `n × p` per replicate.
    pub estimates: Vec<Vec<f64>>,
    pub hpds: Vec<Vec<(f64, f64)>>,
    /// Row-major `n × p`.
    pub truths: Vec<f64>,
    pub partitions: Vec<Vec<u32>>,
    pub true_partition: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientMetrics {
    /// Average over locations of the replicate-averaged estimate.
    pub mean_estimate: f64,
    pub mab: f64,
    pub msd: f64,
    pub mmse: f64,
    pub mcr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateMetrics {
    pub replicates: usize,
    pub coefficients: Vec<CoefficientMetrics>,
    pub rand_index: Vec<f64>,
    pub mean_rand_index: f64,
    /// Row-major `n × p` replicate-averaged estimates.
    pub beta_bar_hat: Vec<f64>,
}

pub fn replicate_metrics(inputs: &ReplicateInputs, coverage: CoverageMode) -> Result<ReplicateMetrics> {
    let (n, p) = (inputs.n, inputs.p);
    let r = inputs.estimates.len();
    if r < 2 {
        return Err(Error::InsufficientData(format!(
            "the standard deviation across replicates needs R >= 2, got {r}"
        )));
    }
    let np = n * p;
    if inputs.truths.len() != np
        || inputs.hpds.len() != r
        || inputs.partitions.len() != r
        || inputs.estimates.iter().any(|e| e.len() != np)
        || inputs.hpds.iter().any(|h| h.len() != np)
    {
        return Err(Error::invalid("replicate inputs have inconsistent dimensions"));
    }
    let rf = r as f64;
    let beta_bar_hat: Vec<f64> = (0..np)
        .map(|k| inputs.estimates.iter().map(|e| e[k]).sum::<f64>() / rf)
        .collect();
    let mut coefficients = Vec::with_capacity(p);
    for m in 0..p {
        let (mut mab, mut msd, mut mmse, mut mcr, mut mean_est) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for l in 0..n {
            let k = l * p + m;
            let truth = inputs.truths[k];
            let bar = beta_bar_hat[k];
            mean_est += bar;
            let (mut abs, mut dev, mut sq, mut cov) = (0.0, 0.0, 0.0, 0.0);
            for rep in 0..r {
                let est = inputs.estimates[rep][k];
                let (lo, hi) = inputs.hpds[rep][k];
                abs += (est - truth).abs();
                dev += (est - bar).powi(2);
                sq += (est - truth).powi(2);
                let target = match coverage {
                    CoverageMode::TrueValue => truth,
                    CoverageMode::Estimate => est,
                };
                if lo <= target && target <= hi {
                    cov += 1.0;
                }
            }
            mab += abs / rf;
            msd += (dev / (rf - 1.0)).sqrt();
            mmse += sq / rf;
            mcr += cov / rf;
        }
        let nf = n as f64;
        coefficients.push(CoefficientMetrics {
            mean_estimate: mean_est / nf,
            mab: mab / nf,
            msd: msd / nf,
            mmse: mmse / nf,
            mcr: mcr / nf,
        });
    }
    let rand_index = inputs
        .partitions
        .iter()
        .map(|z| rand_index(z, &inputs.true_partition))
        .collect::<Result<Vec<_>>>()?;
    let mean_rand_index = rand_index.iter().sum::<f64>() / rf;
    Ok(ReplicateMetrics {
        replicates: r,
        coefficients,
        rand_index,
        mean_rand_index,
        beta_bar_hat,
    })
}

impl ReplicateMetrics {
    /// Aligned table in the column order β̄̂, MAB, MSD, MMSE, MCR, RI.
    pub fn render_table(&self, label: &str) -> String {
        let mut out = format!(
            "{:<20}{:<8}{:>10}{:>9}{:>9}{:>9}{:>9}{:>9}\n",
            "", "", "beta_bar", "MAB", "MSD", "MMSE", "MCR", "RI"
        );
        for (m, c) in self.coefficients.iter().enumerate() {
            let ri = if m == 0 {
                format!("{:.3}", self.mean_rand_index)
            } else {
                String::new()
            };
            out.push_str(&format!(
                "{:<20}{:<8}{:>10.3}{:>9.3}{:>9.3}{:>9.3}{:>9.3}{:>9}\n",
                if m == 0 { label } else { "" },
                format!("beta{}", m + 1),
                c.mean_estimate,
                c.mab,
                c.msd,
                c.mmse,
                c.mcr,
                ri
            ));
        }
        out
    }
}
