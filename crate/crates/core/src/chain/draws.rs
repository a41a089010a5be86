use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BetaTable, ChainState, ModelConfig};

/// Per-draw, per-observation log-likelihood, row-major `draws × n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLikMatrix {
    n: usize,
    values: Vec<f64>,
}

impl LogLikMatrix {
    pub fn new(n: usize) -> Self {
        Self { n, values: Vec::new() }
    }

    pub fn from_rows(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || !values.len().is_multiple_of(n) {
            return Err(Error::invalid(format!(
                "{} log-likelihood values do not form rows of {n}",
                values.len()
            )));
        }
        Ok(Self { n, values })
    }

    pub fn push_row(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.n);
        self.values.extend_from_slice(row);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn draws(&self) -> usize {
        self.values.len() / self.n.max(1)
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.n..(t + 1) * self.n]
    }

    pub fn get(&self, t: usize, i: usize) -> f64 {
        self.values[t * self.n + i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Run diagnostics; acceptance counts cover retained sweeps only when burn-in
/// is positive.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub phi_accepted: u64,
    pub phi_proposed: u64,
    pub phi_step: f64,
    pub v_clamps: u64,
    pub wall_clock_secs: f64,
}

/// Thinned post-burn-in states stored field by field, one row per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub config: ModelConfig,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub m: usize,
    /// Zero-based labels, `draws × n`.
    pub z: Vec<u32>,
    /// `draws × (M·p)`, each row a row-major coefficient table.
    pub beta: Vec<f64>,
    pub v: Vec<f64>,
    pub pi: Vec<f64>,
    pub alpha: Vec<f64>,
    pub tau_y: Vec<f64>,
    pub tau_w: Vec<f64>,
    pub tau_b: Vec<f64>,
    pub phi: Vec<f64>,
    pub mu_b: Vec<f64>,
    pub w: Vec<f64>,
    pub loglik: LogLikMatrix,
    pub diagnostics: ChainDiagnostics,
}

impl PosteriorDraws {
    pub fn with_capacity(config: ModelConfig, n: usize, p: usize, seed: u64) -> Self {
        let m = config.truncation;
        let k = config.stored_draws();
        Self {
            seed,
            n,
            p,
            m,
            z: Vec::with_capacity(k * n),
            beta: Vec::with_capacity(k * m * p),
            v: Vec::with_capacity(k * (m - 1)),
            pi: Vec::with_capacity(k * m),
            alpha: Vec::with_capacity(k),
            tau_y: Vec::with_capacity(k),
            tau_w: Vec::with_capacity(k),
            tau_b: Vec::with_capacity(k),
            phi: Vec::with_capacity(k),
            mu_b: Vec::with_capacity(k * p),
            w: Vec::with_capacity(k * n),
            loglik: LogLikMatrix::new(n),
            diagnostics: ChainDiagnostics::default(),
            config,
        }
    }

    pub fn push(&mut self, state: &ChainState, loglik: &[f64]) {
        self.z.extend(state.z.iter().map(|&c| c as u32));
        self.beta.extend_from_slice(state.beta.as_slice());
        self.v.extend_from_slice(&state.v);
        self.pi.extend_from_slice(&state.pi);
        self.alpha.push(state.alpha);
        self.tau_y.push(state.tau_y);
        self.tau_w.push(state.tau_w);
        self.tau_b.push(state.tau_b);
        self.phi.push(state.phi);
        self.mu_b.extend_from_slice(&state.mu_b);
        self.w.extend_from_slice(&state.w);
        self.loglik.push_row(loglik);
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn labels(&self, t: usize) -> &[u32] {
        &self.z[t * self.n..(t + 1) * self.n]
    }

    /// Coefficient row of cluster `c` in draw `t`.
    pub fn beta_row(&self, t: usize, c: usize) -> &[f64] {
        let base = t * self.m * self.p + c * self.p;
        &self.beta[base..base + self.p]
    }

    /// Coefficients carried by location `i` in draw `t`.
    pub fn location_beta(&self, t: usize, i: usize) -> &[f64] {
        self.beta_row(t, self.labels(t)[i] as usize)
    }

    pub fn w(&self, t: usize) -> &[f64] {
        &self.w[t * self.n..(t + 1) * self.n]
    }

    pub fn pi(&self, t: usize) -> &[f64] {
        &self.pi[t * self.m..(t + 1) * self.m]
    }

    /// Rebuild the full state of draw `t`.
    pub fn state(&self, t: usize) -> ChainState {
        let (m, p, n) = (self.m, self.p, self.n);
        ChainState {
            z: self.labels(t).iter().map(|&c| c as usize).collect(),
            beta: BetaTable::from_rows(m, p, self.beta[t * m * p..(t + 1) * m * p].to_vec())
                .expect("stored table has M×p entries"),
            v: self.v[t * (m - 1)..(t + 1) * (m - 1)].to_vec(),
            pi: self.pi(t).to_vec(),
            alpha: self.alpha[t],
            w: self.w[t * n..(t + 1) * n].to_vec(),
            tau_y: self.tau_y[t],
            tau_w: self.tau_w[t],
            tau_b: self.tau_b[t],
            mu_b: self.mu_b[t * p..(t + 1) * p].to_vec(),
            phi: self.phi[t],
        }
    }

    /// Number of occupied clusters in draw `t`.
    pub fn occupied(&self, t: usize) -> usize {
        let mut seen = vec![false; self.m];
        for &c in self.labels(t) {
            seen[c as usize] = true;
        }
        seen.iter().filter(|&&s| s).count()
    }

    /// Posterior mass of the last stick, averaged over draws; a truncation
    /// diagnostic.
    pub fn mean_last_weight(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        (0..self.len()).map(|t| self.pi(t)[self.m - 1]).sum::<f64>() / self.len() as f64
    }

    /// Bytes of numeric payload held per stored draw.
    pub fn bytes_per_draw(n: usize, p: usize, m: usize) -> usize {
        let f64s = m * p + (m - 1) + m + 5 + p + n + n;
        f64s * 8 + n * 4
    }
}
