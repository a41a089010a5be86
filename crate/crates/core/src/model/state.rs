use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cluster coefficient rows `β_1..β_M`, row-major `M × p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaTable {
    m: usize,
    p: usize,
    data: Vec<f64>,
}

impl BetaTable {
    pub fn zeros(m: usize, p: usize) -> Self {
        Self {
            m,
            p,
            data: vec![0.0; m * p],
        }
    }

    pub fn from_rows(m: usize, p: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != m * p {
            return Err(Error::invalid(format!(
                "beta table needs {m}×{p} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { m, p, data })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, c: usize) -> &[f64] {
        &self.data[c * self.p..(c + 1) * self.p]
    }

    pub fn row_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.p..(c + 1) * self.p]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Swap two rows; used when permuting labels.
    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.p {
            self.data.swap(a * self.p + j, b * self.p + j);
        }
    }
}

/// Weights `π_c = V_c ∏_{ℓ<c}(1 − V_ℓ)` for `c < M`; the last weight takes
/// the remaining stick.
pub fn stick_breaking(v: &[f64]) -> Vec<f64> {
    let mut pi = Vec::with_capacity(v.len() + 1);
    let mut remaining = 1.0;
    for &vc in v {
        pi.push(vc * remaining);
        remaining *= 1.0 - vc;
    }
    pi.push(remaining);
    pi
}

/// One full set of latent variables and parameters.
///
/// Cluster labels are zero-based in memory and written one-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub z: Vec<usize>,
    pub beta: BetaTable,
    /// Stick fractions `V_1..V_{M-1}`.
    pub v: Vec<f64>,
    pub pi: Vec<f64>,
    pub alpha: f64,
    /// Spatial effects, one per location.
    pub w: Vec<f64>,
    pub tau_y: f64,
    pub tau_w: f64,
    pub tau_b: f64,
    pub mu_b: Vec<f64>,
    pub phi: f64,
}

impl ChainState {
    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn m(&self) -> usize {
        self.beta.m()
    }

    pub fn p(&self) -> usize {
        self.beta.p()
    }

    /// Recompute `π` from the stick fractions.
    pub fn refresh_weights(&mut self) {
        self.pi = stick_breaking(&self.v);
    }

    /// Number of observations per cluster.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.m()];
        for &c in &self.z {
            counts[c] += 1;
        }
        counts
    }

    pub fn occupied_clusters(&self) -> usize {
        self.counts().iter().filter(|&&c| c > 0).count()
    }

    /// Check the structural invariants.
    pub fn validate(&self) -> Result<()> {
        let m = self.m();
        if self.v.len() + 1 != m || self.pi.len() != m {
            return Err(Error::invalid("stick vectors do not match truncation"));
        }
        if let Some(&bad) = self.z.iter().find(|&&c| c >= m) {
            return Err(Error::invalid(format!("label {bad} out of range")));
        }
        if self.w.len() != self.n() || self.mu_b.len() != self.p() {
            return Err(Error::invalid("state vector lengths are inconsistent"));
        }
        let sum: f64 = self.pi.iter().sum();
        if (sum - 1.0).abs() > 1e-12 || self.pi.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::invalid(format!("stick weights sum to {sum}")));
        }
        if self.v.iter().any(|&v| !(v > 0.0 && v < 1.0) && v != 0.0) {
            return Err(Error::invalid("stick fraction outside [0, 1)"));
        }
        for (name, val) in [
            ("alpha", self.alpha),
            ("tau_y", self.tau_y),
            ("tau_w", self.tau_w),
            ("tau_b", self.tau_b),
            ("phi", self.phi),
        ] {
            if !(val > 0.0 && val.is_finite()) {
                return Err(Error::invalid(format!("{name} = {val} is not positive")));
            }
        }
        Ok(())
    }
}
