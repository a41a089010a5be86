//! Shared fixtures and brute-force oracles for the integration tests.
#![allow(dead_code)]

pub mod conjugacy_suite;
pub mod micro_suite;

use std::sync::Arc;

use geodpm::geo::{build_distance_matrix, Coordinates, DistanceMatrix, LonLat};
use geodpm::model::{BetaTable, ChainState, Dataset, GaussianConditional, Scheme, SpatialKernel};
use nalgebra::{DMatrix, DVector};
use statrs::distribution::{Beta, Continuous, Gamma, Normal};

/// Four locations, two covariates, three clusters.
pub fn tiny_data() -> Dataset {
    let y = vec![1.3, -0.4, 2.1, 0.6];
    let x = vec![1.0, 0.5, 1.0, -1.2, 1.0, 0.8, 1.0, 0.1];
    let coords = Coordinates::new(vec![
        LonLat::new(-84.0, 32.0),
        LonLat::new(-83.5, 32.4),
        LonLat::new(-83.1, 33.0),
        LonLat::new(-84.4, 33.3),
    ])
    .unwrap();
    Dataset::new(y, x, 2, coords, None).unwrap()
}

pub fn tiny_distances() -> Arc<DistanceMatrix> {
    Arc::new(build_distance_matrix(tiny_data().coords(), 10.0).unwrap())
}

pub fn tiny_state() -> ChainState {
    let v = vec![0.45, 0.3];
    ChainState {
        z: vec![0, 1, 0, 1],
        beta: BetaTable::from_rows(3, 2, vec![0.8, 1.1, -0.3, 0.4, 0.2, -0.6]).unwrap(),
        pi: geodpm::model::stick_breaking(&v),
        v,
        alpha: 1.7,
        w: vec![0.2, -0.1, 0.35, -0.25],
        tau_y: 2.2,
        tau_w: 1.4,
        tau_b: 0.9,
        mu_b: vec![0.3, -0.2],
        phi: 3.0,
    }
}

pub fn tiny_kernel(scheme: Scheme, phi: f64) -> SpatialKernel {
    SpatialKernel::new(tiny_distances(), scheme, phi).unwrap()
}

/// Hyperparameters of the oracle joint, matching the library defaults.
pub struct Oracle {
    pub dist: Arc<DistanceMatrix>,
    pub scheme: Scheme,
    pub bandwidth_max: f64,
}

fn gamma_ln(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    Gamma::new(1.0, 1.0).unwrap().ln_pdf(x)
}

fn normal_ln(x: f64, mean: f64, var: f64) -> f64 {
    Normal::new(mean, var.sqrt()).unwrap().ln_pdf(x)
}

/// `log N(x; mean, cov)` through an explicit inverse and determinant.
pub fn mvn_ln(x: &[f64], mean: &[f64], cov: &DMatrix<f64>) -> f64 {
    let n = x.len();
    let d = DVector::from_iterator(n, x.iter().zip(mean).map(|(a, b)| a - b));
    let inv = cov.clone().try_inverse().expect("invertible covariance");
    let quad = (d.transpose() * inv * &d)[(0, 0)];
    -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + cov.determinant().ln() + quad)
}

impl Oracle {
    pub fn tiny(scheme: Scheme) -> Self {
        Self { dist: tiny_distances(), scheme, bandwidth_max: 100.0 }
    }

    pub fn h(&self, phi: f64) -> DMatrix<f64> {
        let d = self.dist.as_matrix();
        match self.scheme {
            Scheme::Unity => DMatrix::identity(d.nrows(), d.ncols()),
            Scheme::Exponential => d.map(|v| (-v / phi).exp()),
            Scheme::Gaussian => d.map(|v| (-(v / phi) * (v / phi)).exp()),
        }
    }

    /// Unnormalized log joint of everything, written out term by term.
    pub fn log_joint(&self, s: &ChainState, data: &Dataset) -> f64 {
        let (n, p, m) = (data.n(), data.p(), s.beta.m());
        if !(s.phi > 0.0 && s.phi < self.bandwidth_max) {
            return f64::NEG_INFINITY;
        }
        let mut lp = 0.0;
        for i in 0..n {
            let b = s.beta.row(s.z[i]);
            let mean: f64 = (0..p).map(|j| data.x_row(i)[j] * b[j]).sum::<f64>() + s.w[i];
            lp += normal_ln(data.y()[i], mean, 1.0 / s.tau_y);
        }
        lp += mvn_ln(&s.w, &vec![0.0; n], &(self.h(s.phi) / s.tau_w));
        for c in 0..m {
            for j in 0..p {
                lp += normal_ln(s.beta.row(c)[j], s.mu_b[j], 1.0 / s.tau_b);
            }
        }
        // stick-breaking weights recomputed here rather than read from the state
        let mut pi = Vec::with_capacity(m);
        let mut rest = 1.0;
        for c in 0..m - 1 {
            pi.push(s.v[c] * rest);
            rest *= 1.0 - s.v[c];
        }
        pi.push(rest);
        for i in 0..n {
            lp += pi[s.z[i]].ln();
        }
        let stick = Beta::new(1.0, s.alpha).unwrap();
        for &v in &s.v {
            lp += stick.ln_pdf(v);
        }
        lp += gamma_ln(s.alpha) + gamma_ln(s.tau_y) + gamma_ln(s.tau_w) + gamma_ln(s.tau_b);
        for &mu in &s.mu_b {
            lp += normal_ln(mu, 0.0, 1.0);
        }
        lp
    }
}

/// KL divergence between two densities given as log values on a common grid,
/// each normalized over the grid.
pub fn grid_kl(log_p: &[f64], log_q: &[f64]) -> f64 {
    let norm = |l: &[f64]| {
        let mx = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = l.iter().map(|v| (v - mx).exp()).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect::<Vec<f64>>()
    };
    let (p, q) = (norm(log_p), norm(log_q));
    p.iter()
        .zip(&q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a / b).ln())
        .sum()
}

/// Largest normalized grid mass on the outermost cells, used to check that a
/// grid covers its target.
pub fn edge_mass(log_p: &[f64], edge: &[usize]) -> f64 {
    let mx = log_p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = log_p.iter().map(|v| (v - mx).exp()).sum();
    edge.iter().map(|&k| (log_p[k] - mx).exp() / total).fold(0.0, f64::max)
}

/// `log N(x; mean, Q⁻¹)` of a Gaussian conditional, using its precision matrix.
pub fn conditional_ln(g: &GaussianConditional, x: &[f64]) -> f64 {
    let q = g.precision_matrix();
    let cov = q.try_inverse().unwrap();
    mvn_ln(x, &g.mean, &cov)
}

pub fn linspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / k as f64).collect()
}

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}
