use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Functional form of the spatial correlation matrix `H(φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// `H = I`; no spatial correlation.
    Unity,
    /// `exp(-d/φ)`.
    Exponential,
    /// `exp(-(d/φ)²)`.
    Gaussian,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Unity, Scheme::Exponential, Scheme::Gaussian];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Unity => "unity",
            Scheme::Exponential => "exponential",
            Scheme::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unity" => Ok(Scheme::Unity),
            "exponential" => Ok(Scheme::Exponential),
            "gaussian" => Ok(Scheme::Gaussian),
            other => Err(Error::Config(format!("unknown weighting scheme `{other}`"))),
        }
    }
}

/// Parameter blocks updated once per sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Z,
    Sticks,
    Beta,
    BaseMeasure,
    Spatial,
    Phi,
    TauY,
}

impl Block {
    pub fn name(&self) -> &'static str {
        match self {
            Block::Z => "z",
            Block::Sticks => "sticks",
            Block::Beta => "beta",
            Block::BaseMeasure => "base_measure",
            Block::Spatial => "spatial",
            Block::Phi => "phi",
            Block::TauY => "tau_y",
        }
    }
}

pub const DEFAULT_BLOCK_ORDER: [Block; 7] = [
    Block::Z,
    Block::Sticks,
    Block::Beta,
    Block::BaseMeasure,
    Block::Spatial,
    Block::Phi,
    Block::TauY,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl Default for GammaPrior {
    fn default() -> Self {
        Self {
            shape: 1.0,
            rate: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalPrior {
    pub mean: f64,
    pub var: f64,
}

impl Default for NormalPrior {
    fn default() -> Self {
        Self {
            mean: 0.0,
            var: 1.0,
        }
    }
}

/// Everything needed to reproduce a fit besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Truncation level M of the stick-breaking prior.
    pub truncation: usize,
    /// Upper bound D of the uniform bandwidth prior.
    pub bandwidth_max: f64,
    pub scheme: Scheme,
    /// Maximum entry of the normalized distance matrix.
    pub distance_cap: f64,
    pub n_iter: usize,
    pub thin: usize,
    /// Counted in recorded (thinned) draws.
    pub burn_in: usize,
    pub seed: u64,
    pub tau_y_prior: GammaPrior,
    pub tau_w_prior: GammaPrior,
    pub tau_b_prior: GammaPrior,
    pub alpha_prior: GammaPrior,
    pub mu_b_prior: NormalPrior,
    pub phi_init: f64,
    /// Initial random-walk standard deviation for φ.
    pub phi_step: f64,
    /// Tune the φ step during burn-in.
    pub adapt_phi: bool,
    pub block_order: Vec<Block>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            truncation: 50,
            bandwidth_max: 100.0,
            scheme: Scheme::Exponential,
            distance_cap: 10.0,
            n_iter: 50_000,
            thin: 10,
            burn_in: 2_000,
            seed: 1,
            tau_y_prior: GammaPrior::default(),
            tau_w_prior: GammaPrior::default(),
            tau_b_prior: GammaPrior::default(),
            alpha_prior: GammaPrior::default(),
            mu_b_prior: NormalPrior::default(),
            phi_init: 1.0,
            phi_step: 0.5,
            adapt_phi: true,
            block_order: DEFAULT_BLOCK_ORDER.to_vec(),
        }
    }
}

impl ModelConfig {
    /// Chain length used by the simulation harness.
    pub fn desk_scale() -> Self {
        Self {
            n_iter: 10_000,
            thin: 5,
            burn_in: 500,
            ..Self::default()
        }
    }

    /// Number of draws kept after thinning and burn-in.
    pub fn stored_draws(&self) -> usize {
        (self.n_iter / self.thin).saturating_sub(self.burn_in)
    }

    /// Sweeps that fall inside the burn-in window.
    pub fn burn_in_sweeps(&self) -> usize {
        self.burn_in * self.thin
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.truncation < 2 {
            return bad(format!("truncation must be at least 2, got {}", self.truncation));
        }
        if !(self.bandwidth_max > 0.0 && self.bandwidth_max.is_finite()) {
            return bad(format!("bandwidth_max must be positive, got {}", self.bandwidth_max));
        }
        if !(self.distance_cap > 0.0 && self.distance_cap.is_finite()) {
            return bad(format!("distance_cap must be positive, got {}", self.distance_cap));
        }
        if self.thin == 0 {
            return bad("thin must be positive".into());
        }
        if self.n_iter / self.thin <= self.burn_in {
            return bad(format!(
                "n_iter/thin = {} leaves no draws after burn-in {}",
                self.n_iter / self.thin,
                self.burn_in
            ));
        }
        for (name, g) in [
            ("tau_y_prior", self.tau_y_prior),
            ("tau_w_prior", self.tau_w_prior),
            ("tau_b_prior", self.tau_b_prior),
            ("alpha_prior", self.alpha_prior),
        ] {
            if !(g.shape > 0.0 && g.rate > 0.0) {
                return bad(format!("{name} needs positive shape and rate"));
            }
        }
        if !(self.mu_b_prior.var > 0.0) {
            return bad("mu_b_prior variance must be positive".into());
        }
        if !(self.phi_init > 0.0 && self.phi_init < self.bandwidth_max) {
            return bad(format!("phi_init must lie in (0, {})", self.bandwidth_max));
        }
        if !(self.phi_step > 0.0) {
            return bad("phi_step must be positive".into());
        }
        let mut seen = Vec::new();
        for b in &self.block_order {
            if seen.contains(b) {
                return bad(format!("block `{}` appears twice in block_order", b.name()));
            }
            seen.push(*b);
        }
        if seen.len() != DEFAULT_BLOCK_ORDER.len() {
            return bad("block_order must list every block exactly once".into());
        }
        Ok(())
    }
}
