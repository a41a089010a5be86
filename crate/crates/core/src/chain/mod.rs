//! Sweep orchestration, thinning, burn-in and draw storage.

mod draws;
mod snapshot;

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

pub use draws::{ChainDiagnostics, LogLikMatrix, PosteriorDraws};
pub use snapshot::{
    read_snapshot, snapshot_body, snapshot_deserialize, snapshot_serialize, write_draws_csv,
    write_snapshot, Snapshot, FORMAT_VERSION, MAGIC,
};

use crate::error::{Error, Result};
use crate::geo::{build_distance_matrix, DistanceMatrix};
use crate::model::{
    pointwise_loglik, stick_breaking, update_base_measure, update_beta_table, update_phi,
    update_spatial, update_sticks_and_alpha, update_tau_y, update_z, BetaTable, Block,
    ChainState, Dataset, ModelConfig, PhiTuner, Scheme, SpatialKernel,
};
use crate::numerics::{sample_beta, sample_normal, RngStream};

/// Starting state: every location in cluster 1, `α = 2`, unit precisions,
/// `φ` at its configured start, `W = 0`, and `μ_b`, sticks and the
/// coefficient table drawn from their priors.
pub fn init_state(config: &ModelConfig, data: &Dataset, rng: &mut RngStream) -> Result<ChainState> {
    let (n, p, m) = (data.n(), data.p(), config.truncation);
    let prior = config.mu_b_prior;
    let mu_b = (0..p)
        .map(|_| sample_normal(rng, prior.mean, prior.var))
        .collect::<Result<Vec<_>>>()?;
    let v = (0..m - 1)
        .map(|_| sample_beta(rng, 1.0, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let tau_b = 1.0;
    let mut beta = BetaTable::zeros(m, p);
    for c in 0..m {
        for (j, b) in beta.row_mut(c).iter_mut().enumerate() {
            *b = sample_normal(rng, mu_b[j], 1.0 / tau_b)?;
        }
    }
    Ok(ChainState {
        z: vec![0; n],
        beta,
        pi: stick_breaking(&v),
        v,
        alpha: 2.0,
        w: vec![0.0; n],
        tau_y: 1.0,
        tau_w: 1.0,
        tau_b,
        mu_b,
        phi: config.phi_init,
    })
}

/// Normalized distances for a dataset; unused (all zero) under the unity scheme.
pub fn distances_for(config: &ModelConfig, data: &Dataset) -> Result<Arc<DistanceMatrix>> {
    if config.scheme == Scheme::Unity {
        let n = data.n();
        return Ok(Arc::new(DistanceMatrix::from_matrix(nalgebra::DMatrix::zeros(n, n))?));
    }
    Ok(Arc::new(build_distance_matrix(data.coords(), config.distance_cap)?))
}

/// A running chain: state, kernel cache, φ tuner and random stream.
pub struct Chain<'a> {
    config: &'a ModelConfig,
    data: &'a Dataset,
    kernel: SpatialKernel,
    state: ChainState,
    tuner: PhiTuner,
    rng: RngStream,
    sweep: usize,
    v_clamps: u64,
}

impl<'a> Chain<'a> {
    pub fn new(
        config: &'a ModelConfig,
        data: &'a Dataset,
        dist: Arc<DistanceMatrix>,
        mut rng: RngStream,
    ) -> Result<Self> {
        config.validate()?;
        if dist.n() != data.n() {
            return Err(Error::invalid("distance matrix does not match the dataset"));
        }
        let mut state = init_state(config, data, &mut rng)?;
        // A starting bandwidth can make H(φ) numerically singular (mostly the
        // gaussian scheme); shrink it until the factor exists.
        let mut phi = state.phi;
        let kernel = loop {
            match SpatialKernel::new(dist.clone(), config.scheme, phi) {
                Ok(k) => break k,
                Err(e) if e.is_recoverable() && phi > 1e-6 => phi /= 2.0,
                Err(e) => return Err(e),
            }
        };
        state.phi = phi;
        Ok(Self {
            config,
            data,
            kernel,
            state,
            tuner: PhiTuner::new(config.phi_step, config.adapt_phi && config.burn_in > 0),
            rng,
            sweep: 0,
            v_clamps: 0,
        })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn kernel(&self) -> &SpatialKernel {
        &self.kernel
    }

    pub fn tuner(&self) -> &PhiTuner {
        &self.tuner
    }

    pub fn sweeps_done(&self) -> usize {
        self.sweep
    }

    pub fn v_clamps(&self) -> u64 {
        self.v_clamps
    }

    /// Run one block on the current state.
    pub fn apply(&mut self, block: Block) -> Result<()> {
        let cfg = self.config;
        let rng = &mut self.rng;
        let state = &mut self.state;
        match block {
            Block::Z => update_z(state, self.data, rng),
            Block::Sticks => {
                self.v_clamps += update_sticks_and_alpha(state, &cfg.alpha_prior, rng)? as u64;
                Ok(())
            }
            Block::Beta => update_beta_table(state, self.data, rng),
            Block::BaseMeasure => update_base_measure(state, &cfg.mu_b_prior, &cfg.tau_b_prior, rng),
            Block::Spatial => update_spatial(state, self.data, &self.kernel, &cfg.tau_w_prior, rng),
            Block::Phi => {
                update_phi(state, &mut self.kernel, &mut self.tuner, cfg.bandwidth_max, rng)?;
                Ok(())
            }
            Block::TauY => update_tau_y(state, self.data, &cfg.tau_y_prior, rng),
        }
    }

    /// One full sweep in the configured block order.
    pub fn sweep(&mut self) -> Result<()> {
        let sweep = self.sweep + 1;
        for &block in &self.config.block_order {
            self.apply(block).map_err(|e| Error::ChainAbort {
                sweep,
                block: block.name(),
                source: Box::new(e),
            })?;
        }
        self.sweep = sweep;
        if sweep == self.config.burn_in_sweeps() {
            self.tuner.freeze();
        }
        Ok(())
    }
}

/// Run `n_iter` sweeps, keep every `thin`-th state, drop the first `burn_in`
/// kept states, and store the per-observation log-likelihood of each draw.
pub fn run_chain(config: &ModelConfig, data: &Dataset, rng: RngStream) -> Result<PosteriorDraws> {
    config.validate()?;
    let dist = distances_for(config, data)?;
    run_chain_with_distances(config, data, dist, rng)
}

pub fn run_chain_with_distances(
    config: &ModelConfig,
    data: &Dataset,
    dist: Arc<DistanceMatrix>,
    rng: RngStream,
) -> Result<PosteriorDraws> {
    let started = Instant::now();
    let seed = rng.seed();
    let mut chain = Chain::new(config, data, dist, rng)?;
    let mut draws = PosteriorDraws::with_capacity(config.clone(), data.n(), data.p(), seed);
    for sweep in 1..=config.n_iter {
        chain.sweep()?;
        if sweep % config.thin == 0 && sweep / config.thin > config.burn_in {
            let ll = pointwise_loglik(chain.state(), data);
            if let Some(i) = ll.iter().position(|v| !v.is_finite()) {
                return Err(Error::ChainAbort {
                    sweep,
                    block: "loglik",
                    source: Box::new(Error::InvalidDraws(format!(
                        "non-finite log-likelihood at location {i}"
                    ))),
                });
            }
            draws.push(chain.state(), &ll);
        }
    }
    draws.diagnostics = ChainDiagnostics {
        phi_accepted: chain.tuner().accepted,
        phi_proposed: chain.tuner().proposed,
        phi_step: chain.tuner().step,
        v_clamps: chain.v_clamps(),
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    Ok(draws)
}

/// Independent chains on disjoint streams split from `master`.
pub fn run_chains(
    config: &ModelConfig,
    data: &Dataset,
    chains: usize,
    master: &RngStream,
) -> Result<Vec<PosteriorDraws>> {
    let dist = distances_for(config, data)?;
    (0..chains)
        .into_par_iter()
        .map(|k| run_chain_with_distances(config, data, dist.clone(), master.split(k as u64)))
        .collect()
}
