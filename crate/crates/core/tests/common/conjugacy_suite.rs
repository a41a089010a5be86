//! Grid-integration checks of every Gibbs full conditional, returned as
//! results so both the test target and the acceptance run can use them.

use geodpm::model::{
    alpha_conditional, beta_conditional, mu_b_conditional, stick_conditionals, tau_b_conditional,
    tau_w_conditional, tau_y_conditional, w_conditional, z_log_weights, ChainState, GammaParams,
    GammaPrior, NormalPrior, Scheme,
};
use statrs::distribution::{Beta, Continuous, Gamma};

use super::*;

pub const KL_MAX: f64 = 1e-3;
const GRID: usize = 4000;
const GRID_2D: usize = 300;

fn check(label: &str, log_p: &[f64], log_q: &[f64], edges: &[usize]) -> Check {
    let kl = grid_kl(log_p, log_q);
    let edge = edge_mass(log_p, edges);
    Check {
        name: label.to_string(),
        passed: kl <= KL_MAX && edge < 1e-6,
        detail: format!("KL = {kl:.2e}, edge mass = {edge:.1e}"),
    }
}

/// 1-D check of a scalar parameter set through `set`; `full_support` skips
/// the coverage check when the grid already spans the whole support.
fn scalar_check(
    label: &str,
    oracle: &Oracle,
    base: &ChainState,
    grid: &[f64],
    set: impl Fn(&mut ChainState, f64),
    log_q: impl Fn(f64) -> f64,
    full_support: bool,
) -> Check {
    let data = tiny_data();
    let log_p: Vec<f64> = grid
        .iter()
        .map(|&v| {
            let mut s = base.clone();
            set(&mut s, v);
            oracle.log_joint(&s, &data)
        })
        .collect();
    let lq: Vec<f64> = grid.iter().map(|&v| log_q(v)).collect();
    let edges = if full_support { vec![] } else { vec![0, grid.len() - 1] };
    check(label, &log_p, &lq, &edges)
}

pub fn gamma_grid(g: &GammaParams) -> Vec<f64> {
    let sd = g.shape.sqrt() / g.rate;
    linspace(1e-9, g.mean() + 14.0 * sd, GRID)
}

pub fn gamma_ln(g: &GammaParams, x: f64) -> f64 {
    Gamma::new(g.shape, g.rate).unwrap().ln_pdf(x)
}

pub fn labels() -> Vec<Check> {
    let data = tiny_data();
    let mut out = Vec::new();
    for scheme in Scheme::ALL {
        let oracle = Oracle::tiny(scheme);
        let s = tiny_state();
        for i in 0..data.n() {
            let log_p: Vec<f64> = (0..s.m())
                .map(|c| {
                    let mut t = s.clone();
                    t.z[i] = c;
                    oracle.log_joint(&t, &data)
                })
                .collect();
            out.push(check(&format!("{scheme} z_{i}"), &log_p, &z_log_weights(&s, &data, i), &[]));
        }
    }
    out
}

pub fn sticks_and_alpha() -> Vec<Check> {
    let oracle = Oracle::tiny(Scheme::Exponential);
    let s = tiny_state();
    let grid = linspace(0.0, 1.0, GRID);
    let mut out = Vec::new();
    for (c, (a, b)) in stick_conditionals(&s).into_iter().enumerate() {
        let beta = Beta::new(a, b).unwrap();
        out.push(scalar_check(
            &format!("V_{c}"),
            &oracle,
            &s,
            &grid,
            |st, v| {
                st.v[c] = v;
                st.refresh_weights();
            },
            |v| beta.ln_pdf(v),
            true,
        ));
    }
    let g = alpha_conditional(&s, &GammaPrior::default());
    out.push(scalar_check("alpha", &oracle, &s, &gamma_grid(&g), |st, a| st.alpha = a, |a| gamma_ln(&g, a), false));
    out
}

/// 2-D grid over a pair of coordinates of a Gaussian conditional.
fn pair_grid(
    label: &str,
    mean: [f64; 2],
    sd: [f64; 2],
    log_p: impl Fn(f64, f64) -> f64,
    log_q: impl Fn(f64, f64) -> f64,
) -> Check {
    let ga = linspace(mean[0] - 9.0 * sd[0], mean[0] + 9.0 * sd[0], GRID_2D);
    let gb = linspace(mean[1] - 9.0 * sd[1], mean[1] + 9.0 * sd[1], GRID_2D);
    let (mut lp, mut lq, mut edges) = (Vec::new(), Vec::new(), Vec::new());
    for (a, &va) in ga.iter().enumerate() {
        for (b, &vb) in gb.iter().enumerate() {
            if a == 0 || b == 0 || a == GRID_2D - 1 || b == GRID_2D - 1 {
                edges.push(lp.len());
            }
            lp.push(log_p(va, vb));
            lq.push(log_q(va, vb));
        }
    }
    check(label, &lp, &lq, &edges)
}

/// Coefficient rows, including an empty cluster drawn from the base measure.
pub fn coefficients() -> Vec<Check> {
    let data = tiny_data();
    let oracle = Oracle::tiny(Scheme::Exponential);
    let s = tiny_state();
    (0..s.m())
        .map(|c| {
            let g = beta_conditional(&s, &data, c).unwrap();
            pair_grid(
                &format!("beta_{c}"),
                [g.mean[0], g.mean[1]],
                [g.variance(0).sqrt(), g.variance(1).sqrt()],
                |a, b| {
                    let mut t = s.clone();
                    t.beta.row_mut(c).copy_from_slice(&[a, b]);
                    oracle.log_joint(&t, &data)
                },
                |a, b| conditional_ln(&g, &[a, b]),
            )
        })
        .collect()
}

pub fn base_measure() -> Vec<Check> {
    let oracle = Oracle::tiny(Scheme::Exponential);
    let s = tiny_state();
    let mut out = Vec::new();
    for (j, (mean, var)) in mu_b_conditional(&s, &NormalPrior::default()).into_iter().enumerate() {
        let sd = var.sqrt();
        let grid = linspace(mean - 12.0 * sd, mean + 12.0 * sd, GRID);
        out.push(scalar_check(
            &format!("mu_b_{j}"),
            &oracle,
            &s,
            &grid,
            |st, v| st.mu_b[j] = v,
            |v| -0.5 * (v - mean).powi(2) / var,
            false,
        ));
    }
    let g = tau_b_conditional(&s, &GammaPrior::default());
    out.push(scalar_check("tau_b", &oracle, &s, &gamma_grid(&g), |st, v| st.tau_b = v, |v| gamma_ln(&g, v), false));
    out
}

/// Every pair `(W_i, W_j)` given the remaining coordinates, plus `τ_w`.
pub fn spatial() -> Vec<Check> {
    let data = tiny_data();
    let mut out = Vec::new();
    for scheme in Scheme::ALL {
        let oracle = Oracle::tiny(scheme);
        let s = tiny_state();
        let kernel = tiny_kernel(scheme, s.phi);
        let g = w_conditional(&s, &data, &kernel).unwrap();
        let q = g.precision_matrix();
        let n = data.n();
        for i in 0..n {
            for j in i + 1..n {
                let idx = [i, j];
                let sub = nalgebra::DMatrix::from_fn(2, 2, |a, b| q[(idx[a], idx[b])]);
                let shift: Vec<f64> = idx
                    .iter()
                    .map(|&a| {
                        (0..n)
                            .filter(|k| !idx.contains(k))
                            .map(|k| q[(a, k)] * (s.w[k] - g.mean[k]))
                            .sum()
                    })
                    .collect();
                let sub_inv = sub.try_inverse().unwrap();
                let mean: Vec<f64> = (0..2)
                    .map(|a| g.mean[idx[a]] - (0..2).map(|b| sub_inv[(a, b)] * shift[b]).sum::<f64>())
                    .collect();
                let with = |a: f64, b: f64| {
                    let mut t = s.clone();
                    t.w[i] = a;
                    t.w[j] = b;
                    t
                };
                out.push(pair_grid(
                    &format!("{scheme} W_({i},{j})"),
                    [mean[0], mean[1]],
                    [sub_inv[(0, 0)].sqrt(), sub_inv[(1, 1)].sqrt()],
                    |a, b| oracle.log_joint(&with(a, b), &data),
                    |a, b| conditional_ln(&g, &with(a, b).w),
                ));
            }
        }
        let gw = tau_w_conditional(&s, &kernel, &GammaPrior::default()).unwrap();
        out.push(scalar_check(
            &format!("{scheme} tau_w"),
            &oracle,
            &s,
            &gamma_grid(&gw),
            |st, v| st.tau_w = v,
            |v| gamma_ln(&gw, v),
            false,
        ));
    }
    out
}

pub fn noise_precision() -> Vec<Check> {
    let data = tiny_data();
    let oracle = Oracle::tiny(Scheme::Exponential);
    let s = tiny_state();
    let g = tau_y_conditional(&s, &data, &GammaPrior::default());
    vec![scalar_check("tau_y", &oracle, &s, &gamma_grid(&g), |st, v| st.tau_y = v, |v| gamma_ln(&g, v), false)]
}

pub fn all() -> Vec<Check> {
    let mut out = labels();
    out.extend(sticks_and_alpha());
    out.extend(coefficients());
    out.extend(base_measure());
    out.extend(spatial());
    out.extend(noise_precision());
    out
}
