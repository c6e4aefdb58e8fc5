//! Full-conditional and Metropolis updates of the chain state.
//!
//! Component indices are 0-based inside the sampler; output files use
//! 1-based labels.

use log::warn;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::config::{PriorSpec, SamplerSpec};
use crate::data::{BinaryDataset, CovariateDesign};
use crate::dist::{
    categorical_from_cumulative, log_dirichlet_draw, log_gamma_draw, log_logistic_pair,
    logistic, normal_log_density, weights_from_logs,
};
use crate::elicit::PCPrior;

/// Success probabilities are clamped to `[EPS, 1 - EPS]` inside logs.
pub const PROB_EPS: f64 = 1e-12;

/// Work per allocation sweep above which rows are scored in parallel.
const PARALLEL_WORK: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    /// Component of each unit, `0..K`.
    pub z: Vec<usize>,
    pub omega: Vec<f64>,
    pub log_omega: Vec<f64>,
    /// Row-major `K x P`.
    pub pi: Vec<f64>,
    pub alpha1: f64,
    /// Row-major `K x q` free regression coefficients, covariate model only.
    pub beta: Option<Vec<f64>>,
    pub iteration: usize,
    pub temperature: f64,
}

impl ChainState {
    pub fn k(&self) -> usize {
        self.omega.len()
    }

    pub fn pi_row(&self, k: usize) -> &[f64] {
        let p = self.pi.len() / self.k();
        &self.pi[k * p..(k + 1) * p]
    }

    pub fn set_log_omega(&mut self, log_omega: Vec<f64>) {
        self.omega = weights_from_logs(&log_omega);
        self.log_omega = log_omega;
    }

    /// Sizes of the `K` components under the current allocation.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k()];
        for &k in &self.z {
            counts[k] += 1;
        }
        counts
    }
}

/// Per-component sizes and per-column success counts.
#[derive(Debug, Clone)]
pub struct ClusterStats {
    pub counts: Vec<usize>,
    /// Row-major `K x P`.
    pub sums: Vec<u32>,
    pub p: usize,
}

impl ClusterStats {
    pub fn new(data: &BinaryDataset, z: &[usize], k: usize) -> Self {
        let p = data.p();
        let mut counts = vec![0; k];
        let mut sums = vec![0u32; k * p];
        for (i, &c) in z.iter().enumerate() {
            counts[c] += 1;
            for (s, &y) in sums[c * p..(c + 1) * p].iter_mut().zip(data.row(i)) {
                *s += u32::from(y);
            }
        }
        Self { counts, sums, p }
    }

    pub fn sums_of(&self, k: usize) -> &[u32] {
        &self.sums[k * self.p..(k + 1) * self.p]
    }
}

/// Unnormalized allocation log-probabilities
/// `log omega_k + sum_p [y log pi_kp + (1 - y) log(1 - pi_kp)]`,
/// row-major `N x K`.
pub fn allocation_log_weights(data: &BinaryDataset, state: &ChainState) -> Vec<f64> {
    let k = state.k();
    let (base, logit) = allocation_terms(state, data.p());
    let mut out = vec![0.0; data.n() * k];
    for (i, row) in out.chunks_mut(k).enumerate() {
        score_row(data.row(i), &base, &logit, row);
    }
    out
}

/// `base_k = log omega_k + sum_p log(1 - pi_kp)` and
/// `logit_kp = log pi_kp - log(1 - pi_kp)`, with clamped probabilities.
fn allocation_terms(state: &ChainState, p: usize) -> (Vec<f64>, Vec<f64>) {
    let k = state.k();
    let mut base = state.log_omega.clone();
    let mut logit = vec![0.0; k * p];
    for c in 0..k {
        for (j, &pi) in state.pi_row(c).iter().enumerate() {
            let pi = pi.clamp(PROB_EPS, 1.0 - PROB_EPS);
            let (lp, lq) = (pi.ln(), (1.0 - pi).ln());
            base[c] += lq;
            logit[c * p + j] = lp - lq;
        }
    }
    (base, logit)
}

#[inline]
fn score_row(y: &[u8], base: &[f64], logit: &[f64], out: &mut [f64]) {
    let p = y.len();
    for (c, o) in out.iter_mut().enumerate() {
        let row = &logit[c * p..(c + 1) * p];
        *o = base[c]
            + y.iter()
                .zip(row)
                .filter(|(y, _)| **y == 1)
                .map(|(_, l)| l)
                .sum::<f64>();
    }
}

/// Draw allocations from the tempered full conditional
/// `p(z_i = k | ...)^(1/T)` without relabelling.
///
/// One uniform per unit is drawn up front in row order, so the stream used is
/// the same whether rows are scored serially or in parallel.
pub fn sample_allocations<R: Rng + ?Sized>(
    data: &BinaryDataset,
    state: &ChainState,
    temperature: f64,
    rng: &mut R,
) -> Vec<usize> {
    let (n, k) = (data.n(), state.k());
    let uniforms: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let (base, logit) = allocation_terms(state, data.p());
    let draw = |i: usize| -> usize {
        let mut w = vec![0.0; k];
        score_row(data.row(i), &base, &logit, &mut w);
        if temperature != 1.0 {
            for x in &mut w {
                *x /= temperature;
            }
        }
        let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut acc = 0.0;
        for x in &mut w {
            acc += (*x - max).exp();
            *x = acc;
        }
        categorical_from_cumulative(&w, uniforms[i])
    };
    if n * k * data.p().max(1) >= PARALLEL_WORK {
        (0..n).into_par_iter().map(draw).collect()
    } else {
        (0..n).map(draw).collect()
    }
}

/// Reorder components by decreasing size, ties kept in previous label order,
/// permuting `omega`, `pi` and `beta` along with the labels. Returns the new
/// index of each old component.
pub fn relabel_by_size(state: &mut ChainState) -> Vec<usize> {
    let k = state.k();
    let counts = state.counts();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&c| std::cmp::Reverse(counts[c]));
    let mut new_of_old = vec![0; k];
    for (new, &old) in order.iter().enumerate() {
        new_of_old[old] = new;
    }
    for z in &mut state.z {
        *z = new_of_old[*z];
    }
    state.omega = order.iter().map(|&c| state.omega[c]).collect();
    state.log_omega = order.iter().map(|&c| state.log_omega[c]).collect();
    state.pi = permute_rows(&state.pi, &order);
    if let Some(beta) = state.beta.as_mut() {
        *beta = permute_rows(beta, &order);
    }
    new_of_old
}

fn permute_rows(m: &[f64], order: &[usize]) -> Vec<f64> {
    let width = m.len() / order.len().max(1);
    order
        .iter()
        .flat_map(|&c| m[c * width..(c + 1) * width].iter().copied())
        .collect()
}

/// Tempered allocation update followed by size-ordered relabelling.
pub fn update_allocations<R: Rng + ?Sized>(
    data: &BinaryDataset,
    state: &mut ChainState,
    temperature: f64,
    rng: &mut R,
) -> Vec<usize> {
    state.z = sample_allocations(data, state, temperature, rng);
    state.temperature = temperature;
    relabel_by_size(state)
}

/// Draw `log(omega)` from `Dirichlet(prior concentrations + counts)`.
pub fn update_weights<R: Rng + ?Sized>(
    counts: &[usize],
    prior: &PriorSpec,
    alpha1: f64,
    rng: &mut R,
) -> Vec<f64> {
    let conc: Vec<f64> = prior
        .concentrations(alpha1)
        .iter()
        .zip(counts)
        .map(|(a, &n)| a + n as f64)
        .collect();
    log_dirichlet_draw(&conc, rng)
}

/// Draw a Beta(a, b) variate through two log-Gamma draws.
pub fn beta_draw<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let la = log_gamma_draw(a, rng);
    let lb = log_gamma_draw(b, rng);
    logistic(la - lb)
}

/// Conjugate update `pi_kp ~ Beta(a + s_kp, b + n_k - s_kp)`; empty
/// components draw from the prior.
pub fn update_probs<R: Rng + ?Sized>(stats: &ClusterStats, a: f64, b: f64, rng: &mut R) -> Vec<f64> {
    let k = stats.counts.len();
    let mut pi = Vec::with_capacity(k * stats.p);
    for c in 0..k {
        let n = stats.counts[c] as f64;
        for &s in stats.sums_of(c) {
            let s = f64::from(s);
            pi.push(beta_draw(a + s, b + n - s, rng));
        }
    }
    pi
}

/// Unnormalized log full conditional of `alpha1`:
/// `lgamma(U a) - U lgamma(a) + (a - 1) sum_{k <= U} log omega_k + log prior(a)`,
/// with `lgamma(U a + (K - U) alpha2)` in place of `lgamma(U a)` when `exact`.
pub fn alpha1_log_target(
    a: f64,
    log_omega: &[f64],
    prior: &PriorSpec,
    pc: &PCPrior,
    exact: bool,
) -> f64 {
    let u = prior.u as f64;
    let total = if exact {
        u * a + (prior.k - prior.u) as f64 * prior.alpha2
    } else {
        u * a
    };
    let sum_log: f64 = log_omega[..prior.u].iter().sum();
    ln_gamma(total) - u * ln_gamma(a) + (a - 1.0) * sum_log + pc.density_at(a).ln()
}

/// Random-walk Metropolis step for `alpha1`. Proposals outside
/// `(floor, U]` are rejected without drawing the acceptance uniform.
/// Returns whether the proposal was accepted.
pub fn update_alpha1<R: Rng + ?Sized>(
    state: &mut ChainState,
    pc: &PCPrior,
    prior: &PriorSpec,
    spec: &SamplerSpec,
    rng: &mut R,
) -> bool {
    let step = Normal::new(0.0, spec.proposal_sd_alpha1).expect("positive sd");
    let proposal = state.alpha1 + step.sample(rng);
    if !(proposal > spec.alpha1_floor && proposal <= prior.u as f64) {
        return false;
    }
    let exact = spec.exact_alpha1_lik;
    let current = alpha1_log_target(state.alpha1, &state.log_omega, prior, pc, exact);
    let proposed = alpha1_log_target(proposal, &state.log_omega, prior, pc, exact);
    if proposed.is_nan() || proposed == f64::INFINITY {
        warn!("non-finite alpha1 log posterior at {proposal}; proposal rejected");
        return false;
    }
    let u: f64 = rng.random();
    if u.ln() < proposed - current {
        state.alpha1 = proposal;
        true
    } else {
        false
    }
}

/// Binomial log-likelihood of one component's sufficient statistics at
/// linear predictors `eta`.
fn component_log_lik(n: f64, sums: &[u32], eta: &[f64]) -> f64 {
    sums.iter()
        .zip(eta)
        .map(|(&s, &e)| {
            let (lp, lq) = log_logistic_pair(e);
            let s = f64::from(s);
            s * lp + (n - s) * lq
        })
        .sum()
}

/// Coordinate-wise random-walk Metropolis updates of the regression
/// coefficients of every occupied component; empty components redraw their
/// coefficients from the `Normal(0, beta_var)` prior. Updates `pi` to the
/// implied probabilities. Returns `(accepted, proposed)`.
pub fn update_betas<R: Rng + ?Sized>(
    stats: &ClusterStats,
    design: &CovariateDesign,
    state: &mut ChainState,
    beta_var: f64,
    proposal_sd: f64,
    rng: &mut R,
) -> (usize, usize) {
    let k = state.k();
    let (p, q) = (design.p(), design.q());
    let beta = state.beta.as_mut().expect("covariate model has coefficients");
    let step = Normal::new(0.0, proposal_sd).expect("positive sd");
    let prior_draw = Normal::new(0.0, beta_var.sqrt()).expect("positive variance");
    let (mut accepted, mut proposed) = (0, 0);

    for c in 0..k {
        let coef = &mut beta[c * q..(c + 1) * q];
        if stats.counts[c] == 0 {
            for b in coef.iter_mut() {
                *b = prior_draw.sample(rng);
            }
        } else {
            let n = stats.counts[c] as f64;
            let sums = stats.sums_of(c);
            let mut eta = design.linear_predictor(coef);
            let mut log_lik = component_log_lik(n, sums, &eta);
            let mut eta_new = vec![0.0; p];
            for j in 0..q {
                proposed += 1;
                let delta = step.sample(rng);
                for (v, e) in eta_new.iter_mut().enumerate() {
                    *e = eta[v] + delta * design.row(v)[j];
                }
                let new_lik = component_log_lik(n, sums, &eta_new);
                let log_ratio = new_lik - log_lik
                    + normal_log_density(coef[j] + delta, 0.0, beta_var)
                    - normal_log_density(coef[j], 0.0, beta_var);
                let u: f64 = rng.random();
                if u.ln() < log_ratio {
                    coef[j] += delta;
                    std::mem::swap(&mut eta, &mut eta_new);
                    log_lik = new_lik;
                    accepted += 1;
                }
            }
        }
        let eta = design.linear_predictor(coef);
        for (slot, e) in state.pi[c * p..(c + 1) * p].iter_mut().zip(eta) {
            *slot = logistic(e);
        }
    }
    (accepted, proposed)
}
