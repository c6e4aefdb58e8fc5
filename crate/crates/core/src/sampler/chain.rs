use log::warn;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use super::kmodes::kmodes_init;
use super::schedule::temperature_schedule;
use super::updates::{
    beta_draw, update_allocations, update_alpha1, update_betas, update_probs, update_weights,
    ChainState, ClusterStats,
};
use crate::config::{PriorSpec, SamplerSpec};
use crate::data::{BinaryDataset, CovariateDesign};
use crate::dist::{log_dirichlet_draw, logistic};
use crate::elicit::PCPrior;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, stream};

const KMODES_MAX_ITER: usize = 100;

/// Acceptance band outside which the `alpha1` kernel is reported as poorly
/// tuned.
const ALPHA1_ACCEPTANCE_BAND: (f64, f64) = (0.1, 0.7);

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct AcceptanceRates {
    pub alpha1: Option<f64>,
    pub beta: Option<f64>,
}

/// Retained draws of one chain.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub n: usize,
    pub k: usize,
    pub p: usize,
    /// Number of free regression coefficients in the covariate model.
    pub q: Option<usize>,
    /// `B x N`, 1-based component labels after size ordering.
    pub z_samples: Vec<Vec<usize>>,
    /// Row-major `B x K x P`.
    pub pi_samples: Vec<f64>,
    /// `B x K`.
    pub omega_samples: Vec<Vec<f64>>,
    pub alpha1_trace: Vec<f64>,
    /// Row-major `B x K x q`.
    pub beta_samples: Option<Vec<f64>>,
    pub retained_temperatures: Vec<f64>,
    pub acceptance: AcceptanceRates,
    pub prior: PriorSpec,
    pub spec: SamplerSpec,
}

impl ChainOutput {
    pub fn n_retained(&self) -> usize {
        self.z_samples.len()
    }

    /// Success probabilities of draw `b`, row-major `K x P`.
    pub fn pi_draw(&self, b: usize) -> &[f64] {
        let stride = self.k * self.p;
        &self.pi_samples[b * stride..(b + 1) * stride]
    }
}

/// Run one annealed chain.
///
/// Blocks are updated in the order allocations, weights, success
/// probabilities (or regression coefficients), `alpha1`. The final
/// `retain_fraction` of iterations are kept; all of them run at temperature 1.
pub fn run_chain(
    data: &BinaryDataset,
    prior: &PriorSpec,
    spec: &SamplerSpec,
    pc_prior: Option<&PCPrior>,
    design: Option<&CovariateDesign>,
) -> Result<ChainOutput> {
    prior.validate()?;
    spec.validate()?;
    let pc = match (prior.is_symmetric(), pc_prior) {
        (true, _) => None,
        (false, Some(pc)) => Some(pc),
        (false, None) => {
            return Err(Error::InvalidConfig(
                "the asymmetric model needs a prior density for alpha1".into(),
            ))
        }
    };
    if let Some(d) = design {
        if d.p() != data.p() {
            return Err(Error::DimensionMismatch(format!(
                "design has {} rows for {} variables",
                d.p(),
                data.p()
            )));
        }
    }

    let (n, p, k) = (data.n(), data.p(), prior.k);
    let mut rng = rng_from_seed(derive_seed(spec.seed, &[stream::CHAIN]));

    let init = kmodes_init(
        data,
        prior.u.min(n),
        derive_seed(spec.seed, &[stream::KMODES]),
        KMODES_MAX_ITER,
    )?;
    let alpha1 = prior.symmetric_alpha.unwrap_or(1.0);
    let log_omega = log_dirichlet_draw(&prior.concentrations(alpha1), &mut rng);
    let (pi, beta) = match design {
        Some(d) => {
            let normal = Normal::new(0.0, prior.beta_var.sqrt()).expect("positive variance");
            let beta: Vec<f64> = (0..k * d.q()).map(|_| normal.sample(&mut rng)).collect();
            let pi = beta
                .chunks(d.q())
                .flat_map(|b| d.linear_predictor(b).into_iter().map(logistic))
                .collect();
            (pi, Some(beta))
        }
        None => (
            (0..k * p).map(|_| beta_draw(prior.a, prior.b, &mut rng)).collect(),
            None,
        ),
    };
    let mut state = ChainState {
        z: init.labels().iter().map(|l| l - 1).collect(),
        omega: Vec::new(),
        log_omega: Vec::new(),
        pi,
        alpha1,
        beta,
        iteration: 0,
        temperature: spec.t1,
    };
    state.set_log_omega(log_omega);

    let schedule = temperature_schedule(spec);
    let n_keep = spec.n_retained();
    let first_kept = spec.n_iter - n_keep;
    let q = design.map(CovariateDesign::q);
    let mut out = ChainOutput {
        n,
        k,
        p,
        q,
        z_samples: Vec::with_capacity(n_keep),
        pi_samples: Vec::with_capacity(n_keep * k * p),
        omega_samples: Vec::with_capacity(n_keep),
        alpha1_trace: Vec::with_capacity(n_keep),
        beta_samples: design.map(|d| Vec::with_capacity(n_keep * k * d.q())),
        retained_temperatures: Vec::with_capacity(n_keep),
        acceptance: AcceptanceRates::default(),
        prior: prior.clone(),
        spec: spec.clone(),
    };
    let (mut alpha1_accepted, mut beta_accepted, mut beta_proposed) = (0usize, 0usize, 0usize);

    for (iter, &temperature) in schedule.temps.iter().enumerate() {
        state.iteration = iter;
        update_allocations(data, &mut state, temperature, &mut rng);

        let stats = ClusterStats::new(data, &state.z, k);
        let log_omega = update_weights(&stats.counts, prior, state.alpha1, &mut rng);
        state.set_log_omega(log_omega);

        match design {
            Some(d) => {
                let (acc, prop) = update_betas(
                    &stats,
                    d,
                    &mut state,
                    prior.beta_var,
                    spec.proposal_sd_beta,
                    &mut rng,
                );
                beta_accepted += acc;
                beta_proposed += prop;
            }
            None => state.pi = update_probs(&stats, prior.a, prior.b, &mut rng),
        }

        if let Some(pc) = pc {
            alpha1_accepted += usize::from(update_alpha1(&mut state, pc, prior, spec, &mut rng));
        }

        debug_assert!((state.omega.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        debug_assert!(state.pi.iter().all(|x| (0.0..=1.0).contains(x)));

        if iter >= first_kept {
            out.z_samples.push(state.z.iter().map(|z| z + 1).collect());
            out.pi_samples.extend_from_slice(&state.pi);
            out.omega_samples.push(state.omega.clone());
            out.alpha1_trace.push(state.alpha1);
            if let (Some(dst), Some(beta)) = (out.beta_samples.as_mut(), state.beta.as_ref()) {
                dst.extend_from_slice(beta);
            }
            out.retained_temperatures.push(temperature);
        }
    }

    if pc.is_some() {
        let rate = alpha1_accepted as f64 / spec.n_iter as f64;
        let (lo, hi) = ALPHA1_ACCEPTANCE_BAND;
        if !(lo..=hi).contains(&rate) {
            warn!("alpha1 acceptance rate {rate:.3} outside [{lo}, {hi}]; consider retuning the proposal sd");
        }
        out.acceptance.alpha1 = Some(rate);
    }
    if beta_proposed > 0 {
        out.acceptance.beta = Some(beta_accepted as f64 / beta_proposed as f64);
    }
    Ok(out)
}

/// Independent replicate chains with seeds derived from `spec.seed`. No
/// state is exchanged between chains.
pub fn run_chains(
    data: &BinaryDataset,
    prior: &PriorSpec,
    spec: &SamplerSpec,
    pc_prior: Option<&PCPrior>,
    design: Option<&CovariateDesign>,
    n_chains: usize,
) -> Result<Vec<ChainOutput>> {
    (0..n_chains)
        .into_par_iter()
        .map(|c| {
            let spec = SamplerSpec {
                seed: derive_seed(spec.seed, &[stream::CHAINS, c as u64]),
                ..spec.clone()
            };
            run_chain(data, prior, &spec, pc_prior, design)
        })
        .collect()
}
