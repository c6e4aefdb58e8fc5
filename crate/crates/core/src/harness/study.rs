use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::{calibrate, simulate_scenario, Scenario, Simulated};
use crate::config::{PriorSpec, SamplerSpec};
use crate::elicit::PCPrior;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};
use crate::sampler::run_chain;
use crate::summary::{ari, kplus_posterior, minvi_partition, DEFAULT_RESTARTS};

/// Iterations per fit in quick runs and in the full protocol.
pub const DESK_ITERS: usize = 2_000;
pub const PAPER_ITERS: usize = 10_000;

/// One competing method in a study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Arm {
    Asymmetric { k: usize, u: usize, alpha2: f64, tp: f64 },
    Symmetric { k: usize, alpha: f64 },
    /// Returns the generating partition; a self-check of the harness.
    Oracle,
}

impl Arm {
    pub fn name(&self) -> String {
        match self {
            Arm::Asymmetric { u, .. } => format!("aFMM_U{u}"),
            Arm::Symmetric { alpha, .. } => format!("sFMM_alpha{alpha}"),
            Arm::Oracle => "oracle".into(),
        }
    }

    fn prior(&self) -> Option<PriorSpec> {
        match *self {
            Arm::Asymmetric { k, u, alpha2, tp } => Some(PriorSpec {
                alpha2,
                tp,
                ..PriorSpec::new(k, u)
            }),
            Arm::Symmetric { k, alpha } => Some(PriorSpec::symmetric(k, alpha)),
            Arm::Oracle => None,
        }
    }
}

/// Asymmetric arms for `U in {2, 5, 10}` and symmetric arms for
/// `alpha in {0.01, 0.1, 0.5}`, all with `K = k`.
pub fn arm_grid(k: usize) -> Vec<Arm> {
    let mut arms: Vec<Arm> = [2, 5, 10]
        .into_iter()
        .map(|u| Arm::Asymmetric { k, u, alpha2: 0.01, tp: 0.5 })
        .collect();
    arms.extend([0.01, 0.1, 0.5].into_iter().map(|alpha| Arm::Symmetric { k, alpha }));
    arms
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub p: usize,
    pub kplus_true: usize,
    pub n_datasets: usize,
    pub arms: Vec<Arm>,
    pub n_iter: usize,
    pub seed: u64,
    pub minvi_restarts: usize,
}

impl StudyConfig {
    pub fn new(scenario: Scenario, p: usize, kplus_true: usize, seed: u64) -> Self {
        Self {
            scenario,
            n: 100,
            p,
            kplus_true,
            n_datasets: 50,
            arms: arm_grid(15),
            n_iter: DESK_ITERS,
            seed,
            minvi_restarts: DEFAULT_RESTARTS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.kplus_true == 0 || self.n_datasets == 0 || self.n_iter == 0 {
            return Err(Error::InvalidConfig("study counts must be positive".into()));
        }
        if self.kplus_true > self.n {
            return Err(Error::InvalidConfig("kplus_true exceeds n".into()));
        }
        if self.arms.is_empty() {
            return Err(Error::InvalidConfig("a study needs at least one arm".into()));
        }
        Ok(())
    }
}

/// Outcome of one (dataset, arm) cell. Failed cells keep their identifiers
/// and carry the error message instead of metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub scenario: u32,
    pub n: usize,
    pub p: usize,
    pub kplus_true: usize,
    pub dataset_index: usize,
    pub arm: String,
    pub ari: Option<f64>,
    pub kplus_estimate: Option<usize>,
    /// Estimated minus generating number of clusters.
    pub kplus_bias: Option<i64>,
    /// Wall time of fitting plus summarizing.
    pub runtime_seconds: f64,
    pub error: Option<String>,
}

fn fit_cell(
    cfg: &StudyConfig,
    sim: &Simulated,
    arm: &Arm,
    pc: Option<&PCPrior>,
    seed: u64,
) -> Result<(f64, usize)> {
    let truth_k = sim.truth.n_clusters();
    let Some(prior) = arm.prior() else {
        return Ok((ari(&sim.truth, &sim.truth)?, truth_k));
    };
    let spec = SamplerSpec::with_iters(cfg.n_iter, seed);
    let chain = run_chain(&sim.data, &prior, &spec, pc, None)?;
    let estimate = minvi_partition(&chain.z_samples, cfg.minvi_restarts, seed)?;
    let kplus = kplus_posterior(&chain.z_samples, prior.k)?.mode;
    Ok((ari(&estimate, &sim.truth)?, kplus))
}

/// Simulate `n_datasets` replicates and fit every arm to each. Cells run in
/// parallel with seeds derived from `(seed, dataset, arm)`; rows come back
/// ordered by dataset, then arm.
pub fn run_study(cfg: &StudyConfig) -> Result<Vec<MetricsRecord>> {
    cfg.validate()?;
    let sims: Vec<Result<Simulated>> = (0..cfg.n_datasets)
        .into_par_iter()
        .map(|d| {
            simulate_scenario(
                cfg.scenario,
                cfg.n,
                cfg.p,
                cfg.kplus_true,
                derive_seed(cfg.seed, &[d as u64]),
            )
        })
        .collect();
    let pcs: Vec<Option<std::result::Result<PCPrior, String>>> = cfg
        .arms
        .par_iter()
        .enumerate()
        .map(|(a, arm)| match arm {
            Arm::Asymmetric { .. } => Some(
                calibrate(cfg.n, &arm.prior().unwrap(), derive_seed(cfg.seed, &[stream::STUDY_ARM, a as u64]))
                    .map(|c| c.prior)
                    .map_err(|e| e.to_string()),
            ),
            _ => None,
        })
        .collect();

    let cells: Vec<(usize, usize)> = (0..cfg.n_datasets)
        .flat_map(|d| (0..cfg.arms.len()).map(move |a| (d, a)))
        .collect();
    // indexed collect keeps cell order whatever the worker count
    let records: Vec<MetricsRecord> = cells
        .into_par_iter()
        .map(|(d, a)| {
            let arm = &cfg.arms[a];
            let start = Instant::now();
            let outcome = match (&sims[d], &pcs[a]) {
                (Err(e), _) => Err(e.to_string()),
                (_, Some(Err(e))) => Err(format!("calibration failed: {e}")),
                (Ok(sim), pc) => {
                    let pc = pc.as_ref().and_then(|r| r.as_ref().ok());
                    let seed = derive_seed(cfg.seed, &[stream::STUDY_ARM, d as u64, a as u64]);
                    fit_cell(cfg, sim, arm, pc, seed)
                        .map(|(ari, k)| (ari, k, sim.truth.n_clusters()))
                        .map_err(|e| e.to_string())
                }
            };
            let runtime_seconds = start.elapsed().as_secs_f64();
            let mut record = MetricsRecord {
                scenario: cfg.scenario.index(),
                n: cfg.n,
                p: cfg.p,
                kplus_true: cfg.kplus_true,
                dataset_index: d,
                arm: arm.name(),
                ari: None,
                kplus_estimate: None,
                kplus_bias: None,
                runtime_seconds,
                error: None,
            };
            match outcome {
                Ok((ari, k, truth_k)) => {
                    record.ari = Some(ari);
                    record.kplus_estimate = Some(k);
                    record.kplus_bias = Some(k as i64 - truth_k as i64);
                }
                Err(e) => record.error = Some(e),
            }
            record
        })
        .collect();
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_arm_is_perfect() {
        for scenario in [Scenario::Uniform, Scenario::Sparse] {
            let cfg = StudyConfig {
                n_datasets: 3,
                arms: vec![Arm::Oracle],
                ..StudyConfig::new(scenario, 10, 4, 1)
            };
            let rows = run_study(&cfg).unwrap();
            assert_eq!(rows.len(), 3);
            for r in rows {
                assert_eq!(r.ari, Some(1.0));
                assert_eq!(r.kplus_bias, Some(0));
                assert!(r.error.is_none());
            }
        }
    }

    #[test]
    fn arm_grid_names() {
        let names: Vec<String> = arm_grid(15).iter().map(Arm::name).collect();
        assert_eq!(
            names,
            ["aFMM_U2", "aFMM_U5", "aFMM_U10", "sFMM_alpha0.01", "sFMM_alpha0.1", "sFMM_alpha0.5"]
        );
    }

    #[test]
    fn failing_arm_yields_error_rows() {
        let cfg = StudyConfig {
            n: 20,
            n_datasets: 2,
            n_iter: 20,
            arms: vec![Arm::Symmetric { k: 3, alpha: -1.0 }, Arm::Oracle],
            ..StudyConfig::new(Scenario::Uniform, 5, 2, 4)
        };
        let rows = run_study(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows[0].error.is_some() && rows[0].ari.is_none());
        assert_eq!(rows[1].arm, "oracle");
        assert!(rows[1].error.is_none());
    }
}
