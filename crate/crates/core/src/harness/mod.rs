//! End-to-end drivers: synthetic data, replicated simulation studies, the
//! handwritten-digits pipeline and file writers for every artifact.

mod digits;
pub mod output;
mod study;

pub use digits::{digits_pipeline, DigitsConfig, DigitsResult};
pub use study::{
    arm_grid, run_study, Arm, MetricsRecord, StudyConfig, DESK_ITERS, PAPER_ITERS,
};

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::config::PriorSpec;
use crate::data::{canonicalize_partition, BinaryDataset, Partition};
use crate::elicit::{calibrate_lambda, Calibration};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, stream};

/// Monte Carlo size and tolerance used when a run calibrates the PC rate on
/// the fly.
pub const CALIBRATION_N_MC: usize = 20_000;
pub const CALIBRATION_TOL: f64 = 0.02;

/// Generator for the success probabilities of simulated clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// `pi ~ Uniform(0, 1)`.
    Uniform,
    /// `pi ~ Beta(1/3, 1)`: mostly small probabilities, so clusters differ
    /// in few variables.
    Sparse,
}

impl Scenario {
    pub fn from_index(i: u32) -> Result<Self> {
        match i {
            1 => Ok(Self::Uniform),
            2 => Ok(Self::Sparse),
            _ => Err(Error::InvalidConfig(format!("scenario must be 1 or 2, got {i}"))),
        }
    }

    pub fn index(self) -> u32 {
        match self {
            Self::Uniform => 1,
            Self::Sparse => 2,
        }
    }

    fn draw_pi(self, rng: &mut impl Rng) -> f64 {
        match self {
            Self::Uniform => rng.random::<f64>(),
            Self::Sparse => Beta::new(1.0 / 3.0, 1.0)
                .expect("valid shape")
                .sample(rng),
        }
    }
}

/// A simulated dataset with its generating partition and probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulated {
    pub data: BinaryDataset,
    pub truth: Partition,
    /// `kplus_true x P`, rows indexed by generating label.
    pub pi: Vec<Vec<f64>>,
}

/// Draw `pi` for `kplus_true` clusters, uniform labels and Bernoulli data.
pub fn simulate_scenario(
    scenario: Scenario,
    n: usize,
    p: usize,
    kplus_true: usize,
    seed: u64,
) -> Result<Simulated> {
    if kplus_true == 0 || n == 0 || kplus_true > n {
        return Err(Error::InvalidConfig(format!(
            "need 1 <= kplus_true <= n, got kplus_true = {kplus_true}, n = {n}"
        )));
    }
    let mut params = rng_from_seed(derive_seed(seed, &[stream::SIM_PARAMS]));
    let pi: Vec<Vec<f64>> = (0..kplus_true)
        .map(|_| (0..p).map(|_| scenario.draw_pi(&mut params)).collect())
        .collect();
    let mut rng = rng_from_seed(derive_seed(seed, &[stream::SIM_DATA]));
    let z: Vec<usize> = (0..n).map(|_| rng.random_range(0..kplus_true)).collect();
    let rows: Vec<Vec<i64>> = z
        .iter()
        .map(|&k| {
            pi[k]
                .iter()
                .map(|&q| i64::from(rng.random::<f64>() < q))
                .collect()
        })
        .collect();
    let data = BinaryDataset::from_rows(&rows)?;
    let labels: Vec<usize> = z.iter().map(|k| k + 1).collect();
    Ok(Simulated {
        data,
        truth: canonicalize_partition(&labels),
        pi,
    })
}

/// Calibrate the PC rate for an asymmetric prior on `n` units.
pub fn calibrate(n: usize, prior: &PriorSpec, seed: u64) -> Result<Calibration> {
    calibrate_lambda(
        n,
        prior,
        CALIBRATION_N_MC,
        CALIBRATION_TOL,
        derive_seed(seed, &[stream::ELICIT]),
    )
}
