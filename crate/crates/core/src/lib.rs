//! Bayesian clustering of multivariate binary data.
//!
//! The model is a finite mixture of products of independent Bernoulli
//! distributions with `K` components. Mixture weights get an asymmetric
//! Dirichlet prior whose first `U` coordinates share a concentration `alpha1`
//! and whose remaining `K - U` coordinates share a small `alpha2`, so that `U`
//! acts as a soft upper bound on the number of occupied components. `alpha1`
//! receives a penalized-complexity prior whose rate is calibrated from a tail
//! probability statement `P(K+ < U) = tp`.
//!
//! Modules:
//! - [`data`]: datasets, partitions, factor designs, binarization, file readers.
//! - [`elicit`]: Dirichlet KL divergence, the PC prior on `alpha1`, induced
//!   `K+` priors and rate calibration.
//! - [`sampler`]: the annealed Gibbs / Metropolis sampler.
//! - [`summary`]: co-clustering, minVI point estimates, ARI, CHIPS.
//! - [`harness`]: simulation studies, the digits pipeline and plot tables.

pub mod config;
pub mod data;
pub mod dist;
pub mod elicit;
pub mod error;
pub mod harness;
pub mod rng;
pub mod sampler;
pub mod summary;

pub use config::{PriorSpec, SamplerSpec};
pub use data::{BinaryDataset, CovariateDesign, Partition};
pub use error::{Error, Result};
