//! Annealed Gibbs / Metropolis sampler for sparse Bernoulli mixtures.

mod chain;
mod kmodes;
mod schedule;
pub mod updates;

pub use chain::{run_chain, run_chains, AcceptanceRates, ChainOutput};
pub use kmodes::kmodes_init;
pub use schedule::{temperature_schedule, TemperatureSchedule};
pub use updates::{
    alpha1_log_target, relabel_by_size, sample_allocations, update_allocations, update_alpha1,
    update_betas, update_probs, update_weights, ChainState, ClusterStats,
};
