//! The Metropolis-within-Gibbs sampler: configuration, chain state, the
//! variance and spatial-dependence updates, and stored output.

mod chain;
mod config;
mod output;
mod updates;

pub use chain::{run_chain, run_chains, run_conditional_on_partition, Chain, ModelState};
pub use config::{ChainConfig, InitScheme, Priors, TARGET_ACCEPTANCE};
pub use output::ChainOutput;
pub use updates::{
    fitted_values, rho_log_target, rho_statistics, sigma2_posterior, tau2_posterior, update_rho, update_sigma2,
    update_tau2, RhoState,
};
