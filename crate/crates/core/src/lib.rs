//! Bayesian spatio-temporal clustering of areal panel data.
//!
//! Units observed over time are modelled as a regression with cluster-specific
//! coefficients plus a spatio-temporal random effect whose innovations follow
//! a Leroux CAR prior and whose temporal persistence is autoregressive with
//! cluster-specific coefficients. Clusters come from a Dirichlet process,
//! sampled with a Pólya-urn allocation sweep. The crate covers the full
//! workflow: ingestion ([`data`]), band-storage precision algebra
//! ([`spatial`], [`gmrf`]), the MCMC sampler ([`dp_cluster`], [`sampler`]),
//! partition summaries ([`partition`]), model metrics ([`model_metrics`]) and a
//! synthetic-data generator ([`simulate`]).

pub mod data;
pub mod dist;
pub mod dp_cluster;
pub mod error;
pub mod gmrf;
pub mod model_metrics;
pub mod partition;
pub mod sampler;
pub mod simulate;
pub mod spatial;

#[cfg(test)]
mod testkit;

pub use error::{BstcError, Result};
