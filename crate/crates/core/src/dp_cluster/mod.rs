//! Dirichlet-process clustering: allocation labels, the base measure, the
//! Pólya-urn prior and sweep, and updates of the cluster-level parameters.
//!
//! Labels are 0-based internally and canonical in first-occurrence order:
//! the first unit is in cluster 0, and each new label is one more than the
//! largest seen so far.

mod base;
mod updates;
mod urn;

pub use base::BaseMeasure;
pub use updates::{
    beta_posterior, update_cluster_betas, update_cluster_xis, update_concentration, xi_log_target,
    xi_quadratic_coefficients,
};
pub use urn::{allocation_sweep, polya_urn_log_prior, Candidate, DEFAULT_N_AUX};

use nalgebra::DVector;

use crate::error::{BstcError, Result};

/// `true` if `s` is labelled in first-occurrence order starting at 0.
pub fn is_canonical(s: &[usize]) -> bool {
    let mut next = 0;
    for &l in s {
        if l > next {
            return false;
        }
        if l == next {
            next += 1;
        }
    }
    true
}

/// Relabel in first-occurrence order. Returns the new labels and, for each
/// new label, the old label it came from.
pub fn canonicalize_labels(s: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let max = s.iter().copied().max().map_or(0, |m| m + 1);
    let mut map = vec![usize::MAX; max];
    let mut old_of_new = Vec::new();
    let labels = s
        .iter()
        .map(|&l| {
            if map[l] == usize::MAX {
                map[l] = old_of_new.len();
                old_of_new.push(l);
            }
            map[l]
        })
        .collect();
    (labels, old_of_new)
}

/// Allocations plus the unique cluster parameters and the DP concentration.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    pub s: Vec<usize>,
    pub betas: Vec<DVector<f64>>,
    pub xis: Vec<f64>,
    pub alpha: f64,
}

impl ClusterState {
    /// Validates labels, cluster occupancy and parameter ranges.
    pub fn new(s: Vec<usize>, betas: Vec<DVector<f64>>, xis: Vec<f64>, alpha: f64) -> Result<Self> {
        let state = Self { s, betas, xis, alpha };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        if !is_canonical(&self.s) {
            return Err(BstcError::NonCanonical(format!("{:?}", self.s)));
        }
        let k = self.s.iter().copied().max().map_or(0, |m| m + 1);
        if self.betas.len() != k || self.xis.len() != k {
            return Err(BstcError::DimensionMismatch(format!(
                "{k} clusters but {} coefficient vectors and {} autoregressive terms",
                self.betas.len(),
                self.xis.len()
            )));
        }
        if let Some(x) = self.xis.iter().find(|x| !(x.abs() < 1.0)) {
            return Err(BstcError::invalid("xi", format!("{x} outside (-1, 1)")));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(BstcError::invalid("alpha", format!("{} is not positive", self.alpha)));
        }
        Ok(())
    }

    pub fn n_units(&self) -> usize {
        self.s.len()
    }

    pub fn k(&self) -> usize {
        self.betas.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.k()];
        self.s.iter().for_each(|&l| c[l] += 1);
        c
    }

    /// Units of each cluster, in increasing order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.k()];
        self.s.iter().enumerate().for_each(|(i, &l)| m[l].push(i));
        m
    }

    /// Per-unit autoregressive coefficients `xi*_{s_i}`.
    pub fn unit_xis(&self) -> Vec<f64> {
        self.s.iter().map(|&l| self.xis[l]).collect()
    }

    pub fn unit_beta(&self, i: usize) -> &DVector<f64> {
        &self.betas[self.s[i]]
    }

    /// Relabel so that labels are canonical when units are read in `order`,
    /// permuting the cluster parameters to match.
    pub fn canonicalize_in(&mut self, order: &[usize]) {
        let seq: Vec<usize> = order.iter().map(|&i| self.s[i]).collect();
        let (_, old_of_new) = canonicalize_labels(&seq);
        let mut new_of_old = vec![0; old_of_new.len()];
        for (new, &old) in old_of_new.iter().enumerate() {
            new_of_old[old] = new;
        }
        self.s.iter_mut().for_each(|l| *l = new_of_old[*l]);
        self.betas = old_of_new.iter().map(|&o| self.betas[o].clone()).collect();
        self.xis = old_of_new.iter().map(|&o| self.xis[o]).collect();
    }

    pub fn canonicalize(&mut self) {
        let order: Vec<usize> = (0..self.s.len()).collect();
        self.canonicalize_in(&order);
    }
}
