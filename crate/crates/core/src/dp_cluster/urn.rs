use nalgebra::DVector;
use rand::Rng;

use super::{is_canonical, BaseMeasure, ClusterState};
use crate::dist::sample_log_weights;
use crate::error::{BstcError, Result};

pub const DEFAULT_N_AUX: usize = 20;

/// `sum_i log P(s_i | s_1, ..., s_{i-1})` under the Pólya urn with
/// concentration `alpha`. Labels must be canonical.
pub fn polya_urn_log_prior(s: &[usize], alpha: f64) -> Result<f64> {
    if !is_canonical(s) {
        return Err(BstcError::NonCanonical(format!("{s:?}")));
    }
    if !(alpha > 0.0) {
        return Err(BstcError::invalid("alpha", format!("{alpha} is not positive")));
    }
    let mut counts: Vec<usize> = Vec::new();
    let mut total = 0.0;
    for (i, &l) in s.iter().enumerate() {
        if i > 0 {
            let num = if l == counts.len() { alpha } else { counts[l] as f64 };
            total += (num / (i as f64 + alpha)).ln();
        }
        if l == counts.len() {
            counts.push(0);
        }
        counts[l] += 1;
    }
    Ok(total)
}

/// Parameters offered to a unit during the allocation sweep.
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    pub beta: &'a DVector<f64>,
    pub xi: f64,
}

/// One sweep of Neal's auxiliary-variable Gibbs sampler with auxiliary-pool
/// re-use, visiting units in `order`.
///
/// `log_lik(i, unit_xis, candidates)` returns the log likelihood of unit `i`
/// under each candidate. `unit_xis` holds the current per-unit coefficients of
/// the other units; entry `i` is stale and must be ignored.
///
/// A pool of `n_aux` draws from the base measure is refreshed at the start of
/// the sweep. When the visited unit is a singleton its parameters replace a
/// random pool slot; when a pool entry opens a new cluster it is replaced by
/// a fresh draw. Labels are canonical in `order` on return.
pub fn allocation_sweep<R, F>(
    state: &mut ClusterState,
    base: &BaseMeasure,
    n_aux: usize,
    order: &[usize],
    rng: &mut R,
    mut log_lik: F,
) where
    R: Rng + ?Sized,
    F: FnMut(usize, &[f64], &[Candidate<'_>]) -> Vec<f64>,
{
    assert!(n_aux >= 1, "need at least one auxiliary draw");
    assert_eq!(order.len(), state.s.len());
    let mut pool: Vec<(DVector<f64>, f64)> = (0..n_aux).map(|_| base.sample(rng)).collect();
    let mut counts = state.counts();
    let mut unit_xis = state.unit_xis();
    let ln_new = (state.alpha / n_aux as f64).ln();

    for &i in order {
        let c = state.s[i];
        counts[c] -= 1;
        if counts[c] == 0 {
            let slot = rng.random_range(0..n_aux);
            let last = counts.len() - 1;
            pool[slot] = (state.betas.swap_remove(c), state.xis.swap_remove(c));
            counts.swap_remove(c);
            if c != last {
                state.s.iter_mut().filter(|l| **l == last).for_each(|l| *l = c);
            }
        }

        let k = counts.len();
        let candidates: Vec<Candidate<'_>> = state
            .betas
            .iter()
            .zip(&state.xis)
            .chain(pool.iter().map(|(b, x)| (b, x)))
            .map(|(beta, &xi)| Candidate { beta, xi })
            .collect();
        let ll = log_lik(i, &unit_xis, &candidates);
        debug_assert_eq!(ll.len(), k + n_aux);
        let weights: Vec<f64> = ll
            .iter()
            .enumerate()
            .map(|(j, l)| if j < k { (counts[j] as f64).ln() + l } else { ln_new + l })
            .collect();
        let pick = sample_log_weights(&weights, rng);
        if pick < k {
            state.s[i] = pick;
            counts[pick] += 1;
        } else {
            let fresh = base.sample(rng);
            let (beta, xi) = std::mem::replace(&mut pool[pick - k], fresh);
            state.betas.push(beta);
            state.xis.push(xi);
            state.s[i] = k;
            counts.push(1);
        }
        unit_xis[i] = state.xis[state.s[i]];
    }
    state.canonicalize_in(order);
}
