use nalgebra::DMatrix;

use crate::dist::ln_normal;
use crate::spatial::BandedSPD;

/// Spatial part of the conditional mean of row `i`:
/// `-(1/Q_ii) sum_{j != i} Q_ij (w_jt - xi_j w_{j,t-1})` for each `t`,
/// with the lag term absent at the first time point.
///
/// It does not depend on `xi_i`, so callers comparing several candidate
/// coefficients for unit `i` can compute it once.
pub fn site_neighbor_means(i: usize, w: &DMatrix<f64>, xi: &[f64], q: &BandedSPD) -> Vec<f64> {
    let n = q.n();
    let b = q.bandwidth();
    let qii = q.get(i, i);
    let lo = i.saturating_sub(b);
    let hi = (i + b + 1).min(n);
    (0..w.ncols())
        .map(|t| {
            let mut acc = 0.0;
            for j in (lo..hi).filter(|&j| j != i) {
                let qij = q.get(i, j);
                if qij == 0.0 {
                    continue;
                }
                let mut e = w[(j, t)];
                if t > 0 {
                    e -= xi[j] * w[(j, t - 1)];
                }
                acc += qij * e;
            }
            -acc / qii
        })
        .collect()
}

/// `log p(w_i | w_{-i})` for row `i` of the effects when unit `i` has
/// autoregressive coefficient `xi_i`. Entry `i` of `xi` is ignored.
///
/// Equals `sum_t log N(w_it | xi_i w_{i,t-1} + m_t, tau2 / Q_ii)` with `m`
/// from [`site_neighbor_means`].
pub fn conditional_site_log_density(
    i: usize,
    w: &DMatrix<f64>,
    xi_i: f64,
    xi: &[f64],
    tau2: f64,
    q: &BandedSPD,
) -> f64 {
    let offsets = site_neighbor_means(i, w, xi, q);
    site_log_density_from(i, w, xi_i, &offsets, tau2 / q.get(i, i))
}

/// As [`conditional_site_log_density`] with precomputed neighbour means and
/// conditional variance.
pub(crate) fn site_log_density_from(i: usize, w: &DMatrix<f64>, xi_i: f64, offsets: &[f64], var: f64) -> f64 {
    offsets
        .iter()
        .enumerate()
        .map(|(t, &m)| {
            let lag = if t > 0 { xi_i * w[(i, t - 1)] } else { 0.0 };
            ln_normal(w[(i, t)], lag + m, var)
        })
        .sum()
}
