use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use super::{BaseMeasure, ClusterState};
use crate::data::PanelData;
use crate::dist::sample_gamma;
use crate::error::{BstcError, Result};
use crate::spatial::BandedSPD;

/// Posterior precision and `Sigma0^-1 mu0 + sum X_i'(y_i - w_i) / sigma2` for
/// the coefficients of a cluster with the given members.
fn beta_precision_and_rhs(
    members: &[usize],
    data: &PanelData,
    w: &DMatrix<f64>,
    sigma2: f64,
    base: &BaseMeasure,
) -> (DMatrix<f64>, DVector<f64>) {
    let mut prec = base.precision().clone();
    let mut rhs = base.precision_times_mean().clone();
    for &i in members {
        let x = &data.x[i];
        let r = DVector::from_fn(data.n_times(), |t, _| data.y[(i, t)] - w[(i, t)]);
        prec += x.tr_mul(x) / sigma2;
        rhs += x.tr_mul(&r) / sigma2;
    }
    (prec, rhs)
}

/// Mean and covariance of the conjugate normal full conditional of one
/// cluster's coefficients.
pub fn beta_posterior(
    members: &[usize],
    data: &PanelData,
    w: &DMatrix<f64>,
    sigma2: f64,
    base: &BaseMeasure,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (prec, rhs) = beta_precision_and_rhs(members, data, w, sigma2, base);
    let chol = prec
        .cholesky()
        .ok_or_else(|| BstcError::invalid("beta", "posterior precision not positive definite"))?;
    Ok((chol.solve(&rhs), chol.inverse()))
}

/// Draw every cluster's coefficients from its full conditional.
pub fn update_cluster_betas<R: Rng + ?Sized>(
    state: &mut ClusterState,
    data: &PanelData,
    w: &DMatrix<f64>,
    sigma2: f64,
    base: &BaseMeasure,
    rng: &mut R,
) -> Result<()> {
    for (j, members) in state.members().into_iter().enumerate() {
        let (prec, rhs) = beta_precision_and_rhs(&members, data, w, sigma2, base);
        let chol = prec
            .cholesky()
            .ok_or_else(|| BstcError::invalid("beta", "posterior precision not positive definite"))?;
        let mean = chol.solve(&rhs);
        let z = DVector::from_fn(mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let dev = chol
            .l()
            .transpose()
            .solve_upper_triangular(&z)
            .expect("Cholesky factor has a positive diagonal");
        state.betas[j] = mean + dev;
    }
    Ok(())
}

fn q_row_dot(q: &BandedSPD, i: usize, v: &[f64]) -> f64 {
    let b = q.bandwidth();
    let hi = (i + b + 1).min(q.n());
    (i.saturating_sub(b)..hi).map(|j| q.get(i, j) * v[j]).sum()
}

/// Coefficients `(B, C)` such that, as a function of the shared coefficient
/// `xi` of `members`, `log p(w | xi) = const + (xi B - xi^2 C / 2) / tau2`.
///
/// With `u_t` the lagged effects of the members (zero elsewhere) and `e0_t`
/// the innovations computed with the members' coefficient set to zero,
/// `B = sum_{t>=2} u_t' Q e0_t` and `C = sum_{t>=2} u_t' Q u_t`.
pub fn xi_quadratic_coefficients(members: &[usize], w: &DMatrix<f64>, unit_xis: &[f64], q: &BandedSPD) -> (f64, f64) {
    let n = w.nrows();
    let mut in_cluster = vec![false; n];
    members.iter().for_each(|&i| in_cluster[i] = true);
    let (mut b, mut c) = (0.0, 0.0);
    let mut u = vec![0.0; n];
    let mut e0 = vec![0.0; n];
    for t in 1..w.ncols() {
        for i in 0..n {
            let lag = w[(i, t - 1)];
            if in_cluster[i] {
                u[i] = lag;
                e0[i] = w[(i, t)];
            } else {
                u[i] = 0.0;
                e0[i] = w[(i, t)] - unit_xis[i] * lag;
            }
        }
        for &i in members {
            b += u[i] * q_row_dot(q, i, &e0);
            c += u[i] * q_row_dot(q, i, &u);
        }
    }
    (b, c)
}

/// Log full-conditional density of a cluster's `xi`, up to a constant.
pub fn xi_log_target(xi: f64, b: f64, c: f64, tau2: f64, base: &BaseMeasure) -> f64 {
    if !(xi.abs() < 1.0) {
        return f64::NEG_INFINITY;
    }
    base.ln_xi_density(xi) + (xi * b - 0.5 * xi * xi * c) / tau2
}

/// Random-walk Metropolis step on `atanh(xi)`. Returns the new value and
/// whether the proposal was accepted.
pub(crate) fn xi_mh_step<R: Rng + ?Sized>(
    xi: f64,
    b: f64,
    c: f64,
    tau2: f64,
    base: &BaseMeasure,
    step: f64,
    rng: &mut R,
) -> (f64, bool) {
    let z = xi.atanh() + step * rng.sample::<f64, _>(StandardNormal);
    let prop = z.tanh();
    if !(prop.abs() < 1.0) {
        return (xi, false);
    }
    let log_ratio = xi_log_target(prop, b, c, tau2, base) + (1.0 - prop * prop).ln()
        - xi_log_target(xi, b, c, tau2, base)
        - (1.0 - xi * xi).ln();
    if rng.random::<f64>().ln() < log_ratio {
        (prop, true)
    } else {
        (xi, false)
    }
}

/// One Metropolis step per cluster for the autoregressive coefficients, in
/// label order. Returns the number of accepted proposals.
pub fn update_cluster_xis<R: Rng + ?Sized>(
    state: &mut ClusterState,
    w: &DMatrix<f64>,
    tau2: f64,
    q: &BandedSPD,
    base: &BaseMeasure,
    step: f64,
    rng: &mut R,
) -> usize {
    let members = state.members();
    let mut unit_xis = state.unit_xis();
    let mut accepted = 0;
    for (j, m) in members.iter().enumerate() {
        let (b, c) = xi_quadratic_coefficients(m, w, &unit_xis, q);
        let (xi, ok) = xi_mh_step(state.xis[j], b, c, tau2, base, step, rng);
        if ok {
            accepted += 1;
            state.xis[j] = xi;
            m.iter().for_each(|&i| unit_xis[i] = xi);
        }
    }
    accepted
}

/// Escobar and West auxiliary-variable update of the DP concentration under a
/// Gamma(`a`, `b`) prior (rate `b`), given `k` clusters among `n` units.
pub fn update_concentration<R: Rng + ?Sized>(alpha: f64, k: usize, n: usize, a: f64, b: f64, rng: &mut R) -> f64 {
    let x: f64 = Beta::new(alpha + 1.0, n as f64).expect("positive Beta parameters").sample(rng);
    let rate = b - x.ln();
    let kf = k as f64;
    let odds = (a + kf - 1.0) / (n as f64 * rate);
    let shape = if rng.random::<f64>() < odds / (1.0 + odds) { a + kf } else { a + kf - 1.0 };
    sample_gamma(shape, rate, rng).max(f64::MIN_POSITIVE)
}
