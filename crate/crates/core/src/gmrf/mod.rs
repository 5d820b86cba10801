//! Spatio-temporal random effects as a Gaussian Markov random field.
//!
//! The effects `w` (I×T, column `t` is `w_t`) follow
//! `w_1 ~ N(0, tau2 Q^-1)` and `w_t | w_{t-1} ~ N(diag(xi) w_{t-1}, tau2 Q^-1)`.
//! Their joint precision and the full conditional given the data are both
//! block tridiagonal with blocks of the same bandwidth as `Q`. Every vector
//! handed to this module must use the coordinate order of the `Q` it is
//! paired with.

mod block;
mod site;

pub use block::{sample_block_tridiagonal, BlockTridiagonal};
pub use site::{conditional_site_log_density, site_neighbor_means};
pub(crate) use site::site_log_density_from;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{BstcError, Result};
use crate::spatial::{BandMatrix, BandedSPD};

fn check_dims(xi: &[f64], q: &BandedSPD, n_times: usize) -> Result<()> {
    if xi.len() != q.n() {
        return Err(BstcError::DimensionMismatch(format!(
            "{} autoregressive coefficients for a {}-unit precision",
            xi.len(),
            q.n()
        )));
    }
    if n_times == 0 {
        return Err(BstcError::DimensionMismatch("need at least one time point".into()));
    }
    Ok(())
}

fn tridiagonal_from(xi: &[f64], tau2: f64, q: &BandedSPD, n_times: usize, diag_shift: f64) -> BlockTridiagonal {
    let inv_tau2 = 1.0 / tau2;
    let mut last = q.scaled(inv_tau2);
    last.add_diagonal(diag_shift);
    let mut inner = q.plus(&q.congruence_diag(xi)).scaled(inv_tau2);
    inner.add_diagonal(diag_shift);
    let off = BandMatrix::from_diag_times_symmetric(xi, q, -inv_tau2);
    let mut diag = vec![inner; n_times - 1];
    diag.push(last);
    BlockTridiagonal::new(diag, vec![off; n_times - 1])
}

/// Prior precision `Omega` of `(w_1, ..., w_T)`:
/// `Omega_tt = (Q + D Q D) / tau2` for `t < T`, `Omega_TT = Q / tau2`,
/// `Omega_{t,t+1} = -D Q / tau2` with `D = diag(xi)`.
pub fn joint_precision_omega(xi: &[f64], tau2: f64, q: &BandedSPD, n_times: usize) -> Result<BlockTridiagonal> {
    check_dims(xi, q, n_times)?;
    Ok(tridiagonal_from(xi, tau2, q, n_times, 0.0))
}

/// Full conditional of `w` given the data: `N(Psi^-1 c, Psi^-1)` with
/// `Psi = Omega + I / sigma2` and `c_t = (y_t - fitted_t) / sigma2`.
///
/// `xi` holds the per-unit autoregressive coefficients `xi*_{s_i}`; `fitted`
/// is the I×T matrix of linear predictors `x_it' beta*_{s_i}`.
pub fn random_effects_full_conditional(
    y: &DMatrix<f64>,
    fitted: &DMatrix<f64>,
    xi: &[f64],
    sigma2: f64,
    tau2: f64,
    q: &BandedSPD,
) -> Result<(BlockTridiagonal, DMatrix<f64>)> {
    let n_times = y.ncols();
    check_dims(xi, q, n_times)?;
    if y.shape() != fitted.shape() || y.nrows() != q.n() {
        return Err(BstcError::DimensionMismatch(format!(
            "response {:?}, fitted {:?}, precision of order {}",
            y.shape(),
            fitted.shape(),
            q.n()
        )));
    }
    let psi = tridiagonal_from(xi, tau2, q, n_times, 1.0 / sigma2);
    let c = (y - fitted) / sigma2;
    Ok((psi, c))
}

/// Draw `w` from its prior: `w_1 ~ N(0, tau2 Q^-1)` and
/// `w_t = diag(xi) w_{t-1} + e_t` with `e_t ~ N(0, tau2 Q^-1)`.
pub fn sample_prior_effects<R: Rng + ?Sized>(
    xi: &[f64],
    tau2: f64,
    q: &BandedSPD,
    n_times: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    check_dims(xi, q, n_times)?;
    let l = q.cholesky()?;
    let n = q.n();
    let sd = tau2.sqrt();
    let mut w = DMatrix::zeros(n, n_times);
    for t in 0..n_times {
        let mut e: Vec<f64> = (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
        l.solve_upper(&mut e);
        for i in 0..n {
            let lag = if t > 0 { xi[i] * w[(i, t - 1)] } else { 0.0 };
            w[(i, t)] = lag + e[i];
        }
    }
    Ok(w)
}

/// Innovations `e_1 = w_1`, `e_t = w_t - diag(xi) w_{t-1}`.
pub fn innovations(w: &DMatrix<f64>, xi: &[f64]) -> DMatrix<f64> {
    let mut e = w.clone();
    for t in 1..w.ncols() {
        for i in 0..w.nrows() {
            e[(i, t)] -= xi[i] * w[(i, t - 1)];
        }
    }
    e
}

/// `w_1' Q w_1 + sum_{t>=2} (w_t - D w_{t-1})' Q (w_t - D w_{t-1})`.
pub fn innovation_quad_form(w: &DMatrix<f64>, xi: &[f64], q: &BandedSPD) -> f64 {
    let e = innovations(w, xi);
    e.column_iter()
        .map(|col| q.quad_form(col.as_slice()))
        .sum()
}
