//! WAIC, one-step-ahead predictive log-likelihoods and forecast errors.
mod predictive;
mod report;
pub use predictive::{
    forecast_error, gaussian_marginal_log_density, one_step_ahead, one_step_predictive_loglik, point_forecast,
    year_predictive_loglik, ForecastErrors, OneStepAhead, PredictiveLoglik,
};
pub use report::{write_metrics_csv, MetricReport};
use crate::dist::log_sum_exp;
use crate::error::{BstcError, Result};
/// WAIC and its two components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waic {
    pub waic: f64,
    pub lppd: f64,
    pub p_waic: f64,
}
/// WAIC from per-draw, per-unit log-likelihoods (`loglik[m][i]`).
///
/// `lppd = sum_i log mean_m p(y_i | theta_m)`,
/// `p_waic = 2 sum_i (log mean_m p - mean_m log p)`,
/// `waic = -2 (lppd - p_waic)`.
pub fn waic(loglik: &[Vec<f64>]) -> Result<Waic> {
    let m = loglik.len();
    if m == 0 {
        return Err(BstcError::Empty("no draws for WAIC".into()));
    }
    let n = loglik[0].len();
    if n == 0 {
        return Err(BstcError::Empty("no units for WAIC".into()));
    }
    if loglik.iter().any(|r| r.len() != n) {
        return Err(BstcError::DimensionMismatch("ragged log-likelihood rows".into()));
    }
    if loglik.iter().flatten().any(|v| !v.is_finite()) {
        return Err(BstcError::invalid("loglik", "non-finite log-likelihood"));
    }
    let ln_m = (m as f64).ln();
    let mut lppd = 0.0;
    let mut p_waic = 0.0;
    let mut col = vec![0.0; m];
    for i in 0..n {
        for (c, row) in col.iter_mut().zip(loglik) {
            *c = row[i];
        }
        let log_mean = log_sum_exp(&col) - ln_m;
        let mean_log = col.iter().sum::<f64>() / m as f64;
        lppd += log_mean;
        p_waic += 2.0 * (log_mean - mean_log);
    }
    Ok(Waic { waic: -2.0 * (lppd - p_waic), lppd, p_waic })
}
/// RMSE and MAE of `y - yhat`.
pub fn rmse_mae(y: &[f64], yhat: &[f64]) -> (f64, f64) {
    assert_eq!(y.len(), yhat.len());
    let n = y.len() as f64;
    let (sq, ab) = y
        .iter()
        .zip(yhat)
        .fold((0.0, 0.0), |(s, a), (u, v)| (s + (u - v) * (u - v), a + (u - v).abs()));
    ((sq / n).sqrt(), ab / n)
}
