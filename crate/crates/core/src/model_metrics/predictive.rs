use rayon::prelude::*;

use super::rmse_mae;
use crate::data::{AdjacencyGraph, PanelData};
use crate::dist::{log_sum_exp, LN_2PI};
use crate::error::{BstcError, Result};
use crate::sampler::{run_chains, ChainConfig, ChainOutput};
use crate::spatial::{leroux_precision, reverse_cuthill_mckee, BandedSPD};

/// `log N(r | 0, sigma2 I + tau2 Q^{-1})` for a residual `r` laid out in the
/// band order of `q`, with `log_det_q = log |Q|`.
///
/// Uses `sigma2 I + tau2 Q^{-1} = Q^{-1} M` with `M = sigma2 Q + tau2 I`, so
/// only the band factor of `M` is needed.
pub fn gaussian_marginal_log_density(
    r: &[f64],
    sigma2: f64,
    tau2: f64,
    q: &BandedSPD,
    log_det_q: f64,
) -> Result<f64> {
    let n = q.n();
    if r.len() != n {
        return Err(BstcError::DimensionMismatch(format!("residual has {} entries, Q is {n}x{n}", r.len())));
    }
    let mut m = q.scaled(sigma2);
    m.add_diagonal(tau2);
    let l = m.cholesky()?;
    let mut v = r.to_vec();
    l.solve(&mut v);
    let qr = q.mul_vec(r);
    let quad: f64 = qr.iter().zip(&v).map(|(a, b)| a * b).sum();
    let log_det = l.log_det() - log_det_q;
    Ok(-0.5 * (n as f64 * LN_2PI + log_det + quad))
}

fn check_fit(out: &ChainOutput, data: &PanelData, t: usize) -> Result<()> {
    if out.n_draws() == 0 {
        return Err(BstcError::Empty("no draws".into()));
    }
    if out.n_units() != data.n_units() || out.n_coef() != data.p() + 1 {
        return Err(BstcError::DimensionMismatch("draws do not match the panel".into()));
    }
    if t == 0 || t >= data.n_times() {
        return Err(BstcError::invalid("t", format!("year index {t} outside 1..{}", data.n_times() - 1)));
    }
    if out.n_times() != t {
        return Err(BstcError::DimensionMismatch(format!(
            "draws cover {} years, expected the {t} years before the forecast year",
            out.n_times()
        )));
    }
    Ok(())
}

/// Conditional mean of `y_t` in draw `m`: `x_t' beta + xi w_{t-1}`.
fn draw_mean(out: &ChainOutput, data: &PanelData, m: usize, t: usize) -> Vec<f64> {
    let nt = out.n_times();
    (0..data.n_units())
        .map(|i| {
            let b = out.unit_beta(m, i);
            let xb: f64 = (0..b.len()).map(|k| data.x[i][(t, k)] * b[k]).sum();
            xb + out.xi[m][i] * out.w[m][i * nt + t - 1]
        })
        .collect()
}

/// `log p(y_t | y_{1:t-1})` estimated from draws fitted on the first `t`
/// years (`t` is a 0-based index into `data`), with `w_t` integrated out.
pub fn year_predictive_loglik(out: &ChainOutput, data: &PanelData, graph: &AdjacencyGraph, t: usize) -> Result<f64> {
    check_fit(out, data, t)?;
    let g = graph.with_permutation(reverse_cuthill_mckee(graph))?;
    let perm = g.permutation().to_vec();
    let terms: Vec<f64> = (0..out.n_draws())
        .into_par_iter()
        .map(|m| {
            let mean = draw_mean(out, data, m, t);
            let r: Vec<f64> = perm.iter().map(|&i| data.y[(i, t)] - mean[i]).collect();
            let q = leroux_precision(out.rho[m], &g)?;
            let log_det_q = q.cholesky()?.log_det();
            gaussian_marginal_log_density(&r, out.sigma2[m], out.tau2[m], &q, log_det_q)
        })
        .collect::<Result<_>>()?;
    Ok(log_sum_exp(&terms) - (terms.len() as f64).ln())
}

/// Posterior-mean forecast of `y_t` from draws fitted on the first `t` years.
pub fn point_forecast(out: &ChainOutput, data: &PanelData, t: usize) -> Result<Vec<f64>> {
    check_fit(out, data, t)?;
    let mut acc = vec![0.0; data.n_units()];
    for m in 0..out.n_draws() {
        for (a, v) in acc.iter_mut().zip(draw_mean(out, data, m, t)) {
            *a += v;
        }
    }
    let n = out.n_draws() as f64;
    Ok(acc.into_iter().map(|a| a / n).collect())
}

/// Per-year predictive log-likelihoods and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveLoglik {
    pub years: Vec<String>,
    pub values: Vec<f64>,
    pub sum: f64,
}

/// Per-year RMSE and MAE with their averages.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastErrors {
    pub years: Vec<String>,
    pub rmse: Vec<f64>,
    pub mae: Vec<f64>,
    pub avg_rmse: f64,
    pub avg_mae: f64,
}

/// Results of the one-step-ahead refits, one entry per evaluation year.
#[derive(Debug, Clone, PartialEq)]
pub struct OneStepAhead {
    pub years: Vec<String>,
    pub loglik: Vec<f64>,
    pub rmse: Vec<f64>,
    pub mae: Vec<f64>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

impl OneStepAhead {
    pub fn lml_sum(&self) -> f64 {
        self.loglik.iter().sum()
    }

    pub fn avg_rmse(&self) -> f64 {
        mean(&self.rmse)
    }

    pub fn avg_mae(&self) -> f64 {
        mean(&self.mae)
    }

    pub fn predictive(&self) -> PredictiveLoglik {
        PredictiveLoglik { years: self.years.clone(), values: self.loglik.clone(), sum: self.lml_sum() }
    }

    pub fn errors(&self) -> ForecastErrors {
        ForecastErrors {
            years: self.years.clone(),
            rmse: self.rmse.clone(),
            mae: self.mae.clone(),
            avg_rmse: self.avg_rmse(),
            avg_mae: self.avg_mae(),
        }
    }
}

/// For each year `t0..=T` (1-based), refit on the preceding years and score
/// the held-out year. Refits run in parallel.
pub fn one_step_ahead(
    data: &PanelData,
    graph: &AdjacencyGraph,
    config: &ChainConfig,
    t0: usize,
) -> Result<OneStepAhead> {
    let nt = data.n_times();
    if t0 < 2 || t0 > nt {
        return Err(BstcError::invalid("t0", format!("{t0} outside 2..={nt}")));
    }
    config.validate()?;
    let rows: Vec<(f64, f64, f64)> = (t0 - 1..nt)
        .into_par_iter()
        .map(|t| {
            let fit = run_chains(&data.truncate_times(t)?, graph, config)?;
            let ll = year_predictive_loglik(&fit, data, graph, t)?;
            let yhat = point_forecast(&fit, data, t)?;
            let y: Vec<f64> = data.y.column(t).iter().copied().collect();
            let (rmse, mae) = rmse_mae(&y, &yhat);
            Ok((ll, rmse, mae))
        })
        .collect::<Result<_>>()?;
    Ok(OneStepAhead {
        years: data.times[t0 - 1..].to_vec(),
        loglik: rows.iter().map(|r| r.0).collect(),
        rmse: rows.iter().map(|r| r.1).collect(),
        mae: rows.iter().map(|r| r.2).collect(),
    })
}

pub fn one_step_predictive_loglik(
    data: &PanelData,
    graph: &AdjacencyGraph,
    config: &ChainConfig,
    t0: usize,
) -> Result<PredictiveLoglik> {
    one_step_ahead(data, graph, config, t0).map(|o| o.predictive())
}

pub fn forecast_error(data: &PanelData, graph: &AdjacencyGraph, config: &ChainConfig, t0: usize) -> Result<ForecastErrors> {
    one_step_ahead(data, graph, config, t0).map(|o| o.errors())
}
