use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::{AdjacencyGraph, PanelData};
use crate::dist::{ln_beta_pdf, sample_inv_gamma};
use crate::dp_cluster::ClusterState;
use crate::error::Result;
use crate::gmrf::{innovation_quad_form, innovations};
use crate::spatial::{leroux_precision, BandedSPD};

/// Fitted values `x_it' beta*_{s_i}` as an I×T matrix.
pub fn fitted_values(data: &PanelData, cluster: &ClusterState) -> DMatrix<f64> {
    let mut f = DMatrix::zeros(data.n_units(), data.n_times());
    for i in 0..data.n_units() {
        let row = data.fitted_unit(i, cluster.unit_beta(i).as_slice());
        for (t, v) in row.into_iter().enumerate() {
            f[(i, t)] = v;
        }
    }
    f
}

/// Inverse-gamma (shape, scale) full conditional of `sigma2`.
pub fn sigma2_posterior(data: &PanelData, fitted: &DMatrix<f64>, w: &DMatrix<f64>, a: f64, b: f64) -> (f64, f64) {
    let ss: f64 = (&data.y - fitted - w).iter().map(|r| r * r).sum();
    (a + 0.5 * data.y.len() as f64, b + 0.5 * ss)
}

pub fn update_sigma2<R: Rng + ?Sized>(
    data: &PanelData,
    fitted: &DMatrix<f64>,
    w: &DMatrix<f64>,
    a: f64,
    b: f64,
    rng: &mut R,
) -> f64 {
    let (shape, scale) = sigma2_posterior(data, fitted, w, a, b);
    sample_inv_gamma(shape, scale, rng)
}

/// Inverse-gamma (shape, scale) full conditional of `tau2`.
pub fn tau2_posterior(w: &DMatrix<f64>, unit_xis: &[f64], q: &BandedSPD, a: f64, b: f64) -> (f64, f64) {
    (a + 0.5 * w.len() as f64, b + 0.5 * innovation_quad_form(w, unit_xis, q))
}

pub fn update_tau2<R: Rng + ?Sized>(
    w: &DMatrix<f64>,
    unit_xis: &[f64],
    q: &BandedSPD,
    a: f64,
    b: f64,
    rng: &mut R,
) -> f64 {
    let (shape, scale) = tau2_posterior(w, unit_xis, q, a, b);
    sample_inv_gamma(shape, scale, rng)
}

/// Sufficient statistics of the innovations for the `rho` update:
/// `sum_t e_t'(D - W) e_t` and `sum_t e_t' e_t`, so that
/// `sum_t e_t' Q(rho) e_t = rho * first + (1 - rho) * second`.
pub fn rho_statistics(w: &DMatrix<f64>, unit_xis: &[f64], graph: &AdjacencyGraph) -> (f64, f64) {
    let e = innovations(w, unit_xis);
    let edges: Vec<(usize, usize)> = graph.edges().collect();
    let pos = graph.positions();
    let mut lap = 0.0;
    let mut sq = 0.0;
    for col in e.column_iter() {
        sq += col.iter().map(|v| v * v).sum::<f64>();
        lap += edges.iter().map(|&(i, j)| (col[pos[i]] - col[pos[j]]).powi(2)).sum::<f64>();
    }
    (lap, sq)
}

/// Log full conditional of `rho` (without the logit Jacobian), given
/// `log |Q(rho)|`.
#[allow(clippy::too_many_arguments)]
pub fn rho_log_target(
    rho: f64,
    log_det_q: f64,
    stats: (f64, f64),
    tau2: f64,
    n_times: usize,
    a: f64,
    b: f64,
) -> f64 {
    let quad = rho * stats.0 + (1.0 - rho) * stats.1;
    ln_beta_pdf(rho, a, b) + 0.5 * n_times as f64 * log_det_q - 0.5 * quad / tau2
}

/// Current `rho` with its precision and log-determinant.
#[derive(Debug, Clone)]
pub struct RhoState {
    pub rho: f64,
    pub q: BandedSPD,
    pub log_det: f64,
}

impl RhoState {
    pub fn new(rho: f64, graph: &AdjacencyGraph) -> Result<Self> {
        let q = leroux_precision(rho, graph)?;
        let log_det = q.cholesky()?.log_det();
        Ok(Self { rho, q, log_det })
    }
}

/// Random-walk Metropolis step on `logit(rho)`. `log_lik(rho, state)` gives
/// the likelihood part of the target for a candidate state. Returns whether
/// the proposal was accepted.
pub(crate) fn rho_mh_step<R, F>(
    current: &mut RhoState,
    graph: &AdjacencyGraph,
    a: f64,
    b: f64,
    step: f64,
    rng: &mut R,
    log_lik: F,
) -> Result<bool>
where
    R: Rng + ?Sized,
    F: Fn(&RhoState) -> f64,
{
    let logit = (current.rho / (1.0 - current.rho)).ln();
    let z = logit + step * rng.sample::<f64, _>(StandardNormal);
    let prop = 1.0 / (1.0 + (-z).exp());
    if !(prop > 0.0 && prop < 1.0) {
        return Ok(false);
    }
    let cand = RhoState::new(prop, graph)?;
    let jac = |r: f64| r.ln() + (1.0 - r).ln();
    let log_ratio = ln_beta_pdf(prop, a, b) + log_lik(&cand) + jac(prop)
        - ln_beta_pdf(current.rho, a, b)
        - log_lik(current)
        - jac(current.rho);
    if rng.random::<f64>().ln() < log_ratio {
        *current = cand;
        Ok(true)
    } else {
        Ok(false)
    }
}

/// Metropolis update of `rho` given the effects. `graph` must be laid out in
/// the same coordinates as `w`.
#[allow(clippy::too_many_arguments)]
pub fn update_rho<R: Rng + ?Sized>(
    current: &mut RhoState,
    graph: &AdjacencyGraph,
    w: &DMatrix<f64>,
    unit_xis: &[f64],
    tau2: f64,
    a: f64,
    b: f64,
    step: f64,
    rng: &mut R,
) -> Result<bool> {
    let stats = rho_statistics(w, unit_xis, graph);
    let n_times = w.ncols() as f64;
    rho_mh_step(current, graph, a, b, step, rng, |s| {
        0.5 * n_times * s.log_det - 0.5 * (s.rho * stats.0 + (1.0 - s.rho) * stats.1) / tau2
    })
}
