use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ChainConfig, InitScheme, TARGET_ACCEPTANCE};
use super::output::ChainOutput;
use super::updates::{fitted_values, update_rho, update_sigma2, update_tau2, RhoState};
use crate::data::{AdjacencyGraph, PanelData};
use crate::dist::{ln_normal, sample_gamma, sample_inv_gamma};
use crate::dp_cluster::{
    allocation_sweep, update_cluster_betas, update_cluster_xis, update_concentration, BaseMeasure, ClusterState,
};
use crate::error::{BstcError, Result};
use crate::gmrf::{
    random_effects_full_conditional, sample_block_tridiagonal, sample_prior_effects, site_log_density_from,
    site_neighbor_means,
};
use crate::spatial::reverse_cuthill_mckee;

/// Every unknown of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub cluster: ClusterState,
    pub w: DMatrix<f64>,
    pub sigma2: f64,
    pub tau2: f64,
    pub rho: f64,
}

impl ModelState {
    pub fn validate(&self) -> Result<()> {
        self.cluster.validate()?;
        if !(self.sigma2 > 0.0 && self.tau2 > 0.0 && self.sigma2.is_finite() && self.tau2.is_finite()) {
            return Err(BstcError::invalid("variance", "sigma2 and tau2 must be positive"));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(BstcError::invalid("rho", format!("{} outside (0, 1)", self.rho)));
        }
        if self.w.iter().any(|v| !v.is_finite()) {
            return Err(BstcError::invalid("w", "non-finite random effect"));
        }
        Ok(())
    }
}

/// A single Markov chain. Internally the units are held in a
/// bandwidth-reducing order; the public accessors speak the panel's order.
pub struct Chain {
    config: ChainConfig,
    base: BaseMeasure,
    data: PanelData,
    graph: AdjacencyGraph,
    /// `perm[k]` is the panel unit at working position `k`.
    perm: Vec<usize>,
    /// `pos[u]` is the working position of panel unit `u`.
    pos: Vec<usize>,
    cluster: ClusterState,
    w: DMatrix<f64>,
    sigma2: f64,
    tau2: f64,
    rho: RhoState,
    step_rho: f64,
    step_xi: f64,
    rng: ChaCha8Rng,
    iteration: usize,
    accepted_rho: usize,
    accepted_xi: usize,
    proposed_xi: usize,
    kept_iterations: usize,
}

fn check_inputs(data: &PanelData, graph: &AdjacencyGraph) -> Result<()> {
    if data.n_units() != graph.n() {
        return Err(BstcError::DimensionMismatch(format!(
            "panel has {} units, adjacency {}",
            data.n_units(),
            graph.n()
        )));
    }
    Ok(())
}

impl Chain {
    /// Chain `index` draws from stream `index` of the configured seed.
    pub fn new(data: &PanelData, graph: &AdjacencyGraph, config: &ChainConfig, index: usize) -> Result<Self> {
        config.validate()?;
        check_inputs(data, graph)?;
        let n = data.n_units();
        let base = config.priors.base_measure(data.p() + 1)?;
        let perm = reverse_cuthill_mckee(graph);
        let working = graph.with_permutation(perm.clone())?;
        let pos = working.positions().to_vec();
        let graph = working.relabeled();
        let data = data.reorder_units(&perm);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(index as u64);

        let mut chain = Self {
            config: config.clone(),
            base,
            data,
            rho: RhoState::new(0.9, &graph)?,
            graph,
            perm,
            pos,
            cluster: ClusterState { s: vec![0; n], betas: vec![], xis: vec![], alpha: 1.0 },
            w: DMatrix::zeros(0, 0),
            sigma2: 1.0,
            tau2: 1.0,
            step_rho: config.mh_step_rho,
            step_xi: config.mh_step_xi,
            rng,
            iteration: 0,
            accepted_rho: 0,
            accepted_xi: 0,
            proposed_xi: 0,
            kept_iterations: 0,
        };
        match config.init {
            InitScheme::Neutral => {
                let beta = chain.base.sample_beta(&mut chain.rng);
                chain.cluster.betas = vec![beta];
                chain.cluster.xis = vec![0.0];
                chain.w = DMatrix::zeros(n, chain.data.n_times());
            }
            InitScheme::Prior => chain.draw_from_prior()?,
        }
        if let Some(fixed) = &config.fixed_partition {
            chain.pin_partition(fixed)?;
        }
        Ok(chain)
    }

    fn visit_order(&self) -> Vec<usize> {
        self.pos.clone()
    }

    fn pin_partition(&mut self, fixed: &[usize]) -> Result<()> {
        if fixed.len() != self.data.n_units() {
            return Err(BstcError::DimensionMismatch(format!(
                "fixed partition has {} labels for {} units",
                fixed.len(),
                self.data.n_units()
            )));
        }
        let (canon, _) = crate::dp_cluster::canonicalize_labels(fixed);
        let k = canon.iter().max().map_or(0, |m| m + 1);
        let s: Vec<usize> = self.perm.iter().map(|&u| canon[u]).collect();
        let mut betas: Vec<DVector<f64>> = self.cluster.betas.clone();
        let mut xis = self.cluster.xis.clone();
        while betas.len() < k {
            let (b, x) = self.base.sample(&mut self.rng);
            betas.push(b);
            xis.push(if self.config.init == InitScheme::Neutral { 0.0 } else { x });
        }
        betas.truncate(k);
        xis.truncate(k);
        self.cluster = ClusterState { s, betas, xis, alpha: self.cluster.alpha };
        Ok(())
    }

    /// Replace every unknown by a draw from the prior: variances, `rho`,
    /// `alpha`, allocations from the urn, cluster parameters from the base
    /// measure and `w` from its autoregressive CAR prior.
    pub fn draw_from_prior(&mut self) -> Result<()> {
        let p = self.config.priors.clone();
        let rng = &mut self.rng;
        self.sigma2 = sample_inv_gamma(p.a_sigma2, p.b_sigma2, rng);
        self.tau2 = sample_inv_gamma(p.a_tau2, p.b_tau2, rng);
        let rho: f64 = rand_distr::Distribution::sample(
            &rand_distr::Beta::new(p.a_rho, p.b_rho).expect("positive Beta parameters"),
            rng,
        );
        let rho = rho.clamp(1e-12, 1.0 - 1e-12);
        let alpha = sample_gamma(p.a_alpha, p.b_alpha, rng).max(f64::MIN_POSITIVE);
        let n = self.data.n_units();
        let mut s = vec![0; n];
        let mut counts: Vec<usize> = Vec::new();
        for (seen, &k) in self.pos.iter().enumerate() {
            let mut u = rng.random::<f64>() * (seen as f64 + alpha);
            let mut label = counts.len();
            for (j, &c) in counts.iter().enumerate() {
                if u < c as f64 {
                    label = j;
                    break;
                }
                u -= c as f64;
            }
            if label == counts.len() {
                counts.push(0);
            }
            counts[label] += 1;
            s[k] = label;
        }
        let (betas, xis) = (0..counts.len()).map(|_| self.base.sample(rng)).unzip();
        self.cluster = ClusterState { s, betas, xis, alpha };
        self.rho = RhoState::new(rho, &self.graph)?;
        self.w = sample_prior_effects(&self.cluster.unit_xis(), self.tau2, &self.rho.q, self.data.n_times(), rng)?;
        Ok(())
    }

    /// Replace the response by a draw from the likelihood given the current
    /// state. Used to validate the sampler against the prior.
    pub fn resample_response(&mut self) {
        let fitted = fitted_values(&self.data, &self.cluster);
        let sd = self.sigma2.sqrt();
        let rng = &mut self.rng;
        self.data.y = DMatrix::from_fn(self.data.n_units(), self.data.n_times(), |i, t| {
            fitted[(i, t)] + self.w[(i, t)] + sd * rng.sample::<f64, _>(rand_distr::StandardNormal)
        });
    }

    /// Completed iterations.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Current state in the panel's unit order, labels canonical.
    pub fn state(&self) -> ModelState {
        let n = self.data.n_units();
        let s_orig: Vec<usize> = (0..n).map(|u| self.cluster.s[self.pos[u]]).collect();
        let mut cluster = ClusterState { s: s_orig, ..self.cluster.clone() };
        cluster.canonicalize();
        ModelState {
            cluster,
            w: DMatrix::from_fn(n, self.data.n_times(), |u, t| self.w[(self.pos[u], t)]),
            sigma2: self.sigma2,
            tau2: self.tau2,
            rho: self.rho.rho,
        }
    }

    /// Overwrite the chain state with `state` (panel order).
    pub fn set_state(&mut self, state: &ModelState) -> Result<()> {
        state.validate()?;
        let n = self.data.n_units();
        if state.cluster.n_units() != n || state.w.nrows() != n || state.w.ncols() != self.data.n_times() {
            return Err(BstcError::DimensionMismatch("state does not match the panel".into()));
        }
        if state.cluster.betas.iter().any(|b| b.len() != self.data.p() + 1) {
            return Err(BstcError::DimensionMismatch("coefficient length does not match the panel".into()));
        }
        let mut cluster = ClusterState { s: self.perm.iter().map(|&u| state.cluster.s[u]).collect(), ..state.cluster.clone() };
        cluster.canonicalize_in(&self.pos);
        if let Some(fixed) = &self.config.fixed_partition {
            let (canon, _) = crate::dp_cluster::canonicalize_labels(fixed);
            if (0..n).any(|u| cluster.s[self.pos[u]] != canon[u]) {
                return Err(BstcError::invalid("state", "allocations differ from the fixed partition"));
            }
        }
        self.cluster = cluster;
        self.w = DMatrix::from_fn(n, self.data.n_times(), |k, t| state.w[(self.perm[k], t)]);
        self.sigma2 = state.sigma2;
        self.tau2 = state.tau2;
        self.rho = RhoState::new(state.rho, &self.graph)?;
        Ok(())
    }

    /// Current Metropolis step sizes for `rho` and `xi`.
    pub fn step_sizes(&self) -> (f64, f64) {
        (self.step_rho, self.step_xi)
    }

    fn sweep_allocations(&mut self) {
        let order = self.visit_order();
        let (data, w, q) = (&self.data, &self.w, &self.rho.q);
        let (sigma2, tau2) = (self.sigma2, self.tau2);
        allocation_sweep(&mut self.cluster, &self.base, self.config.n_aux, &order, &mut self.rng, |i, xis, cands| {
            let offsets = site_neighbor_means(i, w, xis, q);
            let var_c = tau2 / q.get(i, i);
            let resid: Vec<f64> = (0..data.n_times()).map(|t| data.y[(i, t)] - w[(i, t)]).collect();
            cands
                .iter()
                .map(|c| {
                    let fit = data.fitted_unit(i, c.beta.as_slice());
                    let obs: f64 = resid.iter().zip(&fit).map(|(r, f)| ln_normal(*r, *f, sigma2)).sum();
                    obs + site_log_density_from(i, w, c.xi, &offsets, var_c)
                })
                .collect()
        });
    }

    fn adapt(step: &mut f64, rate: f64, it: usize) {
        let gain = 1.0 / ((it + 1) as f64).powf(0.6);
        *step = (step.ln() + gain * (rate - TARGET_ACCEPTANCE)).exp().clamp(1e-4, 1e2);
    }

    /// One full iteration: allocations, cluster coefficients and
    /// autoregressive terms, concentration, random effects, `sigma2`,
    /// `tau2`, `rho`.
    pub fn step(&mut self) -> Result<()> {
        let it = self.iteration;
        let wrap = |e: BstcError| BstcError::Numerical { iteration: it, source: Box::new(e) };
        let pr = self.config.priors.clone();
        let n = self.data.n_units();

        if self.config.fixed_partition.is_none() {
            self.sweep_allocations();
        }
        update_cluster_betas(&mut self.cluster, &self.data, &self.w, self.sigma2, &self.base, &mut self.rng)
            .map_err(wrap)?;
        let acc_xi = update_cluster_xis(
            &mut self.cluster,
            &self.w,
            self.tau2,
            &self.rho.q,
            &self.base,
            self.step_xi,
            &mut self.rng,
        );
        let k = self.cluster.k();
        self.cluster.alpha = update_concentration(self.cluster.alpha, k, n, pr.a_alpha, pr.b_alpha, &mut self.rng);

        let fitted = fitted_values(&self.data, &self.cluster);
        let unit_xis = self.cluster.unit_xis();
        let (psi, c) =
            random_effects_full_conditional(&self.data.y, &fitted, &unit_xis, self.sigma2, self.tau2, &self.rho.q)
                .map_err(wrap)?;
        self.w = sample_block_tridiagonal(&psi, &c, &mut self.rng).map_err(wrap)?;

        self.sigma2 = update_sigma2(&self.data, &fitted, &self.w, pr.a_sigma2, pr.b_sigma2, &mut self.rng);
        self.tau2 = update_tau2(&self.w, &unit_xis, &self.rho.q, pr.a_tau2, pr.b_tau2, &mut self.rng);
        let acc_rho = update_rho(
            &mut self.rho,
            &self.graph,
            &self.w,
            &unit_xis,
            self.tau2,
            pr.a_rho,
            pr.b_rho,
            self.step_rho,
            &mut self.rng,
        )
        .map_err(wrap)?;

        if !(self.sigma2.is_finite() && self.tau2.is_finite() && self.w.iter().all(|v| v.is_finite())) {
            return Err(wrap(BstcError::invalid("state", "non-finite value after update")));
        }

        if it < self.config.burn_in {
            if self.config.adapt {
                Self::adapt(&mut self.step_xi, acc_xi as f64 / k as f64, it);
                Self::adapt(&mut self.step_rho, f64::from(u8::from(acc_rho)), it);
            }
        } else {
            self.kept_iterations += 1;
            self.accepted_rho += usize::from(acc_rho);
            self.accepted_xi += acc_xi;
            self.proposed_xi += k;
        }
        self.iteration += 1;
        Ok(())
    }

    /// Per-unit log-likelihood `log p(y_i | theta)` conditional on `w_i`,
    /// in panel order.
    pub fn unit_log_likelihoods(&self) -> Vec<f64> {
        let n = self.data.n_units();
        let mut ll = vec![0.0; n];
        for (k, &u) in self.perm.iter().enumerate() {
            let fit = self.data.fitted_unit(k, self.cluster.unit_beta(k).as_slice());
            ll[u] = (0..self.data.n_times())
                .map(|t| ln_normal(self.data.y[(k, t)], fit[t] + self.w[(k, t)], self.sigma2))
                .sum();
        }
        ll
    }

    /// Acceptance rates after burn-in for `rho` and `xi`.
    pub fn acceptance_rates(&self) -> (f64, f64) {
        let r = if self.kept_iterations > 0 { self.accepted_rho as f64 / self.kept_iterations as f64 } else { 0.0 };
        let x = if self.proposed_xi > 0 { self.accepted_xi as f64 / self.proposed_xi as f64 } else { 0.0 };
        (r, x)
    }

    /// Run all configured iterations, storing the thinned post-burn-in
    /// draws.
    pub fn run(mut self, unit_ids: &[String], times: &[String], predictors: &[String]) -> Result<ChainOutput> {
        let mut out = ChainOutput::empty(unit_ids.to_vec(), times.to_vec(), predictors.to_vec(), &self.config);
        while self.iteration < self.config.iterations {
            let it = self.iteration;
            self.step()?;
            if self.config.keeps(it) {
                let state = self.state();
                let ll = self.unit_log_likelihoods();
                if ll.iter().any(|v| !v.is_finite()) {
                    return Err(BstcError::Numerical {
                        iteration: it,
                        source: Box::new(BstcError::invalid("loglik", "non-finite log-likelihood")),
                    });
                }
                out.push(0, &state, ll);
            }
        }
        let (r, x) = self.acceptance_rates();
        out.acceptance_rho = vec![r];
        out.acceptance_xi = vec![x];
        Ok(out)
    }
}

/// Run one chain (chain index 0) with the configured seed.
pub fn run_chain(data: &PanelData, graph: &AdjacencyGraph, config: &ChainConfig) -> Result<ChainOutput> {
    run_single(data, graph, config, 0)
}

fn run_single(data: &PanelData, graph: &AdjacencyGraph, config: &ChainConfig, index: usize) -> Result<ChainOutput> {
    let chain = Chain::new(data, graph, config, index)?;
    let mut out = chain.run(&data.unit_ids, &data.times, &data.predictor_names)?;
    out.chain.iter_mut().for_each(|c| *c = index);
    Ok(out)
}

/// Run `config.n_chains` independent chains in parallel, chain `c` on stream
/// `c` of the seed, and merge them in chain order.
pub fn run_chains(data: &PanelData, graph: &AdjacencyGraph, config: &ChainConfig) -> Result<ChainOutput> {
    use rayon::prelude::*;
    config.validate()?;
    let outs: Vec<Result<ChainOutput>> =
        (0..config.n_chains).into_par_iter().map(|c| run_single(data, graph, config, c)).collect();
    let outs: Vec<ChainOutput> = outs.into_iter().collect::<Result<_>>()?;
    ChainOutput::merge(outs)
}

/// Run with the allocations pinned to `partition` (panel order).
pub fn run_conditional_on_partition(
    data: &PanelData,
    graph: &AdjacencyGraph,
    config: &ChainConfig,
    partition: &[usize],
) -> Result<ChainOutput> {
    let config = ChainConfig { fixed_partition: Some(partition.to_vec()), ..config.clone() };
    run_chains(data, graph, &config)
}
