//! Synthetic panels drawn from the generative model on a rook grid.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::{write_adjacency, write_panel, AdjacencyGraph, PanelData};
use crate::dp_cluster::{canonicalize_labels, ClusterState};
use crate::error::{BstcError, Result};
use crate::gmrf::sample_prior_effects;
use crate::sampler::ModelState;
use crate::spatial::leroux_precision;

/// Default 7-region tiling of a 10×10 grid, one character per cell.
pub const GRID7_TILING: &str = include_str!("../../data/grid7_tiling.txt");

/// Parse a tiling: one line per grid row, one character per cell; equal
/// characters share a cluster. Returns (rows, cols, canonical labels in
/// row-major order).
pub fn parse_tiling(text: &str) -> Result<(usize, usize, Vec<usize>)> {
    let rows: Vec<Vec<char>> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.chars().collect())
        .collect();
    let cols = rows.first().map_or(0, Vec::len);
    if cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(BstcError::parse("tiling", "rows must be non-empty and of equal length"));
    }
    let mut symbols: Vec<char> = Vec::new();
    let raw: Vec<usize> = rows
        .iter()
        .flatten()
        .map(|c| match symbols.iter().position(|s| s == c) {
            Some(k) => k,
            None => {
                symbols.push(*c);
                symbols.len() - 1
            }
        })
        .collect();
    Ok((rows.len(), cols, canonicalize_labels(&raw).0))
}

/// Whether covariate series are drawn once per cluster and shared by its
/// units, or drawn separately for every unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovariateLevel {
    Cluster,
    Unit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Cluster of each grid cell, row-major.
    pub partition: Vec<usize>,
    /// Predictors besides the intercept.
    pub p: usize,
    pub rho: f64,
    pub sigma2: f64,
    pub tau2: f64,
    pub n_times: usize,
    /// Standard deviation of the normal coefficient draws.
    pub coef_sd: f64,
    /// Standard deviation of the normal covariate draws.
    pub covariate_sd: f64,
    pub covariates: CovariateLevel,
    /// Autoregressive coefficients are uniform on this interval.
    pub xi_range: (f64, f64),
    pub seed: u64,
}

impl SimulationSpec {
    /// 10×10 grid with seven regions, three predictors, `rho = 0.95`,
    /// `sigma2 = tau2 = 1`, thirteen time points.
    pub fn grid7(seed: u64) -> Self {
        let (grid_rows, grid_cols, partition) = parse_tiling(GRID7_TILING).expect("bundled tiling is valid");
        Self {
            grid_rows,
            grid_cols,
            partition,
            p: 3,
            rho: 0.95,
            sigma2: 1.0,
            tau2: 1.0,
            n_times: 13,
            coef_sd: 1.0,
            covariate_sd: 1.0,
            covariates: CovariateLevel::Unit,
            xi_range: (0.0, 1.0),
            seed,
        }
    }

    pub fn with_tiling(mut self, text: &str) -> Result<Self> {
        let (r, c, p) = parse_tiling(text)?;
        self.grid_rows = r;
        self.grid_cols = c;
        self.partition = p;
        Ok(self)
    }

    pub fn n_units(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    pub fn n_clusters(&self) -> usize {
        self.partition.iter().max().map_or(0, |m| m + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.partition.len() != self.n_units() || self.n_units() == 0 {
            return Err(BstcError::invalid("partition", "must label every grid cell"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(BstcError::invalid("rho", format!("{} outside [0, 1)", self.rho)));
        }
        if !(self.sigma2 >= 0.0 && self.tau2 > 0.0) {
            return Err(BstcError::invalid("variance", "need sigma2 >= 0 and tau2 > 0"));
        }
        if self.n_times == 0 {
            return Err(BstcError::invalid("n_times", "must be positive"));
        }
        let (lo, hi) = self.xi_range;
        if !(-1.0 < lo && lo <= hi && hi <= 1.0) {
            return Err(BstcError::invalid("xi_range", "must lie within [-1, 1]"));
        }
        if !(self.coef_sd >= 0.0 && self.covariate_sd >= 0.0) {
            return Err(BstcError::invalid("sd", "standard deviations must be non-negative"));
        }
        Ok(())
    }
}

/// A simulated panel with its graph and the generating state.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub panel: PanelData,
    pub graph: AdjacencyGraph,
    pub truth: ModelState,
}

/// Draw a panel: coefficients and covariates i.i.d. normal (covariates
/// shared within a cluster or drawn per unit, see [`CovariateLevel`]), autoregressive
/// coefficients uniform, effects forward-simulated from the CAR
/// autoregression, responses with Gaussian noise.
pub fn simulate_dataset(spec: &SimulationSpec) -> Result<SimulatedData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_units();
    let (tt, k) = (spec.n_times, spec.n_clusters());
    let graph = AdjacencyGraph::rook_grid(spec.grid_rows, spec.grid_cols);
    let normal = |sd: f64, rng: &mut ChaCha8Rng| sd * rng.sample::<f64, _>(StandardNormal);

    let betas: Vec<DVector<f64>> =
        (0..k).map(|_| DVector::from_fn(spec.p + 1, |_, _| normal(spec.coef_sd, &mut rng))).collect();
    let (lo, hi) = spec.xi_range;
    let xis: Vec<f64> = (0..k).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
    let draw_x = |rng: &mut ChaCha8Rng| {
        DMatrix::from_fn(tt, spec.p + 1, |_, c| if c == 0 { 1.0 } else { normal(spec.covariate_sd, rng) })
    };
    let x: Vec<DMatrix<f64>> = match spec.covariates {
        CovariateLevel::Cluster => {
            let per_cluster: Vec<DMatrix<f64>> = (0..k).map(|_| draw_x(&mut rng)).collect();
            spec.partition.iter().map(|&c| per_cluster[c].clone()).collect()
        }
        CovariateLevel::Unit => (0..n).map(|_| draw_x(&mut rng)).collect(),
    };

    let cluster = ClusterState::new(spec.partition.clone(), betas, xis, 1.0)?;
    let q = leroux_precision(spec.rho, &graph)?;
    let w = sample_prior_effects(&cluster.unit_xis(), spec.tau2, &q, tt, &mut rng)?;
    let sd = spec.sigma2.sqrt();
    let y = DMatrix::from_fn(n, tt, |i, t| {
        let fit: f64 = (0..=spec.p).map(|c| x[i][(t, c)] * cluster.betas[spec.partition[i]][c]).sum();
        fit + w[(i, t)] + sd * rng.sample::<f64, _>(StandardNormal)
    });

    let unit_ids = (0..n).map(|u| format!("r{}c{}", u / spec.grid_cols + 1, u % spec.grid_cols + 1)).collect();
    let panel = PanelData::new(
        unit_ids,
        (1..=tt).map(|t| t.to_string()).collect(),
        (1..=spec.p).map(|c| format!("x{c}")).collect(),
        y,
        x,
    )?;
    let truth = ModelState { cluster, w, sigma2: spec.sigma2, tau2: spec.tau2, rho: spec.rho };
    Ok(SimulatedData { panel, graph, truth })
}

/// Write `panel.csv`, `adjacency.csv` and `truth.csv` (one row per unit with
/// its cluster, autoregressive coefficient, coefficients and the global
/// parameters; clusters 1-based).
pub fn write_simulation(dir: impl AsRef<Path>, sim: &SimulatedData) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|source| BstcError::Io { path: dir.to_path_buf(), source })?;
    write_panel(dir.join("panel.csv"), &sim.panel)?;
    write_adjacency(dir.join("adjacency.csv"), &sim.graph, &sim.panel.unit_ids)?;
    let path = dir.join("truth.csv");
    let csv_err = |source| BstcError::Csv { path: path.clone(), source };
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    let mut header = vec!["unit".to_string(), "cluster".into(), "xi".into(), "intercept".into()];
    header.extend(sim.panel.predictor_names.iter().cloned());
    header.extend(["rho".to_string(), "sigma2".into(), "tau2".into()]);
    w.write_record(&header).map_err(csv_err)?;
    let t = &sim.truth;
    for (i, u) in sim.panel.unit_ids.iter().enumerate() {
        let mut rec = vec![u.clone(), (t.cluster.s[i] + 1).to_string(), t.cluster.unit_xis()[i].to_string()];
        rec.extend(t.cluster.unit_beta(i).iter().map(|b| b.to_string()));
        rec.extend([t.rho.to_string(), t.sigma2.to_string(), t.tau2.to_string()]);
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|source| BstcError::Io { path: path.clone(), source })
}
