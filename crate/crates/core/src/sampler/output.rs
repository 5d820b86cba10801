use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use super::chain::ModelState;
use super::config::ChainConfig;
use crate::error::{BstcError, Result};
use crate::partition::Partition;

const FORMAT: &str = "bstc-chain-output 1";

/// Stored draws of one or more chains. Unit-indexed quantities are in panel
/// order; allocation labels are canonical and 0-based in memory, 1-based on
/// disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub unit_ids: Vec<String>,
    pub times: Vec<String>,
    pub predictors: Vec<String>,
    /// Configuration echo as `key = value` pairs.
    pub config: Vec<(String, String)>,
    pub chain: Vec<usize>,
    pub s: Vec<Vec<usize>>,
    pub k: Vec<usize>,
    pub sigma2: Vec<f64>,
    pub tau2: Vec<f64>,
    pub rho: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Per-unit coefficients `beta*_{s_i}`, unit-major (`I x (p+1)`).
    pub beta: Vec<Vec<f64>>,
    /// Per-unit `xi*_{s_i}`.
    pub xi: Vec<Vec<f64>>,
    /// Random effects, unit-major (`I x T`).
    pub w: Vec<Vec<f64>>,
    /// `log p(y_i | theta)` per unit.
    pub loglik: Vec<Vec<f64>>,
    /// Post-burn-in acceptance rates, one entry per chain.
    pub acceptance_rho: Vec<f64>,
    pub acceptance_xi: Vec<f64>,
}

impl ChainOutput {
    pub fn empty(unit_ids: Vec<String>, times: Vec<String>, predictors: Vec<String>, config: &ChainConfig) -> Self {
        Self {
            unit_ids,
            times,
            predictors,
            config: config.to_pairs(),
            chain: vec![],
            s: vec![],
            k: vec![],
            sigma2: vec![],
            tau2: vec![],
            rho: vec![],
            alpha: vec![],
            beta: vec![],
            xi: vec![],
            w: vec![],
            loglik: vec![],
            acceptance_rho: vec![],
            acceptance_xi: vec![],
        }
    }

    pub fn n_draws(&self) -> usize {
        self.sigma2.len()
    }

    pub fn n_units(&self) -> usize {
        self.unit_ids.len()
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    /// Coefficients per unit, including the intercept.
    pub fn n_coef(&self) -> usize {
        self.predictors.len() + 1
    }

    pub fn push(&mut self, chain: usize, state: &ModelState, loglik: Vec<f64>) {
        let c = &state.cluster;
        let n = c.n_units();
        self.chain.push(chain);
        self.s.push(c.s.clone());
        self.k.push(c.k());
        self.sigma2.push(state.sigma2);
        self.tau2.push(state.tau2);
        self.rho.push(state.rho);
        self.alpha.push(c.alpha);
        self.beta.push((0..n).flat_map(|i| c.unit_beta(i).iter().copied().collect::<Vec<_>>()).collect());
        self.xi.push(c.unit_xis());
        self.w.push((0..n).flat_map(|i| state.w.row(i).iter().copied().collect::<Vec<_>>()).collect());
        self.loglik.push(loglik);
    }

    /// Coefficients of unit `i` in draw `m`.
    pub fn unit_beta(&self, m: usize, i: usize) -> &[f64] {
        let p1 = self.n_coef();
        &self.beta[m][i * p1..(i + 1) * p1]
    }

    /// Random effects of draw `m` as an I×T matrix.
    pub fn w_matrix(&self, m: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_units(), self.n_times(), &self.w[m])
    }

    pub fn partitions(&self) -> Vec<Partition> {
        self.s.iter().map(|s| Partition::from_labels(s)).collect()
    }

    /// Draws per value of K.
    pub fn k_counts(&self) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        self.k.iter().for_each(|&k| *m.entry(k).or_default() += 1);
        m
    }

    /// Concatenate outputs from chains on the same panel.
    pub fn merge(outputs: Vec<ChainOutput>) -> Result<ChainOutput> {
        let mut it = outputs.into_iter();
        let mut out = it.next().ok_or_else(|| BstcError::Empty("no chain outputs to merge".into()))?;
        for o in it {
            if o.unit_ids != out.unit_ids || o.times != out.times || o.predictors != out.predictors {
                return Err(BstcError::DimensionMismatch("chain outputs describe different panels".into()));
            }
            out.chain.extend(o.chain);
            out.s.extend(o.s);
            out.k.extend(o.k);
            out.sigma2.extend(o.sigma2);
            out.tau2.extend(o.tau2);
            out.rho.extend(o.rho);
            out.alpha.extend(o.alpha);
            out.beta.extend(o.beta);
            out.xi.extend(o.xi);
            out.w.extend(o.w);
            out.loglik.extend(o.loglik);
            out.acceptance_rho.extend(o.acceptance_rho);
            out.acceptance_xi.extend(o.acceptance_xi);
        }
        Ok(out)
    }

    /// Write the output directory: `meta`, `scalars.csv`, `allocations.csv`,
    /// `beta.csv`, `xi.csv`, `w.csv` and `loglik.csv`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut meta = format!(
            "format = {FORMAT}\nn_units = {}\nn_times = {}\np = {}\ntimes = {}\npredictors = {}\nacceptance_rho = {}\nacceptance_xi = {}\n",
            self.n_units(),
            self.n_times(),
            self.predictors.len(),
            self.times.join("\t"),
            self.predictors.join("\t"),
            join(&self.acceptance_rho),
            join(&self.acceptance_xi),
        );
        for (k, v) in &self.config {
            meta.push_str(&format!("config.{k} = {v}\n"));
        }
        let meta_path = dir.join("meta");
        fs::write(&meta_path, meta).map_err(|e| io_err(&meta_path, e))?;

        let scalars: Vec<Vec<String>> = (0..self.n_draws())
            .map(|m| {
                vec![
                    m.to_string(),
                    self.chain[m].to_string(),
                    self.sigma2[m].to_string(),
                    self.tau2[m].to_string(),
                    self.rho[m].to_string(),
                    self.alpha[m].to_string(),
                    self.k[m].to_string(),
                ]
            })
            .collect();
        write_csv(&dir.join("scalars.csv"), &["draw", "chain", "sigma2", "tau2", "rho", "alpha", "k"].map(String::from), scalars)?;

        let units = self.unit_ids.clone();
        let alloc = self.s.iter().map(|s| s.iter().map(|l| (l + 1).to_string()).collect()).collect();
        write_csv(&dir.join("allocations.csv"), &units, alloc)?;
        write_csv(&dir.join("xi.csv"), &units, floats(&self.xi))?;
        write_csv(&dir.join("loglik.csv"), &units, floats(&self.loglik))?;
        let coef_names: Vec<String> = std::iter::once("intercept".to_string()).chain(self.predictors.iter().cloned()).collect();
        let beta_header: Vec<String> =
            units.iter().flat_map(|u| coef_names.iter().map(move |c| format!("{u}:{c}"))).collect();
        write_csv(&dir.join("beta.csv"), &beta_header, floats(&self.beta))?;
        let w_header: Vec<String> = units.iter().flat_map(|u| self.times.iter().map(move |t| format!("{u}:{t}"))).collect();
        write_csv(&dir.join("w.csv"), &w_header, floats(&self.w))?;
        Ok(())
    }

    /// Read a directory written by [`ChainOutput::write_dir`].
    pub fn read_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta_path = dir.join("meta");
        let text = fs::read_to_string(&meta_path).map_err(|e| io_err(&meta_path, e))?;
        let mut meta: BTreeMap<String, String> = BTreeMap::new();
        let mut config = Vec::new();
        for line in text.lines() {
            let Some((k, v)) = line.split_once(" = ").or_else(|| line.split_once('=')) else {
                continue;
            };
            let (k, v) = (k.trim().to_string(), v.trim_end().trim_start_matches(' ').to_string());
            if let Some(key) = k.strip_prefix("config.") {
                config.push((key.to_string(), v));
            } else {
                meta.insert(k, v);
            }
        }
        let ctx = meta_path.display().to_string();
        let get = |k: &str| meta.get(k).cloned().ok_or_else(|| BstcError::parse(&ctx, format!("missing {k}")));
        if get("format")? != FORMAT {
            return Err(BstcError::parse(&ctx, "not a chain output directory"));
        }
        let split_tab = |s: String| if s.is_empty() { vec![] } else { s.split('\t').map(String::from).collect::<Vec<_>>() };
        let times = split_tab(get("times")?);
        let predictors = split_tab(get("predictors")?);
        let parse_list = |s: String| -> Result<Vec<f64>> {
            if s.is_empty() {
                return Ok(vec![]);
            }
            s.split(',').map(|x| x.parse().map_err(|_| BstcError::parse(&ctx, format!("bad number {x:?}")))).collect()
        };
        let acceptance_rho = parse_list(get("acceptance_rho")?)?;
        let acceptance_xi = parse_list(get("acceptance_xi")?)?;

        let (units, alloc) = read_csv(&dir.join("allocations.csv"))?;
        let n = units.len();
        let s: Vec<Vec<usize>> = alloc
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| match v.parse::<usize>() {
                        Ok(l) if l >= 1 => Ok(l - 1),
                        _ => Err(BstcError::parse("allocations.csv", format!("bad label {v:?}"))),
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let (_, sc) = read_csv(&dir.join("scalars.csv"))?;
        let col = |j: usize| -> Result<Vec<f64>> {
            sc.iter().map(|r| r[j].parse().map_err(|_| BstcError::parse("scalars.csv", format!("bad number {:?}", r[j])))).collect()
        };
        let chain = col(1)?.into_iter().map(|v| v as usize).collect();
        let k = col(6)?.into_iter().map(|v| v as usize).collect();
        let out = Self {
            config,
            chain,
            s,
            k,
            sigma2: col(2)?,
            tau2: col(3)?,
            rho: col(4)?,
            alpha: col(5)?,
            beta: read_floats(&dir.join("beta.csv"), n * (predictors.len() + 1))?,
            xi: read_floats(&dir.join("xi.csv"), n)?,
            w: read_floats(&dir.join("w.csv"), n * times.len())?,
            loglik: read_floats(&dir.join("loglik.csv"), n)?,
            unit_ids: units,
            times,
            predictors,
            acceptance_rho,
            acceptance_xi,
        };
        let m = out.n_draws();
        if [out.s.len(), out.beta.len(), out.xi.len(), out.w.len(), out.loglik.len()].iter().any(|&l| l != m) {
            return Err(BstcError::parse(dir.display().to_string(), "draw counts differ between files"));
        }
        Ok(out)
    }
}

fn io_err(path: &Path, e: std::io::Error) -> BstcError {
    BstcError::Io { path: path.to_path_buf(), source: e }
}

fn floats(rows: &[Vec<f64>]) -> Vec<Vec<String>> {
    rows.iter().map(|r| r.iter().map(|v| v.to_string()).collect()).collect()
}

fn write_csv(path: &PathBuf, header: &[String], rows: Vec<Vec<String>>) -> Result<()> {
    let csv_err = |e| BstcError::Csv { path: path.clone(), source: e };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn read_csv(path: &PathBuf) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let csv_err = |e| BstcError::Csv { path: path.clone(), source: e };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()).map_err(csv_err))
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

fn read_floats(path: &PathBuf, width: usize) -> Result<Vec<Vec<f64>>> {
    let (header, rows) = read_csv(path)?;
    if header.len() != width {
        return Err(BstcError::parse(path.display().to_string(), format!("expected {width} columns, found {}", header.len())));
    }
    rows.into_iter()
        .map(|r| {
            r.iter()
                .map(|v| v.parse().map_err(|_| BstcError::parse(path.display().to_string(), format!("bad number {v:?}"))))
                .collect()
        })
        .collect()
}
