use std::collections::HashMap;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{BstcError, Result};

/// Column names of the panel CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanelSchema {
    pub unit: String,
    pub time: String,
    pub response: String,
    /// Predictor columns in order. `None` takes every remaining column.
    pub predictors: Option<Vec<String>>,
}

impl Default for PanelSchema {
    fn default() -> Self {
        Self {
            unit: "unit".into(),
            time: "time".into(),
            response: "y".into(),
            predictors: None,
        }
    }
}

/// Areal panel: response `y` (I×T) and per-unit design matrices `x[i]`
/// (T×(p+1)) whose first column is the constant intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelData {
    pub unit_ids: Vec<String>,
    pub times: Vec<String>,
    pub predictor_names: Vec<String>,
    pub y: DMatrix<f64>,
    pub x: Vec<DMatrix<f64>>,
}

impl PanelData {
    pub fn new(
        unit_ids: Vec<String>,
        times: Vec<String>,
        predictor_names: Vec<String>,
        y: DMatrix<f64>,
        x: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let (n, t) = (unit_ids.len(), times.len());
        if n == 0 || t == 0 {
            return Err(BstcError::Empty("panel needs at least one unit and one time".into()));
        }
        if y.nrows() != n || y.ncols() != t {
            return Err(BstcError::DimensionMismatch(format!(
                "y is {}x{}, expected {n}x{t}",
                y.nrows(),
                y.ncols()
            )));
        }
        if x.len() != n {
            return Err(BstcError::DimensionMismatch(format!(
                "{} design matrices for {n} units",
                x.len()
            )));
        }
        let k = predictor_names.len() + 1;
        for (i, xi) in x.iter().enumerate() {
            if xi.nrows() != t || xi.ncols() != k {
                return Err(BstcError::DimensionMismatch(format!(
                    "design matrix of unit {} is {}x{}, expected {t}x{k}",
                    unit_ids[i],
                    xi.nrows(),
                    xi.ncols()
                )));
            }
            if xi.column(0).iter().any(|&v| v != 1.0) {
                return Err(BstcError::invalid("x", "column 0 must be the constant intercept"));
            }
        }
        if y.iter().chain(x.iter().flat_map(|m| m.iter())).any(|v| !v.is_finite()) {
            return Err(BstcError::invalid("panel", "non-finite value"));
        }
        Ok(Self {
            unit_ids,
            times,
            predictor_names,
            y,
            x,
        })
    }

    pub fn n_units(&self) -> usize {
        self.unit_ids.len()
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    /// Number of predictors, excluding the intercept.
    pub fn p(&self) -> usize {
        self.predictor_names.len()
    }

    /// Keep the first `t` time points.
    pub fn truncate_times(&self, t: usize) -> Result<Self> {
        if t == 0 || t > self.n_times() {
            return Err(BstcError::invalid(
                "t",
                format!("cannot keep {t} of {} time points", self.n_times()),
            ));
        }
        Ok(Self {
            unit_ids: self.unit_ids.clone(),
            times: self.times[..t].to_vec(),
            predictor_names: self.predictor_names.clone(),
            y: self.y.columns(0, t).into_owned(),
            x: self.x.iter().map(|m| m.rows(0, t).into_owned()).collect(),
        })
    }

    /// Reorder units so that position `k` holds original unit `order[k]`.
    pub fn reorder_units(&self, order: &[usize]) -> Self {
        let t = self.n_times();
        Self {
            unit_ids: order.iter().map(|&i| self.unit_ids[i].clone()).collect(),
            times: self.times.clone(),
            predictor_names: self.predictor_names.clone(),
            y: DMatrix::from_fn(order.len(), t, |k, s| self.y[(order[k], s)]),
            x: order.iter().map(|&i| self.x[i].clone()).collect(),
        }
    }

    /// Linear predictor `x_it' beta` for unit `i` over all times.
    pub fn fitted_unit(&self, i: usize, beta: &[f64]) -> Vec<f64> {
        let xi = &self.x[i];
        (0..self.n_times())
            .map(|t| (0..xi.ncols()).map(|k| xi[(t, k)] * beta[k]).sum())
            .collect()
    }
}

fn parse_f64(field: &str, row: usize, column: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| {
        BstcError::parse(
            format!("row {row}, column {column}"),
            format!("non-numeric field {field:?}"),
        )
    })
}

fn sort_time_labels(times: &mut [String]) {
    let numeric: Option<Vec<f64>> = times.iter().map(|s| s.trim().parse().ok()).collect();
    match numeric {
        Some(_) => times.sort_by(|a, b| {
            let (x, y): (f64, f64) = (a.trim().parse().unwrap(), b.trim().parse().unwrap());
            x.total_cmp(&y)
        }),
        None => times.sort(),
    }
}

/// Read a long-format panel CSV (`unit,time,y,x1,...,xp`). Units keep the
/// order of first appearance, times are sorted ascending (numerically when
/// every label parses as a number), and an intercept column is prepended.
pub fn load_panel(path: impl AsRef<Path>, schema: &PanelSchema) -> Result<PanelData> {
    let path = path.as_ref();
    let csv_err = |source| BstcError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| BstcError::parse(path.display().to_string(), format!("missing column {name:?}")))
    };
    let unit_col = col(&schema.unit)?;
    let time_col = col(&schema.time)?;
    let y_col = col(&schema.response)?;
    let predictor_names: Vec<String> = match &schema.predictors {
        Some(names) => names.clone(),
        None => headers
            .iter()
            .enumerate()
            .filter(|(k, _)| ![unit_col, time_col, y_col].contains(k))
            .map(|(_, h)| h.to_string())
            .collect(),
    };
    let predictor_cols = predictor_names
        .iter()
        .map(|n| col(n))
        .collect::<Result<Vec<_>>>()?;

    let mut unit_ids: Vec<String> = Vec::new();
    let mut unit_index: HashMap<String, usize> = HashMap::new();
    let mut time_labels: Vec<String> = Vec::new();
    let mut rows: HashMap<(usize, String), (f64, Vec<f64>)> = HashMap::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = r + 2;
        let field = |c: usize| record.get(c).unwrap_or("");
        let unit = field(unit_col).to_string();
        let time = field(time_col).to_string();
        let y = parse_f64(field(y_col), row, &schema.response)?;
        let xs = predictor_cols
            .iter()
            .zip(&predictor_names)
            .map(|(&c, name)| parse_f64(field(c), row, name))
            .collect::<Result<Vec<_>>>()?;
        let ui = *unit_index.entry(unit.clone()).or_insert_with(|| {
            unit_ids.push(unit.clone());
            unit_ids.len() - 1
        });
        if !time_labels.contains(&time) {
            time_labels.push(time.clone());
        }
        if rows.insert((ui, time.clone()), (y, xs)).is_some() {
            return Err(BstcError::DuplicateRow { unit, time });
        }
    }
    if rows.is_empty() {
        return Err(BstcError::Empty(path.display().to_string()));
    }
    sort_time_labels(&mut time_labels);

    let (n, t, k) = (unit_ids.len(), time_labels.len(), predictor_names.len() + 1);
    let mut y = DMatrix::zeros(n, t);
    let mut x = vec![DMatrix::zeros(t, k); n];
    for (i, unit) in unit_ids.iter().enumerate() {
        for (s, time) in time_labels.iter().enumerate() {
            let (yv, xv) = rows
                .get(&(i, time.clone()))
                .ok_or_else(|| BstcError::IncompletePanel {
                    unit: unit.clone(),
                    time: time.clone(),
                })?;
            y[(i, s)] = *yv;
            x[i][(s, 0)] = 1.0;
            for (c, v) in xv.iter().enumerate() {
                x[i][(s, c + 1)] = *v;
            }
        }
    }
    PanelData::new(unit_ids, time_labels, predictor_names, y, x)
}

/// Overall location and scale of the response (index 0) and of each
/// predictor (index `c` for predictor column `c`).
#[derive(Debug, Clone, PartialEq)]
pub struct Scaling {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Scaling {
    pub fn unstandardize(&self, data: &PanelData) -> PanelData {
        let mut out = data.clone();
        out.y.apply(|v| *v = *v * self.sds[0] + self.means[0]);
        for xi in out.x.iter_mut() {
            for c in 1..xi.ncols() {
                xi.column_mut(c).apply(|v| *v = *v * self.sds[c] + self.means[c]);
            }
        }
        out
    }
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Center and scale the response and every non-intercept predictor by its
/// overall mean and sample standard deviation across all I·T cells. The
/// standard deviation uses the denominator I·T − 1.
pub fn standardize(data: &PanelData) -> Result<(PanelData, Scaling)> {
    let k = data.p() + 1;
    let mut means = vec![0.0; k];
    let mut sds = vec![1.0; k];
    if data.y.len() < 2 {
        return Err(BstcError::ZeroVariance("response (single cell)".into()));
    }
    let (m, s) = mean_sd(data.y.iter().copied());
    if !(s > 0.0) {
        return Err(BstcError::ZeroVariance("response".into()));
    }
    means[0] = m;
    sds[0] = s;
    for c in 1..k {
        let (m, s) = mean_sd(data.x.iter().flat_map(|xi| xi.column(c).iter().copied().collect::<Vec<_>>()));
        if !(s > 0.0) {
            return Err(BstcError::ZeroVariance(data.predictor_names[c - 1].clone()));
        }
        means[c] = m;
        sds[c] = s;
    }
    let mut out = data.clone();
    out.y.apply(|v| *v = (*v - means[0]) / sds[0]);
    for xi in out.x.iter_mut() {
        for c in 1..k {
            xi.column_mut(c).apply(|v| *v = (*v - means[c]) / sds[c]);
        }
    }
    Ok((out, Scaling { means, sds }))
}

/// Write `data` in the long format read by [`load_panel`] (intercept
/// column omitted).
pub fn write_panel(path: impl AsRef<Path>, data: &PanelData) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |source| BstcError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["unit".to_string(), "time".to_string(), "y".to_string()];
    header.extend(data.predictor_names.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for (i, unit) in data.unit_ids.iter().enumerate() {
        for (t, time) in data.times.iter().enumerate() {
            let mut rec = vec![unit.clone(), time.clone(), data.y[(i, t)].to_string()];
            rec.extend((1..=data.p()).map(|k| data.x[i][(t, k)].to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|source| BstcError::Io {
        path: path.to_path_buf(),
        source,
    })
}
