use std::fmt::Write as _;
use std::path::Path;

use super::{OneStepAhead, Waic};
use crate::error::{BstcError, Result};

/// Everything `metrics` reports. Either part may be absent when it was not
/// requested.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub waic: Option<Waic>,
    pub one_step: Option<OneStepAhead>,
}

impl MetricReport {
    /// Rows of `(metric, year, value)`; `year` is empty for whole-sample
    /// metrics and averages.
    pub fn rows(&self) -> Vec<(String, String, f64)> {
        let mut rows = Vec::new();
        if let Some(w) = &self.waic {
            rows.push(("waic".into(), String::new(), w.waic));
            rows.push(("lppd".into(), String::new(), w.lppd));
            rows.push(("p_waic".into(), String::new(), w.p_waic));
        }
        if let Some(o) = &self.one_step {
            for (name, vals) in [("pred_loglik", &o.loglik), ("rmse", &o.rmse), ("mae", &o.mae)] {
                for (y, v) in o.years.iter().zip(vals.iter()) {
                    rows.push((name.into(), y.clone(), *v));
                }
            }
            rows.push(("lml_sum".into(), String::new(), o.lml_sum()));
            rows.push(("rmse_avg".into(), String::new(), o.avg_rmse()));
            rows.push(("mae_avg".into(), String::new(), o.avg_mae()));
        }
        rows
    }

    /// Plain-text table for the terminal.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        if let Some(w) = &self.waic {
            let _ = writeln!(s, "WAIC {:.3}  (lppd {:.3}, p_waic {:.3})", w.waic, w.lppd, w.p_waic);
        }
        if let Some(o) = &self.one_step {
            let _ = writeln!(s, "{:>8} {:>12} {:>8} {:>8}", "year", "pred_loglik", "rmse", "mae");
            for i in 0..o.years.len() {
                let _ = writeln!(s, "{:>8} {:>12.3} {:>8.3} {:>8.3}", o.years[i], o.loglik[i], o.rmse[i], o.mae[i]);
            }
            let _ = writeln!(s, "{:>8} {:>12.3} {:>8.3} {:>8.3}", "total", o.lml_sum(), o.avg_rmse(), o.avg_mae());
        }
        s
    }
}

/// Write `metric,year,value` rows.
pub fn write_metrics_csv(path: impl AsRef<Path>, report: &MetricReport) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |source| BstcError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["metric", "year", "value"]).map_err(csv_err)?;
    for (m, y, v) in report.rows() {
        w.write_record([m, y, format!("{v:.17e}")]).map_err(csv_err)?;
    }
    w.flush().map_err(|source| BstcError::Io { path: path.to_path_buf(), source })
}
