use super::AdjacencyGraph;
use crate::error::{BstcError, Result};

fn centered(values: &[f64], graph: &AdjacencyGraph) -> Result<(Vec<f64>, f64, f64)> {
    if values.len() != graph.n() {
        return Err(BstcError::DimensionMismatch(format!(
            "{} values for {} units",
            values.len(),
            graph.n()
        )));
    }
    if values.len() < 2 {
        return Err(BstcError::invalid("values", "need at least two units"));
    }
    if graph.n_edges() == 0 {
        return Err(BstcError::EmptyGraph);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let dev: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let ss: f64 = dev.iter().map(|d| d * d).sum();
    if ss <= f64::EPSILON * values.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE) {
        return Err(BstcError::ConstantInput);
    }
    // S0 counts both orientations of every edge.
    let s0 = 2.0 * graph.n_edges() as f64;
    Ok((dev, ss, s0))
}

/// Moran's I with binary symmetric weights.
pub fn morans_i(values: &[f64], graph: &AdjacencyGraph) -> Result<f64> {
    let (dev, ss, s0) = centered(values, graph)?;
    let cross: f64 = graph.edges().map(|(i, j)| 2.0 * dev[i] * dev[j]).sum();
    Ok(values.len() as f64 / s0 * cross / ss)
}

/// Geary's C with binary symmetric weights.
pub fn gearys_c(values: &[f64], graph: &AdjacencyGraph) -> Result<f64> {
    let (_, ss, s0) = centered(values, graph)?;
    let diff: f64 = graph
        .edges()
        .map(|(i, j)| 2.0 * (values[i] - values[j]).powi(2))
        .sum();
    Ok((values.len() as f64 - 1.0) / (2.0 * s0) * diff / ss)
}
