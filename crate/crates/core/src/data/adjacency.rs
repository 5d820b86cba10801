use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::error::{BstcError, Result};

/// Symmetric 0/1 neighbour structure over `n` units.
///
/// Neighbour lists always use the original unit labels. `permutation` is the
/// ordering used when the graph is laid out as a band matrix: position `k`
/// of the band holds original unit `permutation[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyGraph {
    n: usize,
    neighbors: Vec<Vec<usize>>,
    permutation: Vec<usize>,
}

impl AdjacencyGraph {
    /// Build from an undirected edge list. Duplicate edges (in either
    /// orientation) are dropped with a warning; self-loops are an error.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut sets = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(BstcError::UnknownUnit(format!("index {} out of range", a.max(b))));
            }
            if a == b {
                return Err(BstcError::SelfLoop(a.to_string()));
            }
            if !sets[a].insert(b) {
                log::warn!("duplicate edge ({a}, {b}) ignored");
            }
            sets[b].insert(a);
        }
        Ok(Self {
            n,
            neighbors: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
            permutation: (0..n).collect(),
        })
    }

    /// Rook (edge-sharing) adjacency on a `rows`×`cols` grid, row-major labels.
    pub fn rook_grid(rows: usize, cols: usize) -> Self {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                if c + 1 < cols {
                    edges.push((i, i + 1));
                }
                if r + 1 < rows {
                    edges.push((i, i + cols));
                }
            }
        }
        Self::from_edges(rows * cols, &edges).expect("grid edges are valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn neighbor_counts(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn n_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Each undirected edge once, as `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Inverse of the permutation: band position of each original unit.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.n];
        for (k, &i) in self.permutation.iter().enumerate() {
            pos[i] = k;
        }
        pos
    }

    pub fn with_permutation(&self, permutation: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; self.n];
        if permutation.len() != self.n
            || permutation.iter().any(|&i| i >= self.n || std::mem::replace(&mut seen[i], true))
        {
            return Err(BstcError::invalid("permutation", "not a bijection on the units"));
        }
        Ok(Self {
            permutation,
            ..self.clone()
        })
    }

    /// Half-bandwidth of the adjacency matrix laid out in `order`.
    pub fn bandwidth_under(&self, order: &[usize]) -> usize {
        let mut pos = vec![0; self.n];
        for (k, &i) in order.iter().enumerate() {
            pos[i] = k;
        }
        self.edges()
            .map(|(i, j)| pos[i].abs_diff(pos[j]))
            .max()
            .unwrap_or(0)
    }

    /// Half-bandwidth under the graph's own permutation.
    pub fn bandwidth(&self) -> usize {
        self.bandwidth_under(&self.permutation)
    }

    /// The same graph with units relabelled by the permutation (position `k`
    /// becomes label `k`), carrying the identity permutation.
    pub fn relabeled(&self) -> Self {
        let pos = self.positions();
        let mut neighbors = vec![Vec::new(); self.n];
        for (k, &i) in self.permutation.iter().enumerate() {
            let mut nb: Vec<usize> = self.neighbors[i].iter().map(|&j| pos[j]).collect();
            nb.sort_unstable();
            neighbors[k] = nb;
        }
        Self {
            n: self.n,
            neighbors,
            permutation: (0..self.n).collect(),
        }
    }
}

/// Read an edge-list CSV with header `unit_a,unit_b` over the given units.
pub fn load_adjacency(path: impl AsRef<Path>, unit_ids: &[String]) -> Result<AdjacencyGraph> {
    let path = path.as_ref();
    let csv_err = |source| BstcError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let index: HashMap<&str, usize> = unit_ids.iter().enumerate().map(|(i, u)| (u.as_str(), i)).collect();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let mut edges = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let a = record.get(0).unwrap_or("");
        let b = record.get(1).unwrap_or("");
        let ia = *index.get(a).ok_or_else(|| BstcError::UnknownUnit(a.to_string()))?;
        let ib = *index.get(b).ok_or_else(|| BstcError::UnknownUnit(b.to_string()))?;
        if ia == ib {
            return Err(BstcError::SelfLoop(a.to_string()));
        }
        edges.push((ia, ib));
    }
    AdjacencyGraph::from_edges(unit_ids.len(), &edges)
}

/// Write each edge once as `unit_a,unit_b`.
pub fn write_adjacency(path: impl AsRef<Path>, graph: &AdjacencyGraph, unit_ids: &[String]) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |source| BstcError::Csv {
        path: path.to_path_buf(),
        source,
    };
    if unit_ids.len() != graph.n() {
        return Err(BstcError::DimensionMismatch(format!(
            "{} unit ids for a graph on {} units",
            unit_ids.len(),
            graph.n()
        )));
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["unit_a", "unit_b"]).map_err(csv_err)?;
    for (a, b) in graph.edges() {
        w.write_record([&unit_ids[a], &unit_ids[b]]).map_err(csv_err)?;
    }
    w.flush().map_err(|source| BstcError::Io {
        path: path.to_path_buf(),
        source,
    })
}
