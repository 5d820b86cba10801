//! Leroux CAR precision in band storage and bandwidth-reducing reordering.

mod banded;
mod rcm;

pub use banded::{BandMatrix, BandedSPD};
pub use rcm::reverse_cuthill_mckee;

use crate::data::AdjacencyGraph;
use crate::error::{BstcError, Result};

/// `Q(rho, W) = rho * (diag(W 1) - W) + (1 - rho) * I`, laid out under the
/// graph's permutation (band position `k` is unit `graph.permutation()[k]`).
///
/// `rho = 1` is the intrinsic CAR limit, which is singular and rejected.
pub fn leroux_precision(rho: f64, graph: &AdjacencyGraph) -> Result<BandedSPD> {
    if rho == 1.0 {
        return Err(BstcError::SingularPrecision(rho));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(BstcError::invalid("rho", format!("{rho} outside [0, 1)")));
    }
    let n = graph.n();
    let perm = graph.permutation();
    let pos = graph.positions();
    let mut q = BandedSPD::zeros(n, graph.bandwidth());
    for (k, &i) in perm.iter().enumerate() {
        q.set(k, k, rho * graph.degree(i) as f64 + 1.0 - rho);
        for &j in graph.neighbors(i) {
            let l = pos[j];
            if l < k {
                q.set(k, l, -rho);
            }
        }
    }
    Ok(q)
}
