use std::collections::VecDeque;

use crate::data::AdjacencyGraph;

/// Reverse Cuthill–McKee ordering: `order[k]` is the unit placed at band
/// position `k`.
///
/// Each connected component is traversed breadth-first from its
/// minimum-degree node (lowest index on ties); neighbours are enqueued by
/// ascending degree, then ascending index. The concatenated order is
/// reversed. If the result would widen the band relative to the identity
/// ordering, the identity is returned instead.
pub fn reverse_cuthill_mckee(graph: &AdjacencyGraph) -> Vec<usize> {
    let n = graph.n();
    let degree = graph.neighbor_counts();
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = graph
                .neighbors(v)
                .iter()
                .copied()
                .filter(|&u| !visited[u])
                .collect();
            next.sort_by_key(|&u| (degree[u], u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();

    let identity: Vec<usize> = (0..n).collect();
    if graph.bandwidth_under(&order) > graph.bandwidth_under(&identity) {
        identity
    } else {
        order
    }
}
