use nalgebra::DMatrix;

use super::{better, check_draws, enumerate_partitions, weighted_unique, Partition, EXHAUSTIVE_LIMIT, TIE_TOL};
use crate::error::{BstcError, Result};

/// Posterior co-clustering probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    s: DMatrix<f64>,
}

impl SimilarityMatrix {
    pub fn n(&self) -> usize {
        self.s.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.s[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }
}

/// `S_ij` = fraction of draws placing `i` and `j` together.
pub fn posterior_similarity_matrix(draws: &[Partition]) -> Result<SimilarityMatrix> {
    let n = check_draws(draws)?;
    let mut s = DMatrix::zeros(n, n);
    for (d, w) in weighted_unique(draws) {
        let l = d.labels();
        for i in 0..n {
            for j in 0..i {
                if l[i] == l[j] {
                    s[(i, j)] += w;
                }
            }
        }
    }
    for i in 0..n {
        s[(i, i)] = 1.0;
        for j in 0..i {
            s[(i, j)] = s[(i, j)].min(1.0);
            s[(j, i)] = s[(i, j)];
        }
    }
    Ok(SimilarityMatrix { s })
}

/// `f(s) = sum_{i<j} 1{s_i = s_j} (S_ij - b / (a + b))`; maximizing it
/// minimizes the posterior expected Binder loss.
pub fn binder_score(labels: &[usize], sim: &SimilarityMatrix, a: f64, b: f64) -> f64 {
    let thr = b / (a + b);
    let mut f = 0.0;
    for i in 0..labels.len() {
        for j in 0..i {
            if labels[i] == labels[j] {
                f += sim.get(i, j) - thr;
            }
        }
    }
    f
}

/// Single-unit reassignment hill climbing from `start`.
fn refine(start: &[usize], sim: &SimilarityMatrix, thr: f64) -> Vec<usize> {
    let n = start.len();
    let mut labels = start.to_vec();
    let mut sizes = vec![0usize; n + 1];
    labels.iter().for_each(|&l| sizes[l] += 1);
    loop {
        let mut improved = false;
        for u in 0..n {
            let g = labels[u];
            // gain[h] = sum_{j in h, j != u} (S_uj - thr)
            let mut gain = vec![0.0; n + 1];
            for j in (0..n).filter(|&j| j != u) {
                gain[labels[j]] += sim.get(u, j) - thr;
            }
            let mut best = (0.0, g);
            for h in 0..=n {
                if h == g || (sizes[h] == 0 && sizes[g] == 1) {
                    continue;
                }
                if sizes[h] == 0 && (0..h).any(|e| e != g && sizes[e] == 0) {
                    continue;
                }
                let delta = gain[h] - gain[g];
                if delta > best.0 + TIE_TOL {
                    best = (delta, h);
                }
            }
            if best.1 != g {
                sizes[g] -= 1;
                sizes[best.1] += 1;
                labels[u] = best.1;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    Partition::from_labels(&labels).labels().to_vec()
}

fn check_costs(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(BstcError::invalid("a/b", format!("misclassification costs must be positive, got a = {a}, b = {b}")));
    }
    Ok(())
}

/// Binder point estimate. For up to [`EXHAUSTIVE_LIMIT`] units every
/// partition is scored; otherwise the candidates are the distinct sampled
/// partitions plus a hill-climbing refinement of the best of them.
pub fn minimize_binder(sim: &SimilarityMatrix, draws: &[Partition], a: f64, b: f64) -> Result<Partition> {
    let n = check_draws(draws)?;
    check_costs(a, b)?;
    if sim.n() != n {
        return Err(BstcError::DimensionMismatch(format!("similarity of order {} for {n} units", sim.n())));
    }
    let thr = b / (a + b);
    let mut best: Vec<usize> = draws[0].labels().to_vec();
    let mut best_score = binder_score(&best, sim, a, b);
    let consider = |cand: &[usize], best: &mut Vec<usize>, best_score: &mut f64| {
        let score = binder_score(cand, sim, a, b);
        if better(score, cand, *best_score, best) {
            *best = cand.to_vec();
            *best_score = score;
        }
    };
    if n <= EXHAUSTIVE_LIMIT {
        for cand in enumerate_partitions(n) {
            consider(&cand, &mut best, &mut best_score);
        }
    } else {
        for (d, _) in weighted_unique(draws) {
            consider(d.labels(), &mut best, &mut best_score);
        }
        let refined = refine(&best.clone(), sim, thr);
        consider(&refined, &mut best, &mut best_score);
    }
    Ok(Partition::from_labels(&best))
}
