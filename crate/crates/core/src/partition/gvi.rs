use rayon::prelude::*;

use super::{
    better, check_draws, enumerate_partitions, partition_entropy, weighted_unique, xlog2x, Partition,
    EXHAUSTIVE_LIMIT, TIE_TOL,
};
use crate::error::{BstcError, Result};

/// Weight on the joint-entropy term of the generalized variation of
/// information: `a + b`, or their mean `(a + b) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JointEntropyScale {
    #[default]
    Sum,
    Mean,
}

impl JointEntropyScale {
    fn factor(self, a: f64, b: f64) -> f64 {
        match self {
            Self::Sum => a + b,
            Self::Mean => 0.5 * (a + b),
        }
    }
}

/// `sum_cells xlog2x(count)` of the intersection of two label vectors.
fn joint_xlogx(a: &[usize], ka: usize, b: &[usize], kb: usize) -> f64 {
    let mut cells = vec![0usize; ka * kb];
    for (&x, &y) in a.iter().zip(b) {
        cells[x * kb + y] += 1;
    }
    cells.iter().map(|&c| xlog2x(c as f64)).sum()
}

fn k_of(l: &[usize]) -> usize {
    l.iter().max().map_or(0, |m| m + 1)
}

struct Draws<'a> {
    n: usize,
    items: Vec<(&'a Partition, f64)>,
    /// Weighted mean entropy of the draws.
    mean_h: f64,
}

impl<'a> Draws<'a> {
    fn new(draws: &'a [Partition]) -> Result<Self> {
        let n = check_draws(draws)?;
        let items = weighted_unique(draws);
        let mean_h = items.iter().map(|(d, w)| w * partition_entropy(d)).sum();
        Ok(Self { n, items, mean_h })
    }

    /// Expected loss of the candidate labels.
    fn loss(&self, cand: &[usize], a: f64, b: f64, scale: JointEntropyScale) -> f64 {
        let nf = self.n as f64;
        let kc = k_of(cand);
        let h_cand = partition_entropy(&Partition::from_labels(cand));
        let mean_joint: f64 = self
            .items
            .iter()
            .map(|(d, w)| {
                let s = joint_xlogx(d.labels(), d.k(), cand, kc);
                w * (nf.log2() - s / nf)
            })
            .sum();
        -a * self.mean_h - b * h_cand + scale.factor(a, b) * mean_joint
    }
}

/// Posterior expected generalized variation of information of `estimate`
/// against the draws, in bits.
pub fn expected_gvi(estimate: &Partition, draws: &[Partition], a: f64, b: f64, scale: JointEntropyScale) -> Result<f64> {
    let d = Draws::new(draws)?;
    if estimate.n() != d.n {
        return Err(BstcError::DimensionMismatch(format!("estimate of {} items, draws of {}", estimate.n(), d.n)));
    }
    Ok(d.loss(estimate.labels(), a, b, scale))
}

/// Hill climbing on single-unit moves, tracking each draw's contingency table
/// so a move costs O(number of distinct draws).
fn refine(start: &[usize], d: &Draws<'_>, a: f64, b: f64, scale: JointEntropyScale) -> Vec<usize> {
    let n = d.n;
    let cap = n + 1;
    let s = scale.factor(a, b);
    let mut labels = start.to_vec();
    let mut sizes = vec![0usize; cap];
    labels.iter().for_each(|&l| sizes[l] += 1);
    let mut tables: Vec<Vec<u32>> = d
        .items
        .iter()
        .map(|(p, _)| {
            let mut t = vec![0u32; p.k() * cap];
            for (&x, &y) in p.labels().iter().zip(&labels) {
                t[x * cap + y] += 1;
            }
            t
        })
        .collect();
    let phi = |c: f64| xlog2x(c);
    loop {
        let mut improved = false;
        for u in 0..n {
            let g = labels[u];
            let mut best = (0.0, g);
            let first_empty = (0..cap).find(|&e| sizes[e] == 0 || (e == g && sizes[g] == 1));
            for h in 0..cap {
                if h == g {
                    continue;
                }
                if sizes[h] == 0 && (Some(h) != first_empty || sizes[g] == 1) {
                    continue;
                }
                // Objective (up to constants): (b/n) sum phi(size) - (s/n) sum_m w_m sum phi(cell).
                let (ng, nh) = (sizes[g] as f64, sizes[h] as f64);
                let d_own = phi(ng - 1.0) - phi(ng) + phi(nh + 1.0) - phi(nh);
                let d_joint: f64 = d
                    .items
                    .iter()
                    .zip(&tables)
                    .map(|((p, w), t)| {
                        let row = p.labels()[u] * cap;
                        let (cg, ch) = (t[row + g] as f64, t[row + h] as f64);
                        w * (phi(cg - 1.0) - phi(cg) + phi(ch + 1.0) - phi(ch))
                    })
                    .sum();
                let delta = (b * d_own - s * d_joint) / n as f64;
                if delta < best.0 - TIE_TOL {
                    best = (delta, h);
                }
            }
            let h = best.1;
            if h != g {
                for ((p, _), t) in d.items.iter().zip(tables.iter_mut()) {
                    let row = p.labels()[u] * cap;
                    t[row + g] -= 1;
                    t[row + h] += 1;
                }
                sizes[g] -= 1;
                sizes[h] += 1;
                labels[u] = h;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    Partition::from_labels(&labels).labels().to_vec()
}

/// Partition minimizing the posterior expected generalized variation of
/// information, over the same candidate set as the Binder estimate.
pub fn minimize_gvi(draws: &[Partition], a: f64, b: f64, scale: JointEntropyScale) -> Result<Partition> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(BstcError::invalid("a/b", format!("misclassification costs must be positive, got a = {a}, b = {b}")));
    }
    let d = Draws::new(draws)?;
    let candidates: Vec<Vec<usize>> = if d.n <= EXHAUSTIVE_LIMIT {
        enumerate_partitions(d.n)
    } else {
        d.items.iter().map(|(p, _)| p.labels().to_vec()).collect()
    };
    let scores: Vec<f64> = candidates.par_iter().map(|c| -d.loss(c, a, b, scale)).collect();
    let mut best = 0;
    for k in 1..candidates.len() {
        if better(scores[k], &candidates[k], scores[best], &candidates[best]) {
            best = k;
        }
    }
    let mut best_labels = candidates[best].clone();
    if d.n > EXHAUSTIVE_LIMIT {
        let refined = refine(&best_labels, &d, a, b, scale);
        let score = -d.loss(&refined, a, b, scale);
        if better(score, &refined, scores[best], &best_labels) {
            best_labels = refined;
        }
    }
    Ok(Partition::from_labels(&best_labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::joint_entropy;
    use rand::{Rng, SeedableRng};

    fn p(l: &[usize]) -> Partition {
        Partition::from_labels(l)
    }

    #[test]
    fn identical_draws_have_zero_loss() {
        let draws = vec![p(&[0, 0, 1, 2, 1]); 4];
        assert_eq!(minimize_gvi(&draws, 1.0, 1.0, JointEntropyScale::Sum).unwrap(), draws[0]);
        assert!(expected_gvi(&draws[0], &draws, 1.0, 1.0, JointEntropyScale::Sum).unwrap().abs() < 1e-12);
        let big: Vec<usize> = (0..40).map(|i| i % 6).collect();
        let draws = vec![p(&big); 2];
        assert_eq!(minimize_gvi(&draws, 1.0, 1.0, JointEntropyScale::Sum).unwrap(), draws[0]);
    }

    #[test]
    fn loss_matches_entropy_definition() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let draws: Vec<Partition> = (0..7).map(|_| p(&(0..9).map(|_| rng.random_range(0..3)).collect::<Vec<_>>())).collect();
        let est = p(&[0, 0, 1, 1, 2, 2, 0, 1, 2]);
        for (a, b, scale) in [(1.0, 1.0, JointEntropyScale::Sum), (2.0, 0.5, JointEntropyScale::Mean)] {
            let direct: f64 = draws
                .iter()
                .map(|c| {
                    -a * partition_entropy(c) - b * partition_entropy(&est)
                        + scale.factor(a, b) * joint_entropy(c, &est).unwrap()
                })
                .sum::<f64>()
                / draws.len() as f64;
            let got = expected_gvi(&est, &draws, a, b, scale).unwrap();
            assert!((got - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn refinement_improves_on_samples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let n = 24;
        let draws: Vec<Partition> = (0..50)
            .map(|_| p(&(0..n).map(|i| (i / 6 + usize::from(rng.random::<f64>() < 0.15)) % 4).collect::<Vec<_>>()))
            .collect();
        let est = minimize_gvi(&draws, 1.0, 1.0, JointEntropyScale::Sum).unwrap();
        let l = expected_gvi(&est, &draws, 1.0, 1.0, JointEntropyScale::Sum).unwrap();
        for d in &draws {
            assert!(l <= expected_gvi(d, &draws, 1.0, 1.0, JointEntropyScale::Sum).unwrap() + 1e-12);
        }
    }

    #[test]
    fn larger_a_gives_coarser_estimates() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 30;
        let draws: Vec<Partition> = (0..80)
            .map(|_| p(&(0..n).map(|i| (i / 5 + usize::from(rng.random::<f64>() < 0.3)) % 6).collect::<Vec<_>>()))
            .collect();
        let k1 = minimize_gvi(&draws, 1.0, 1.0, JointEntropyScale::Sum).unwrap().k();
        let k5 = minimize_gvi(&draws, 5.0, 1.0, JointEntropyScale::Sum).unwrap().k();
        assert!(k5 <= k1);
    }
}
