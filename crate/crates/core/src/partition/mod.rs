//! Point estimates and diagnostics for posterior draws of partitions.

mod binder;
mod gvi;

pub use binder::{binder_score, minimize_binder, posterior_similarity_matrix, SimilarityMatrix};
pub use gvi::{expected_gvi, minimize_gvi, JointEntropyScale};

use std::collections::HashMap;
use std::path::Path;

use crate::dp_cluster::canonicalize_labels;
use crate::error::{BstcError, Result};

/// Partitions of up to this many units are optimized by full enumeration.
pub const EXHAUSTIVE_LIMIT: usize = 10;

/// A set partition stored as canonical 0-based labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    labels: Vec<usize>,
}

impl Partition {
    /// Canonicalizes arbitrary labels.
    pub fn from_labels(labels: &[usize]) -> Self {
        Self { labels: canonicalize_labels(labels).0 }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k()];
        self.labels.iter().for_each(|&l| s[l] += 1);
        s
    }
}

/// All set partitions of `n` items as canonical label vectors, in
/// lexicographic order.
pub fn enumerate_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for l in 0..=max + 1 {
            prefix.push(l);
            rec(prefix, max.max(l), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut prefix = vec![0];
    rec(&mut prefix, 0, n, &mut out);
    out
}

fn check_same_n(a: &Partition, b: &Partition) -> Result<()> {
    if a.n() != b.n() {
        return Err(BstcError::DimensionMismatch(format!("partitions of {} and {} items", a.n(), b.n())));
    }
    Ok(())
}

/// Fraction of item pairs on which the two partitions agree.
pub fn rand_index(p1: &Partition, p2: &Partition) -> Result<f64> {
    check_same_n(p1, p2)?;
    let n = p1.n();
    if n < 2 {
        return Ok(1.0);
    }
    let (a, b) = (p1.labels(), p2.labels());
    let mut agree = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    Ok(agree as f64 / (n * (n - 1) / 2) as f64)
}

pub(crate) fn xlog2x(c: f64) -> f64 {
    if c > 0.0 {
        c * c.log2()
    } else {
        0.0
    }
}

fn entropy_of_counts(counts: impl Iterator<Item = usize>, n: usize) -> f64 {
    let nf = n as f64;
    let s: f64 = counts.map(|c| xlog2x(c as f64)).sum();
    (nf.log2() - s / nf).max(0.0)
}

/// Entropy in bits of the cluster-size distribution.
pub fn partition_entropy(p: &Partition) -> f64 {
    if p.n() == 0 {
        return 0.0;
    }
    entropy_of_counts(p.sizes().into_iter(), p.n())
}

/// Entropy in bits of the intersection partition.
pub fn joint_entropy(p1: &Partition, p2: &Partition) -> Result<f64> {
    check_same_n(p1, p2)?;
    if p1.n() == 0 {
        return Ok(0.0);
    }
    let mut cells: HashMap<(usize, usize), usize> = HashMap::new();
    for (&a, &b) in p1.labels().iter().zip(p2.labels()) {
        *cells.entry((a, b)).or_default() += 1;
    }
    Ok(entropy_of_counts(cells.into_values(), p1.n()))
}

/// Distinct draws with their relative frequencies, in order of first
/// appearance.
pub(crate) fn weighted_unique(draws: &[Partition]) -> Vec<(&Partition, f64)> {
    let mut index: HashMap<&Partition, usize> = HashMap::new();
    let mut out: Vec<(&Partition, f64)> = Vec::new();
    let w = 1.0 / draws.len() as f64;
    for d in draws {
        match index.get(d) {
            Some(&k) => out[k].1 += w,
            None => {
                index.insert(d, out.len());
                out.push((d, w));
            }
        }
    }
    out
}

pub(crate) fn check_draws(draws: &[Partition]) -> Result<usize> {
    let first = draws.first().ok_or_else(|| BstcError::Empty("no partition draws".into()))?;
    if draws.iter().any(|d| d.n() != first.n()) {
        return Err(BstcError::DimensionMismatch("partition draws differ in length".into()));
    }
    Ok(first.n())
}

/// Scores are compared with this absolute tolerance before tie-breaking.
pub(crate) const TIE_TOL: f64 = 1e-10;

/// `true` if `(score, cand)` beats `(best_score, best)` when higher scores
/// are better; ties go to fewer clusters, then smaller labels.
pub(crate) fn better(score: f64, cand: &[usize], best_score: f64, best: &[usize]) -> bool {
    if score > best_score + TIE_TOL {
        return true;
    }
    if score < best_score - TIE_TOL {
        return false;
    }
    let k = |s: &[usize]| s.iter().max().map_or(0, |m| m + 1);
    (k(cand), cand) < (k(best), best)
}

/// Write `unit,cluster` rows with 1-based cluster labels.
pub fn write_partition_csv(path: impl AsRef<Path>, unit_ids: &[String], p: &Partition) -> Result<()> {
    let path = path.as_ref();
    if unit_ids.len() != p.n() {
        return Err(BstcError::DimensionMismatch(format!("{} unit ids for {} labels", unit_ids.len(), p.n())));
    }
    let csv_err = |e| BstcError::Csv { path: path.to_path_buf(), source: e };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["unit", "cluster"]).map_err(csv_err)?;
    for (u, &l) in unit_ids.iter().zip(p.labels()) {
        w.write_record([u.as_str(), &(l + 1).to_string()]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| BstcError::Io { path: path.to_path_buf(), source: e })
}

/// Read a `unit,cluster` file and order it by `unit_ids`.
pub fn read_partition_csv(path: impl AsRef<Path>, unit_ids: &[String]) -> Result<Partition> {
    let path = path.as_ref();
    let csv_err = |e| BstcError::Csv { path: path.to_path_buf(), source: e };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut found: HashMap<String, usize> = HashMap::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() < 2 {
            return Err(BstcError::parse(path.display().to_string(), "expected unit,cluster"));
        }
        let label: usize = rec[1]
            .trim()
            .parse()
            .map_err(|_| BstcError::parse(path.display().to_string(), format!("bad cluster label {:?}", &rec[1])))?;
        if found.insert(rec[0].trim().to_string(), label).is_some() {
            return Err(BstcError::parse(path.display().to_string(), format!("unit {} listed twice", &rec[0])));
        }
    }
    let labels = unit_ids
        .iter()
        .map(|u| found.get(u).copied().ok_or_else(|| BstcError::UnknownUnit(u.clone())))
        .collect::<Result<Vec<_>>>()?;
    if found.len() != unit_ids.len() {
        return Err(BstcError::parse(path.display().to_string(), "partition lists units not in the panel"));
    }
    Ok(Partition::from_labels(&labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(l: &[usize]) -> Partition {
        Partition::from_labels(l)
    }

    #[test]
    fn bell_numbers() {
        let bell = [1, 1, 2, 5, 15, 52, 203, 877, 4140];
        for (n, &b) in bell.iter().enumerate() {
            let parts = enumerate_partitions(n);
            assert_eq!(parts.len(), b);
            assert!(parts.iter().all(|s| crate::dp_cluster::is_canonical(s)));
        }
    }

    #[test]
    fn rand_index_values() {
        assert_eq!(rand_index(&p(&[0, 0, 1]), &p(&[5, 5, 2])).unwrap(), 1.0);
        let r = rand_index(&p(&[0, 0, 1, 1]), &p(&[0, 1, 0, 1])).unwrap();
        assert!((r - 1.0 / 3.0).abs() < 1e-15);
        assert!(rand_index(&p(&[0]), &p(&[0, 0])).is_err());
    }

    #[test]
    fn entropy_values() {
        assert_eq!(partition_entropy(&p(&[0, 0, 0])), 0.0);
        let singletons: Vec<usize> = (0..110).collect();
        let h = partition_entropy(&p(&singletons));
        assert!((h - 110f64.log2()).abs() < 1e-12);
        assert!((h - 6.78).abs() < 0.005);
        let j = joint_entropy(&p(&[0, 0, 1, 1]), &p(&[0, 1, 0, 1])).unwrap();
        assert!((j - 2.0).abs() < 1e-12);
    }

    fn arb_partition(n: usize) -> impl Strategy<Value = Partition> {
        prop::collection::vec(0usize..4, n).prop_map(|l| Partition::from_labels(&l))
    }

    proptest! {
        #[test]
        fn rand_index_symmetric_and_relabel_invariant(
            (a, b, shift) in (1usize..12).prop_flat_map(|n| (arb_partition(n), arb_partition(n), 1usize..5))
        ) {
            let r = rand_index(&a, &b).unwrap();
            prop_assert_eq!(r, rand_index(&b, &a).unwrap());
            let relabeled: Vec<usize> = a.labels().iter().map(|l| (l + shift) * 7).collect();
            prop_assert_eq!(r, rand_index(&Partition::from_labels(&relabeled), &b).unwrap());
            prop_assert_eq!(r == 1.0, a == b);
        }

        #[test]
        fn joint_with_self_is_entropy(a in (1usize..15).prop_flat_map(arb_partition)) {
            prop_assert!((joint_entropy(&a, &a).unwrap() - partition_entropy(&a)).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join(format!("bstc-part-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("p.csv");
        let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let part = p(&[0, 1, 0]);
        write_partition_csv(&path, &ids, &part).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "unit,cluster\na,1\nb,2\nc,1\n");
        let reordered: Vec<String> = ["c", "b", "a"].iter().map(|s| s.to_string()).collect();
        assert_eq!(read_partition_csv(&path, &reordered).unwrap(), p(&[0, 1, 0]));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
