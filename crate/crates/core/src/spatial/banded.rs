use nalgebra::DMatrix;

use crate::error::{BstcError, Result};

/// Symmetric positive-definite matrix, or its lower Cholesky factor, in
/// lower band storage.
///
/// Entry `(i, j)` with `i - b <= j <= i` lives at `data[i * b + b + j]`, so
/// each row's band is contiguous and ordered by column. Slots left of column
/// zero in the first `b` rows are padding and stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSPD {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
    is_factor: bool,
}

impl BandedSPD {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        let bandwidth = bandwidth.min(n.saturating_sub(1));
        Self {
            n,
            bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
            is_factor: false,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, 0);
        m.data.fill(1.0);
        m
    }

    /// Read the lower band of a dense symmetric matrix.
    pub fn from_dense(m: &DMatrix<f64>, bandwidth: usize) -> Self {
        let mut out = Self::zeros(m.nrows(), bandwidth);
        for i in 0..out.n {
            for j in out.row_start(i)..=i {
                out.set(i, j, m[(i, j)]);
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn is_factor(&self) -> bool {
        self.is_factor
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.bandwidth + self.bandwidth + j
    }

    /// First stored column of row `i`.
    #[inline]
    pub fn row_start(&self, i: usize) -> usize {
        i.saturating_sub(self.bandwidth)
    }

    /// Stored entries of row `i`, columns `row_start(i)..=i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[self.idx(i, self.row_start(i))..=self.idx(i, i)]
    }

    /// Entry `(i, j)`. Symmetric for a matrix; zero above the diagonal for a factor.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if j > i {
            if self.is_factor {
                return 0.0;
            }
            (j, i)
        } else {
            (i, j)
        };
        if r - c > self.bandwidth {
            0.0
        } else {
            self.data[self.idx(r, c)]
        }
    }

    /// Set lower-band entry `(i, j)`, `j <= i`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(j <= i && i - j <= self.bandwidth, "({i}, {j}) outside the lower band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        assert!(j <= i && i - j <= self.bandwidth, "({i}, {j}) outside the lower band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.data[self.idx(i, i)]).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Copy with a wider band (never narrower than the current one).
    pub fn widened(&self, bandwidth: usize) -> Self {
        let bandwidth = bandwidth.min(self.n.saturating_sub(1));
        if bandwidth <= self.bandwidth {
            return self.clone();
        }
        let mut out = Self::zeros(self.n, bandwidth);
        out.is_factor = self.is_factor;
        for i in 0..self.n {
            for j in self.row_start(i)..=i {
                out.set(i, j, self.get(i, j));
            }
        }
        out
    }

    /// `self * alpha`, entrywise.
    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            let k = self.idx(i, i);
            self.data[k] += v;
        }
    }

    /// `diag(d) * self * diag(d)`.
    pub fn congruence_diag(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.n);
        let mut out = self.clone();
        for i in 0..self.n {
            for j in self.row_start(i)..=i {
                let k = self.idx(i, j);
                out.data[k] *= d[i] * d[j];
            }
        }
        out
    }

    /// Entrywise sum; the result has the larger of the two bandwidths.
    pub fn plus(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = self.widened(other.bandwidth);
        for i in 0..self.n {
            for j in other.row_start(i)..=i {
                out.add_to(i, j, other.get(i, j));
            }
        }
        out
    }

    /// Symmetric matrix-vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert!(!self.is_factor, "mul_vec on a Cholesky factor");
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let j0 = self.row_start(i);
            let row = self.row(i);
            let mut acc = row[i - j0] * x[i];
            for (off, &a) in row[..i - j0].iter().enumerate() {
                let j = j0 + off;
                acc += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += acc;
        }
        y
    }

    /// `x' M x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Lower Cholesky factor `L` with `M = L L'`, sharing the bandwidth of `M`.
    pub fn cholesky(&self) -> Result<Self> {
        assert!(!self.is_factor, "matrix is already a factor");
        let b = self.bandwidth;
        let mut l = self.clone();
        l.is_factor = true;
        for i in 0..self.n {
            let i0 = self.row_start(i);
            for j in i0..=i {
                // Both rows i and j have stored columns from i0 on.
                let ri = l.idx(i, i0);
                let rj = j * b + b + i0;
                let len = j - i0;
                let dot: f64 = l.data[ri..ri + len]
                    .iter()
                    .zip(&l.data[rj..rj + len])
                    .map(|(a, c)| a * c)
                    .sum();
                let k = l.idx(i, j);
                let s = l.data[k] - dot;
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(BstcError::NotPositiveDefinite { pivot: i, value: s });
                    }
                    l.data[k] = s.sqrt();
                } else {
                    l.data[k] = s / l.data[l.idx(j, j)];
                }
            }
        }
        Ok(l)
    }

    /// Solve `L x = rhs` in place. Entries of `x` before `first_nonzero` are
    /// assumed zero and skipped.
    pub fn solve_lower_from(&self, x: &mut [f64], first_nonzero: usize) {
        assert!(self.is_factor, "triangular solve needs a factor");
        for i in first_nonzero..self.n {
            let j0 = self.row_start(i).max(first_nonzero);
            let row = &self.data[self.idx(i, j0)..=self.idx(i, i)];
            let dot: f64 = row[..i - j0].iter().zip(&x[j0..i]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - dot) / row[i - j0];
        }
    }

    pub fn solve_lower(&self, x: &mut [f64]) {
        self.solve_lower_from(x, 0);
    }

    /// Solve `L' x = rhs` in place.
    pub fn solve_upper(&self, x: &mut [f64]) {
        assert!(self.is_factor, "triangular solve needs a factor");
        for i in (0..self.n).rev() {
            let j0 = self.row_start(i);
            let row = self.row(i);
            x[i] /= row[i - j0];
            let xi = x[i];
            for (off, &a) in row[..i - j0].iter().enumerate() {
                x[j0 + off] -= a * xi;
            }
        }
    }

    /// Solve `M x = rhs` given this factor of `M`.
    pub fn solve(&self, x: &mut [f64]) {
        self.solve_lower(x);
        self.solve_upper(x);
    }

    /// `log |M|` from the factor of `M`.
    pub fn log_det(&self) -> f64 {
        assert!(self.is_factor, "log_det needs a factor");
        2.0 * (0..self.n).map(|i| self.data[self.idx(i, i)].ln()).sum::<f64>()
    }
}

/// General square band matrix with `lower` sub- and `upper` super-diagonals,
/// row-major: entry `(i, j)` at `data[i * (lower + upper) + lower + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let cap = n.saturating_sub(1);
        let (lower, upper) = (lower.min(cap), upper.min(cap));
        Self {
            n,
            lower,
            upper,
            data: vec![0.0; n * (lower + upper + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> usize {
        self.lower
    }

    pub fn upper(&self) -> usize {
        self.upper
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.lower + self.upper) + self.lower + j
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.lower >= i && j <= i + self.upper
    }

    /// Column range stored for row `i`.
    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.lower)..(i + self.upper + 1).min(self.n)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside the band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    /// `alpha * S * diag(d)` for a symmetric band matrix `S`.
    pub fn from_symmetric_times_diag(s: &BandedSPD, d: &[f64], alpha: f64) -> Self {
        let n = s.n();
        let b = s.bandwidth();
        let mut out = Self::zeros(n, b, b);
        for i in 0..n {
            for j in out.row_range(i) {
                out.set(i, j, alpha * s.get(i, j) * d[j]);
            }
        }
        out
    }

    /// `alpha * diag(d) * S` for a symmetric band matrix `S`.
    pub fn from_diag_times_symmetric(d: &[f64], s: &BandedSPD, alpha: f64) -> Self {
        let n = s.n();
        let b = s.bandwidth();
        let mut out = Self::zeros(n, b, b);
        for i in 0..n {
            for j in out.row_range(i) {
                out.set(i, j, alpha * d[i] * s.get(i, j));
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row_range(i).map(|j| self.data[self.idx(i, j)] * x[j]).sum())
            .collect()
    }

    /// `M' x`.
    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for j in self.row_range(i) {
                y[j] += self.data[self.idx(i, j)] * x[i];
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity_factor_is_identity() {
        let l = BandedSPD::identity(4).cholesky().unwrap();
        assert!(l.is_factor());
        assert_eq!(l.to_dense(), DMatrix::identity(4, 4));
    }

    #[test]
    fn two_by_two_factor() {
        let m = BandedSPD::from_dense(&DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 5.0]), 1);
        let l = m.cholesky().unwrap().to_dense();
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 2.0]));
    }

    #[test]
    fn indefinite_is_rejected() {
        let m = BandedSPD::from_dense(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]), 1);
        let err = m.cholesky().unwrap_err();
        assert!(err.to_string().contains("not positive definite"));
    }

    fn random_spd(n: usize, b: usize, seed: u64) -> BandedSPD {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut m = BandedSPD::zeros(n, b);
        for i in 0..n {
            for j in m.row_start(i)..i {
                m.set(i, j, rng.random_range(-1.0..1.0));
            }
        }
        // Strict diagonal dominance.
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| m.get(i, j).abs()).sum();
            m.set(i, i, off + rng.random_range(0.1..1.0));
        }
        m
    }

    proptest! {
        #[test]
        fn factor_reproduces_matrix(n in 1usize..=50, b in 0usize..8, seed in 0u64..10_000) {
            let m = random_spd(n, b, seed);
            let l = m.cholesky().unwrap();
            prop_assert_eq!(l.bandwidth(), m.bandwidth());
            let ld = l.to_dense();
            let err = (&ld * ld.transpose() - m.to_dense()).abs().max();
            prop_assert!(err < 1e-10);
        }

        #[test]
        fn solves_and_log_det_match_dense(n in 1usize..=20, b in 0usize..5, seed in 0u64..10_000) {
            let m = random_spd(n, b, seed);
            let l = m.cholesky().unwrap();
            let dense = m.to_dense();
            let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
            let mut x = rhs.clone();
            l.solve(&mut x);
            let back = &dense * nalgebra::DVector::from_vec(x.clone());
            for i in 0..n {
                prop_assert!((back[i] - rhs[i]).abs() < 1e-9);
            }
            prop_assert!((l.log_det() - dense.determinant().ln()).abs() < 1e-9);
            let xv = nalgebra::DVector::from_vec(rhs.clone());
            prop_assert!((m.quad_form(&rhs) - (xv.transpose() * &dense * &xv)[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn sparse_rhs_solve_matches_full_solve() {
        let m = random_spd(12, 3, 5);
        let l = m.cholesky().unwrap();
        let mut a = vec![0.0; 12];
        a[7] = 1.5;
        a[9] = -2.0;
        let mut b = a.clone();
        l.solve_lower(&mut a);
        l.solve_lower_from(&mut b, 7);
        assert_eq!(a, b);
    }

    #[test]
    fn band_matrix_products() {
        let s = random_spd(6, 2, 9);
        let d = [0.1, -0.5, 0.3, 0.9, -0.2, 0.7];
        let m = BandMatrix::from_symmetric_times_diag(&s, &d, -2.0);
        let dense = -2.0 * s.to_dense() * DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&d));
        assert!((m.to_dense() - &dense).abs().max() < 1e-15);
        let x = [1.0, 2.0, 3.0, -1.0, 0.5, 0.25];
        let xv = nalgebra::DVector::from_row_slice(&x);
        let y = m.mul_vec(&x);
        let yt = m.transpose_mul_vec(&x);
        let ey = &dense * &xv;
        let eyt = dense.transpose() * &xv;
        for i in 0..6 {
            assert!((y[i] - ey[i]).abs() < 1e-12);
            assert!((yt[i] - eyt[i]).abs() < 1e-12);
        }
        let left = BandMatrix::from_diag_times_symmetric(&d, &s, -2.0);
        assert!((left.to_dense() - dense.transpose()).abs().max() < 1e-15);
    }
}
