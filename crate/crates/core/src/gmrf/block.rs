use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::spatial::{BandMatrix, BandedSPD};

/// Symmetric block-tridiagonal matrix with `T` banded I×I diagonal blocks and
/// `T - 1` super-diagonal blocks `(t, t+1)`; block `(t+1, t)` is the
/// transpose of `off[t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiagonal {
    diag: Vec<BandedSPD>,
    off: Vec<BandMatrix>,
}

impl BlockTridiagonal {
    pub fn new(diag: Vec<BandedSPD>, off: Vec<BandMatrix>) -> Self {
        assert!(!diag.is_empty());
        assert_eq!(off.len(), diag.len() - 1);
        let n = diag[0].n();
        assert!(diag.iter().all(|b| b.n() == n) && off.iter().all(|b| b.n() == n));
        Self { diag, off }
    }

    pub fn n_blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn block_size(&self) -> usize {
        self.diag[0].n()
    }

    pub fn diag_block(&self, t: usize) -> &BandedSPD {
        &self.diag[t]
    }

    /// Block `(t, t+1)`.
    pub fn off_block(&self, t: usize) -> &BandMatrix {
        &self.off[t]
    }

    /// Dense form with time-major stacking: index `t * I + i`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let (n, tt) = (self.block_size(), self.n_blocks());
        let mut m = DMatrix::zeros(n * tt, n * tt);
        for t in 0..tt {
            m.view_mut((t * n, t * n), (n, n)).copy_from(&self.diag[t].to_dense());
            if t + 1 < tt {
                let b = self.off[t].to_dense();
                m.view_mut((t * n, (t + 1) * n), (n, n)).copy_from(&b);
                m.view_mut(((t + 1) * n, t * n), (n, n)).copy_from(&b.transpose());
            }
        }
        m
    }
}

/// Schur complement update `prec -= B' L^-T L^-1 B` for the band factor `L`
/// of the previous block and the coupling block `B`.
fn subtract_coupling(prec: &BandedSPD, prev_factor: &BandedSPD, coupling: &BandMatrix) -> BandedSPD {
    let n = prec.n();
    // Columns of V = L^-1 B; column j is zero above its first nonzero row.
    let mut cols = Vec::with_capacity(n);
    let mut first = Vec::with_capacity(n);
    for j in 0..n {
        let start = j.saturating_sub(coupling.upper());
        let end = (j + coupling.lower() + 1).min(n);
        let mut v = vec![0.0; n];
        for (r, slot) in v.iter_mut().enumerate().take(end).skip(start) {
            *slot = coupling.get(r, j);
        }
        prev_factor.solve_lower_from(&mut v, start);
        cols.push(v);
        first.push(start);
    }
    let mut out = prec.widened(n.saturating_sub(1));
    for i in 0..n {
        for j in 0..=i {
            let r0 = first[i].max(first[j]);
            let dot: f64 = cols[i][r0..].iter().zip(&cols[j][r0..]).map(|(a, b)| a * b).sum();
            out.add_to(i, j, -dot);
        }
    }
    out
}

/// Exact draw from `N(Psi^-1 c, Psi^-1)` for block-tridiagonal `Psi`.
///
/// Forward pass: `Sigma_1^-1 = Psi_11`,
/// `Sigma_t^-1 = Psi_tt - B_{t-1}' Sigma_{t-1} B_{t-1}` with `B_t = Psi_{t,t+1}`,
/// each factored as `Lambda_t Lambda_t'`, and
/// `m_t = Sigma_t (c_t - B_{t-1}' m_{t-1})`.
/// Backward pass: `w_T = m_T + Lambda_T^-T z_T`, then
/// `w_t = m_t + Lambda_t^-T (z_t - Lambda_t^-1 B_t w_{t+1})`.
///
/// The first Schur complement inherits the band of `Psi_11`; later ones fill
/// in whenever the coupling block is nonzero, in which case the factor is
/// stored with a full band.
pub fn sample_block_tridiagonal<R: Rng + ?Sized>(
    psi: &BlockTridiagonal,
    c: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let (n, tt) = (psi.block_size(), psi.n_blocks());
    assert_eq!(c.shape(), (n, tt), "c must be I x T");

    let mut factors: Vec<BandedSPD> = Vec::with_capacity(tt);
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(tt);
    for t in 0..tt {
        let mut rhs = c.column(t).iter().copied().collect::<Vec<_>>();
        let factor = if t == 0 || psi.off[t - 1].is_zero() {
            psi.diag[t].cholesky()?
        } else {
            subtract_coupling(&psi.diag[t], &factors[t - 1], &psi.off[t - 1]).cholesky()?
        };
        if t > 0 {
            let coupled = psi.off[t - 1].transpose_mul_vec(&means[t - 1]);
            rhs.iter_mut().zip(coupled).for_each(|(r, v)| *r -= v);
        }
        factor.solve(&mut rhs);
        factors.push(factor);
        means.push(rhs);
    }

    let mut w = DMatrix::zeros(n, tt);
    for t in (0..tt).rev() {
        let factor = &factors[t];
        let mut u: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        if t + 1 < tt {
            let next: Vec<f64> = w.column(t + 1).iter().copied().collect();
            let mut pull = psi.off[t].mul_vec(&next);
            factor.solve_lower(&mut pull);
            u.iter_mut().zip(pull).for_each(|(a, b)| *a -= b);
        }
        factor.solve_upper(&mut u);
        for i in 0..n {
            w[(i, t)] = means[t][i] + u[i];
        }
    }
    Ok(w)
}
