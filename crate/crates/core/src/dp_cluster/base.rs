use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::dist::ln_shifted_beta_pdf;
use crate::error::{BstcError, Result};

/// `P0 = N(mu0, Sigma0) x Beta_(-1,1)(a_xi, b_xi)` for `(beta*, xi*)`.
#[derive(Debug, Clone)]
pub struct BaseMeasure {
    mu0: DVector<f64>,
    sigma0: DMatrix<f64>,
    a_xi: f64,
    b_xi: f64,
    chol: Cholesky<f64, Dyn>,
    prec: DMatrix<f64>,
    prec_mu: DVector<f64>,
}

impl PartialEq for BaseMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.mu0 == other.mu0 && self.sigma0 == other.sigma0 && self.a_xi == other.a_xi && self.b_xi == other.b_xi
    }
}

impl BaseMeasure {
    pub fn new(mu0: DVector<f64>, sigma0: DMatrix<f64>, a_xi: f64, b_xi: f64) -> Result<Self> {
        if sigma0.shape() != (mu0.len(), mu0.len()) {
            return Err(BstcError::DimensionMismatch(format!(
                "prior mean of length {} with a {:?} covariance",
                mu0.len(),
                sigma0.shape()
            )));
        }
        if !(a_xi > 0.0 && b_xi > 0.0) {
            return Err(BstcError::invalid("a_xi/b_xi", "Beta parameters must be positive"));
        }
        if (&sigma0 - sigma0.transpose()).abs().max() > 1e-12 * sigma0.abs().max().max(1.0) {
            return Err(BstcError::invalid("sigma0", "not symmetric"));
        }
        let chol = sigma0
            .clone()
            .cholesky()
            .ok_or_else(|| BstcError::invalid("sigma0", "not positive definite"))?;
        let prec = chol.inverse();
        let prec_mu = &prec * &mu0;
        Ok(Self { mu0, sigma0, a_xi, b_xi, chol, prec, prec_mu })
    }

    /// `mu0 = 0`, `Sigma0 = I`, `a_xi = b_xi = 1` for coefficient vectors of
    /// length `dim`.
    pub fn standard(dim: usize) -> Self {
        Self::new(DVector::zeros(dim), DMatrix::identity(dim, dim), 1.0, 1.0).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.mu0.len()
    }

    pub fn mu0(&self) -> &DVector<f64> {
        &self.mu0
    }

    pub fn sigma0(&self) -> &DMatrix<f64> {
        &self.sigma0
    }

    pub fn a_xi(&self) -> f64 {
        self.a_xi
    }

    pub fn b_xi(&self) -> f64 {
        self.b_xi
    }

    pub(crate) fn precision(&self) -> &DMatrix<f64> {
        &self.prec
    }

    pub(crate) fn precision_times_mean(&self) -> &DVector<f64> {
        &self.prec_mu
    }

    pub fn ln_xi_density(&self, xi: f64) -> f64 {
        ln_shifted_beta_pdf(xi, self.a_xi, self.b_xi)
    }

    pub fn sample_beta<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.mu0 + self.chol.l() * z
    }

    pub fn sample_xi<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let b = Beta::new(self.a_xi, self.b_xi).expect("positive Beta parameters").sample(rng);
        // Keep the draw strictly inside (-1, 1).
        (2.0 * b - 1.0).clamp(-1.0 + f64::EPSILON, 1.0 - f64::EPSILON)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (DVector<f64>, f64) {
        let beta = self.sample_beta(rng);
        (beta, self.sample_xi(rng))
    }
}
