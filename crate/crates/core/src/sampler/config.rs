use nalgebra::{DMatrix, DVector};

use crate::dp_cluster::{BaseMeasure, DEFAULT_N_AUX};
use crate::error::{BstcError, Result};

/// Prior hyperparameters. Inverse-gamma priors use (shape, scale), the
/// gamma prior on the concentration uses (shape, rate).
#[derive(Debug, Clone, PartialEq)]
pub struct Priors {
    pub a_sigma2: f64,
    pub b_sigma2: f64,
    pub a_tau2: f64,
    pub b_tau2: f64,
    pub a_rho: f64,
    pub b_rho: f64,
    pub a_alpha: f64,
    pub b_alpha: f64,
    /// Prior mean of the coefficients; a single value is repeated.
    pub mu0: Vec<f64>,
    /// Diagonal of the prior covariance; a single value is repeated.
    pub sigma0_diag: Vec<f64>,
    pub a_xi: f64,
    pub b_xi: f64,
}

impl Default for Priors {
    fn default() -> Self {
        Self {
            a_sigma2: 3.0,
            b_sigma2: 2.0,
            a_tau2: 3.0,
            b_tau2: 2.0,
            a_rho: 6.0,
            b_rho: 1.0,
            a_alpha: 3.0,
            b_alpha: 2.0,
            mu0: vec![0.0],
            sigma0_diag: vec![1.0],
            a_xi: 1.0,
            b_xi: 1.0,
        }
    }
}

fn broadcast(name: &str, v: &[f64], dim: usize) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; dim]),
        n if n == dim => Ok(v.to_vec()),
        n => Err(BstcError::invalid(name, format!("{n} values for {dim} coefficients"))),
    }
}

impl Priors {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("a_sigma2", self.a_sigma2),
            ("b_sigma2", self.b_sigma2),
            ("a_tau2", self.a_tau2),
            ("b_tau2", self.b_tau2),
            ("a_rho", self.a_rho),
            ("b_rho", self.b_rho),
            ("a_alpha", self.a_alpha),
            ("b_alpha", self.b_alpha),
            ("a_xi", self.a_xi),
            ("b_xi", self.b_xi),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(BstcError::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if self.mu0.is_empty() || self.mu0.iter().any(|v| !v.is_finite()) {
            return Err(BstcError::invalid("mu0", "needs finite values"));
        }
        if self.sigma0_diag.is_empty() || self.sigma0_diag.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(BstcError::invalid("sigma0", "needs positive values"));
        }
        Ok(())
    }

    /// Base measure for coefficient vectors of length `dim`.
    pub fn base_measure(&self, dim: usize) -> Result<BaseMeasure> {
        let mu0 = DVector::from_vec(broadcast("mu0", &self.mu0, dim)?);
        let sigma0 = DMatrix::from_diagonal(&DVector::from_vec(broadcast("sigma0", &self.sigma0_diag, dim)?));
        BaseMeasure::new(mu0, sigma0, self.a_xi, self.b_xi)
    }
}

/// Starting point of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitScheme {
    /// One cluster, coefficients from the base measure, `xi = 0`, `w = 0`,
    /// `sigma2 = tau2 = 1`, `rho = 0.9`, `alpha = 1`.
    #[default]
    Neutral,
    /// Every parameter, the allocations and `w` drawn from the prior.
    Prior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub n_aux: usize,
    pub priors: Priors,
    pub mh_step_rho: f64,
    pub mh_step_xi: f64,
    /// Robbins–Monro tuning of the two step sizes during burn-in.
    pub adapt: bool,
    /// Allocations to hold fixed, in the panel's unit order.
    pub fixed_partition: Option<Vec<usize>>,
    pub n_chains: usize,
    pub init: InitScheme,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iterations: 25_000,
            burn_in: 10_000,
            thin: 3,
            seed: 1,
            n_aux: DEFAULT_N_AUX,
            priors: Priors::default(),
            mh_step_rho: 0.3,
            mh_step_xi: 0.25,
            adapt: true,
            fixed_partition: None,
            n_chains: 1,
            init: InitScheme::Neutral,
        }
    }
}

/// Target acceptance rate of the adaptive Metropolis steps.
pub const TARGET_ACCEPTANCE: f64 = 0.3;

impl ChainConfig {
    /// 25 chains with 5,000 burn-in and 4,000 kept draws each, started from
    /// prior draws.
    pub fn multi_chain_preset() -> Self {
        Self {
            iterations: 9_000,
            burn_in: 5_000,
            thin: 1,
            n_chains: 25,
            init: InitScheme::Prior,
            ..Self::default()
        }
    }

    pub fn n_draws(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }

    /// Whether iteration `it` (0-based) is stored.
    pub fn keeps(&self, it: usize) -> bool {
        it >= self.burn_in && (it - self.burn_in + 1) % self.thin == 0
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(BstcError::invalid(
                "burn_in",
                format!("{} is not below iterations = {}", self.burn_in, self.iterations),
            ));
        }
        if self.thin == 0 {
            return Err(BstcError::invalid("thin", "must be at least 1"));
        }
        if self.n_aux == 0 {
            return Err(BstcError::invalid("n_aux", "must be at least 1"));
        }
        if self.n_chains == 0 {
            return Err(BstcError::invalid("chains", "must be at least 1"));
        }
        for (name, v) in [("mh_step_rho", self.mh_step_rho), ("mh_step_xi", self.mh_step_xi)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(BstcError::invalid(name, format!("must be positive, got {v}")));
            }
        }
        self.priors.validate()
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| BstcError::invalid(key, format!("cannot parse {v:?}")))
        }
        fn list(key: &str, v: &str) -> Result<Vec<f64>> {
            v.split(',').map(|x| num(key, x.trim())).collect()
        }
        let p = &mut self.priors;
        match key.trim() {
            "iterations" => self.iterations = num(key, value)?,
            "burn_in" => self.burn_in = num(key, value)?,
            "thin" => self.thin = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "n_aux" => self.n_aux = num(key, value)?,
            "chains" => self.n_chains = num(key, value)?,
            "mh_step_rho" => self.mh_step_rho = num(key, value)?,
            "mh_step_xi" => self.mh_step_xi = num(key, value)?,
            "adapt" => self.adapt = num(key, value)?,
            "init" => {
                self.init = match value {
                    "neutral" => InitScheme::Neutral,
                    "prior" => InitScheme::Prior,
                    _ => return Err(BstcError::invalid(key, format!("expected neutral or prior, got {value:?}"))),
                }
            }
            "a_sigma2" => p.a_sigma2 = num(key, value)?,
            "b_sigma2" => p.b_sigma2 = num(key, value)?,
            "a_tau2" => p.a_tau2 = num(key, value)?,
            "b_tau2" => p.b_tau2 = num(key, value)?,
            "a_rho" => p.a_rho = num(key, value)?,
            "b_rho" => p.b_rho = num(key, value)?,
            "a_alpha" => p.a_alpha = num(key, value)?,
            "b_alpha" => p.b_alpha = num(key, value)?,
            "a_xi" => p.a_xi = num(key, value)?,
            "b_xi" => p.b_xi = num(key, value)?,
            "mu0" => p.mu0 = list(key, value)?,
            "sigma0" => p.sigma0_diag = list(key, value)?,
            other => return Err(BstcError::invalid(other, "unknown configuration key")),
        }
        Ok(())
    }

    /// Settings as `key = value` pairs, in a fixed order; `set` accepts
    /// every pair.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let p = &self.priors;
        let init = match self.init {
            InitScheme::Neutral => "neutral",
            InitScheme::Prior => "prior",
        };
        [
            ("iterations", self.iterations.to_string()),
            ("burn_in", self.burn_in.to_string()),
            ("thin", self.thin.to_string()),
            ("seed", self.seed.to_string()),
            ("n_aux", self.n_aux.to_string()),
            ("chains", self.n_chains.to_string()),
            ("mh_step_rho", self.mh_step_rho.to_string()),
            ("mh_step_xi", self.mh_step_xi.to_string()),
            ("adapt", self.adapt.to_string()),
            ("init", init.to_string()),
            ("a_sigma2", p.a_sigma2.to_string()),
            ("b_sigma2", p.b_sigma2.to_string()),
            ("a_tau2", p.a_tau2.to_string()),
            ("b_tau2", p.b_tau2.to_string()),
            ("a_rho", p.a_rho.to_string()),
            ("b_rho", p.b_rho.to_string()),
            ("a_alpha", p.a_alpha.to_string()),
            ("b_alpha", p.b_alpha.to_string()),
            ("a_xi", p.a_xi.to_string()),
            ("b_xi", p.b_xi.to_string()),
            ("mu0", join(&p.mu0)),
            ("sigma0", join(&p.sigma0_diag)),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = ChainConfig::default();
        assert_eq!(c.n_draws(), 5_000);
        assert_eq!(c.n_aux, 20);
        let p = &c.priors;
        // Inverse-gamma(3, 2): mean b/(a-1) = 1, variance b^2/((a-1)^2 (a-2)) = 1.
        assert_eq!(p.b_sigma2 / (p.a_sigma2 - 1.0), 1.0);
        assert_eq!(p.b_sigma2.powi(2) / ((p.a_sigma2 - 1.0).powi(2) * (p.a_sigma2 - 2.0)), 1.0);
        assert!((p.a_rho / (p.a_rho + p.b_rho) - 6.0 / 7.0).abs() < 1e-15);
        assert_eq!((p.a_alpha, p.b_alpha), (3.0, 2.0));
        assert!(c.validate().is_ok());
        let m = ChainConfig::multi_chain_preset();
        assert_eq!((m.n_chains, m.burn_in, m.n_draws()), (25, 5_000, 4_000));
    }

    #[test]
    fn keeps_every_thin_th_draw() {
        let c = ChainConfig { iterations: 10, burn_in: 3, thin: 3, ..ChainConfig::default() };
        let kept: Vec<usize> = (0..10).filter(|&i| c.keeps(i)).collect();
        assert_eq!(kept, vec![5, 8]);
        assert_eq!(kept.len(), c.n_draws());
    }

    #[test]
    fn validation_errors_name_the_key() {
        let mut c = ChainConfig { burn_in: 30_000, ..ChainConfig::default() };
        assert!(c.validate().unwrap_err().to_string().contains("burn_in"));
        c = ChainConfig::default();
        c.priors.b_tau2 = -1.0;
        assert!(c.validate().unwrap_err().to_string().contains("b_tau2"));
        assert!(c.set("bogus", "1").unwrap_err().to_string().contains("bogus"));
        assert!(c.set("thin", "x").unwrap_err().to_string().contains("thin"));
    }

    #[test]
    fn pairs_round_trip() {
        let mut c = ChainConfig::default();
        c.set("mu0", "0.5, -1").unwrap();
        c.set("init", "prior").unwrap();
        c.set("seed", "99").unwrap();
        let mut d = ChainConfig::default();
        for (k, v) in c.to_pairs() {
            d.set(&k, &v).unwrap();
        }
        assert_eq!(c, d);
    }

    #[test]
    fn base_measure_broadcasts() {
        let p = Priors { mu0: vec![0.5], sigma0_diag: vec![2.0, 3.0], ..Priors::default() };
        let b = p.base_measure(2).unwrap();
        assert_eq!(b.mu0().as_slice(), &[0.5, 0.5]);
        assert_eq!(b.sigma0()[(1, 1)], 3.0);
        assert!(p.base_measure(3).is_err());
    }
}
