//! Prior and sampler settings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prior hyperparameters of the mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    /// Total number of mixture components.
    pub k: usize,
    /// Soft upper bound on the number of occupied components; the first `u`
    /// Dirichlet coordinates share the concentration `alpha1`.
    pub u: usize,
    /// Concentration of the last `k - u` Dirichlet coordinates.
    pub alpha2: f64,
    /// Target tail probability `P(K+ < U)`.
    pub tp: f64,
    /// Beta prior shapes of the success probabilities.
    pub a: f64,
    pub b: f64,
    /// Prior variance of each free regression coefficient.
    pub beta_var: f64,
    /// `Some(alpha)` selects the symmetric Dirichlet(alpha, ..., alpha)
    /// variant with `alpha` held fixed.
    pub symmetric_alpha: Option<f64>,
}

impl PriorSpec {
    pub fn new(k: usize, u: usize) -> Self {
        Self {
            k,
            u,
            alpha2: 0.01,
            tp: 0.5,
            a: 0.5,
            b: 0.5,
            beta_var: 6.25,
            symmetric_alpha: None,
        }
    }

    pub fn symmetric(k: usize, alpha: f64) -> Self {
        Self {
            symmetric_alpha: Some(alpha),
            ..Self::new(k, k)
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric_alpha.is_some()
    }

    /// Dirichlet concentration vector with `alpha1` in the first `u` slots,
    /// or the symmetric vector in symmetric mode.
    pub fn concentrations(&self, alpha1: f64) -> Vec<f64> {
        match self.symmetric_alpha {
            Some(alpha) => vec![alpha; self.k],
            None => asymmetric_concentrations(self.k, self.u, alpha1, self.alpha2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("K must be positive".into()));
        }
        if self.u == 0 || self.u > self.k {
            return Err(Error::InvalidConfig(format!(
                "U = {} must satisfy 1 <= U <= K = {}",
                self.u, self.k
            )));
        }
        let positive = [self.alpha2, self.a, self.b, self.beta_var];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidConfig(
                "alpha2, a, b and beta_var must be strictly positive".into(),
            ));
        }
        if !(self.tp > 0.0 && self.tp < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "tp = {} must lie in (0, 1)",
                self.tp
            )));
        }
        if let Some(alpha) = self.symmetric_alpha {
            if !(alpha.is_finite() && alpha > 0.0) {
                return Err(Error::InvalidConfig(
                    "symmetric alpha must be strictly positive".into(),
                ));
            }
        }
        Ok(())
    }
}

/// `(x, ..., x, alpha2, ..., alpha2)` with `u` copies of `x`.
pub fn asymmetric_concentrations(k: usize, u: usize, x: f64, alpha2: f64) -> Vec<f64> {
    (0..k).map(|j| if j < u { x } else { alpha2 }).collect()
}

/// MCMC run settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub n_iter: usize,
    /// Initial annealing temperature.
    pub t1: f64,
    /// Fraction of iterations spent cooling from `t1` to 1.
    pub anneal_fraction: f64,
    /// Fraction of final iterations retained as posterior draws.
    pub retain_fraction: f64,
    pub proposal_sd_alpha1: f64,
    pub proposal_sd_beta: f64,
    pub seed: u64,
    /// Proposals for `alpha1` at or below this value are rejected.
    pub alpha1_floor: f64,
    /// Use the full Dirichlet normalizer `lgamma(U a + (K - U) alpha2)` in the
    /// `alpha1` update instead of `lgamma(U a)`.
    pub exact_alpha1_lik: bool,
}

impl Default for SamplerSpec {
    fn default() -> Self {
        Self {
            n_iter: 10_000,
            t1: 5.0,
            anneal_fraction: 0.9,
            retain_fraction: 0.1,
            proposal_sd_alpha1: 1.0,
            proposal_sd_beta: 0.3,
            seed: 0,
            alpha1_floor: 0.05,
            exact_alpha1_lik: false,
        }
    }
}

impl SamplerSpec {
    pub fn with_iters(n_iter: usize, seed: u64) -> Self {
        Self {
            n_iter,
            seed,
            ..Self::default()
        }
    }

    pub fn anneal_len(&self) -> usize {
        (self.anneal_fraction * self.n_iter as f64).round() as usize
    }

    pub fn n_retained(&self) -> usize {
        (self.retain_fraction * self.n_iter as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iter < 10 {
            return Err(Error::InvalidConfig(format!(
                "n_iter = {} must be at least 10",
                self.n_iter
            )));
        }
        if !(self.t1.is_finite() && self.t1 >= 1.0) {
            return Err(Error::InvalidConfig("t1 must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.anneal_fraction) {
            return Err(Error::InvalidConfig(
                "anneal_fraction must lie in [0, 1)".into(),
            ));
        }
        if !(self.retain_fraction > 0.0
            && self.retain_fraction <= 1.0 - self.anneal_fraction + 1e-12)
        {
            return Err(Error::InvalidConfig(format!(
                "retain_fraction = {} must lie in (0, 1 - anneal_fraction]",
                self.retain_fraction
            )));
        }
        if self.n_retained() == 0 || self.n_iter - self.n_retained() < self.anneal_len() {
            return Err(Error::InvalidConfig(
                "retained iterations must be non-empty and lie after the cooling phase".into(),
            ));
        }
        let positive = [self.proposal_sd_alpha1, self.proposal_sd_beta];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidConfig(
                "proposal standard deviations must be strictly positive".into(),
            ));
        }
        if !(self.alpha1_floor.is_finite() && self.alpha1_floor >= 0.0) {
            return Err(Error::InvalidConfig("alpha1_floor must be >= 0".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        PriorSpec::new(15, 5).validate().unwrap();
        SamplerSpec::default().validate().unwrap();
        assert_eq!(SamplerSpec::default().n_retained(), 1000);
        assert_eq!(SamplerSpec::default().anneal_len(), 9000);
    }

    #[test]
    fn rejects_bad_bounds() {
        assert!(PriorSpec::new(5, 6).validate().is_err());
        assert!(PriorSpec::new(5, 0).validate().is_err());
        let mut p = PriorSpec::new(5, 2);
        p.tp = 1.0;
        assert!(p.validate().is_err());
        let mut s = SamplerSpec::default();
        s.retain_fraction = 0.2;
        assert!(s.validate().is_err());
        s = SamplerSpec::with_iters(9, 0);
        assert!(s.validate().is_err());
    }

    #[test]
    fn concentration_vectors() {
        let p = PriorSpec::new(4, 2);
        assert_eq!(p.concentrations(3.0), vec![3.0, 3.0, 0.01, 0.01]);
        let s = PriorSpec::symmetric(3, 0.5);
        assert_eq!(s.concentrations(3.0), vec![0.5; 3]);
    }
}
