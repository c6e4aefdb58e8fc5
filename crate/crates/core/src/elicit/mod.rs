//! Prior elicitation for `alpha1`.
//!
//! The distance of `Dirichlet(alpha1 x U, alpha2 x (K - U))` from the base
//! model `alpha1 = U` is `d(alpha1) = sqrt(2 KL)`. The PC prior puts an
//! exponential with rate `lambda` on that distance, which on the `alpha1`
//! scale gives the density `lambda exp(-lambda d) |d'|`. The density is
//! tabulated on a grid over `(floor, U]` and renormalized there.

mod induced;

pub use induced::{
    calibrate_lambda, induced_kplus_pmf, match_symmetric_alpha, Alpha1Source, Calibration,
    InducedKPlusPmf, SymmetricMatch,
};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::config::{asymmetric_concentrations, PriorSpec};
use crate::error::{Error, Result};

/// Default number of tabulation points for the PC density.
pub const DEFAULT_GRID_SIZE: usize = 512;
/// Default lower support bound for `alpha1`.
pub const DEFAULT_FLOOR: f64 = 0.05;

/// `KL(Dirichlet(alpha_p) || Dirichlet(alpha_q))` in closed form.
pub fn dirichlet_kld(alpha_p: &[f64], alpha_q: &[f64]) -> Result<f64> {
    if alpha_p.len() != alpha_q.len() {
        return Err(Error::DimensionMismatch(format!(
            "concentration vectors of length {} and {}",
            alpha_p.len(),
            alpha_q.len()
        )));
    }
    if alpha_p.iter().chain(alpha_q).any(|a| !(*a > 0.0)) {
        return Err(Error::NonPositiveConcentration);
    }
    let sum_p: f64 = alpha_p.iter().sum();
    let sum_q: f64 = alpha_q.iter().sum();
    let psi_sum_p = digamma(sum_p);
    let mut kl = ln_gamma(sum_p) - ln_gamma(sum_q);
    for (&p, &q) in alpha_p.iter().zip(alpha_q) {
        kl += ln_gamma(q) - ln_gamma(p) + (p - q) * (digamma(p) - psi_sum_p);
    }
    // Rounding can leave a tiny negative value for identical arguments.
    Ok(kl.max(0.0))
}

/// PC distance of `alpha1` from the base model `alpha1 = U`.
pub fn pc_distance(alpha1: f64, prior: &PriorSpec) -> Result<f64> {
    let u = prior.u as f64;
    if !(alpha1 > 0.0 && alpha1 <= u) {
        return Err(Error::OutOfSupport {
            value: alpha1,
            upper: u,
        });
    }
    let flex = asymmetric_concentrations(prior.k, prior.u, alpha1, prior.alpha2);
    let base = asymmetric_concentrations(prior.k, prior.u, u, prior.alpha2);
    Ok((2.0 * dirichlet_kld(&flex, &base)?).sqrt())
}

/// Distance values and their absolute derivatives on a fixed grid. The
/// `lambda`-independent part of the PC density.
#[derive(Debug, Clone)]
pub(crate) struct DistanceTable {
    grid: Vec<f64>,
    distance: Vec<f64>,
    log_abs_slope: Vec<f64>,
    u: f64,
}

impl DistanceTable {
    pub(crate) fn new(prior: &PriorSpec, floor: f64, grid_size: usize) -> Result<Self> {
        prior.validate()?;
        let u = prior.u as f64;
        if grid_size < 64 {
            return Err(Error::InvalidConfig(format!(
                "grid_size = {grid_size} must be at least 64"
            )));
        }
        if !(floor > 0.0 && floor < u) {
            return Err(Error::InvalidConfig(format!(
                "alpha1 floor {floor} must lie in (0, U = {u})"
            )));
        }
        let h = (u - floor) / (grid_size - 1) as f64;
        let grid: Vec<f64> = (0..grid_size)
            .map(|i| if i == grid_size - 1 { u } else { floor + h * i as f64 })
            .collect();
        let distance = grid
            .iter()
            .map(|&a| pc_distance(a, prior))
            .collect::<Result<Vec<_>>>()?;
        let m = grid_size;
        let log_abs_slope = (0..m)
            .map(|i| {
                let slope = match i {
                    0 => (distance[1] - distance[0]) / (grid[1] - grid[0]),
                    i if i == m - 1 => {
                        (distance[m - 1] - distance[m - 2]) / (grid[m - 1] - grid[m - 2])
                    }
                    i => (distance[i + 1] - distance[i - 1]) / (grid[i + 1] - grid[i - 1]),
                };
                slope.abs().ln()
            })
            .collect();
        Ok(Self {
            grid,
            distance,
            log_abs_slope,
            u,
        })
    }

    pub(crate) fn prior(&self, lambda: f64) -> Result<PCPrior> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda = {lambda} must be positive"
            )));
        }
        let log_density: Vec<f64> = self
            .distance
            .iter()
            .zip(&self.log_abs_slope)
            .map(|(d, s)| lambda.ln() - lambda * d + s)
            .collect();
        // Rescale before exponentiating so large lambda does not underflow.
        let max = log_density.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::NumericalFailure(
                "PC density has no finite values".into(),
            ));
        }
        let density = log_density.iter().map(|l| (l - max).exp()).collect();
        PCPrior::from_parts(self.u, Some(lambda), self.grid.clone(), density)
    }
}

/// Tabulated prior density of `alpha1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PCPrior {
    u: f64,
    /// `None` when the density was supplied externally.
    lambda: Option<f64>,
    grid: Vec<f64>,
    density: Vec<f64>,
    cdf: Vec<f64>,
}

impl PCPrior {
    fn from_parts(u: f64, lambda: Option<f64>, grid: Vec<f64>, mut density: Vec<f64>) -> Result<Self> {
        if density.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::NumericalFailure(
                "PC density has non-finite or negative values".into(),
            ));
        }
        let cdf_raw = trapezoid_cumulative(&grid, &density);
        let total = *cdf_raw.last().expect("non-empty grid");
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::NumericalFailure(
                "PC density integrates to zero".into(),
            ));
        }
        for d in &mut density {
            *d /= total;
        }
        let cdf = cdf_raw.iter().map(|c| c / total).collect();
        Ok(Self {
            u,
            lambda,
            grid,
            density,
            cdf,
        })
    }

    /// Build a prior from an externally tabulated density, e.g. one derived
    /// from a different distance construction. The grid must be strictly
    /// ascending with at least two points.
    pub fn from_tabulated(grid: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != density.len() {
            return Err(Error::DimensionMismatch(format!(
                "density table needs at least two (alpha1, density) rows, got {} and {}",
                grid.len(),
                density.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || !(grid[0] > 0.0) {
            return Err(Error::InvalidConfig(
                "alpha1 grid must be positive and strictly ascending".into(),
            ));
        }
        let u = *grid.last().expect("non-empty");
        Self::from_parts(u, None, grid, density)
    }

    pub fn upper(&self) -> f64 {
        self.u
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// Linearly interpolated density; zero outside the tabulated range.
    pub fn density_at(&self, a: f64) -> f64 {
        let g = &self.grid;
        if !(a >= g[0] && a <= g[g.len() - 1]) {
            return 0.0;
        }
        let j = g.partition_point(|&x| x <= a).clamp(1, g.len() - 1);
        let t = (a - g[j - 1]) / (g[j] - g[j - 1]);
        self.density[j - 1] + t * (self.density[j] - self.density[j - 1])
    }

    /// Linearly interpolated cdf.
    pub fn cdf_at(&self, a: f64) -> f64 {
        let g = &self.grid;
        if a <= g[0] {
            return 0.0;
        }
        if a >= g[g.len() - 1] {
            return 1.0;
        }
        let j = g.partition_point(|&x| x <= a).clamp(1, g.len() - 1);
        let t = (a - g[j - 1]) / (g[j] - g[j - 1]);
        self.cdf[j - 1] + t * (self.cdf[j] - self.cdf[j - 1])
    }

    /// Inverse of the interpolated cdf, for `p` in `[0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        let c = &self.cdf;
        let j = c.partition_point(|&x| x < p).clamp(1, c.len() - 1);
        let span = c[j] - c[j - 1];
        let t = if span > 0.0 {
            ((p - c[j - 1]) / span).clamp(0.0, 1.0)
        } else {
            0.0
        };
        self.grid[j - 1] + t * (self.grid[j] - self.grid[j - 1])
    }

    pub fn mean(&self) -> f64 {
        let weighted: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.density)
            .map(|(a, d)| a * d)
            .collect();
        *trapezoid_cumulative(&self.grid, &weighted)
            .last()
            .expect("non-empty")
    }
}

/// Tabulate the PC prior with rate `lambda` on `grid_size` points over
/// `[floor, U]`.
pub fn build_pc_prior(
    lambda: f64,
    prior: &PriorSpec,
    floor: f64,
    grid_size: usize,
) -> Result<PCPrior> {
    DistanceTable::new(prior, floor, grid_size)?.prior(lambda)
}

fn trapezoid_cumulative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(x.len());
    out.push(0.0);
    for i in 1..x.len() {
        acc += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
        out.push(acc);
    }
    out
}
