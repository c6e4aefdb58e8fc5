use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DistanceTable, PCPrior, DEFAULT_FLOOR, DEFAULT_GRID_SIZE};
use crate::config::PriorSpec;
use crate::dist::{log_dirichlet_draw, weights_from_logs};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, SimRng};

/// Monte Carlo estimate of the prior on the number of occupied components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedKPlusPmf {
    /// `probs[k - 1] = P(K+ = k)` for `k = 1..=K`.
    pub probs: Vec<f64>,
    pub n: usize,
    pub n_mc: usize,
}

impl InducedKPlusPmf {
    /// `P(K+ < k)`.
    pub fn below(&self, k: usize) -> f64 {
        self.probs.iter().take(k.saturating_sub(1)).sum()
    }

    /// Most probable `K+`, smallest on ties.
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best + 1
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Alpha1Source<'a> {
    Fixed(f64),
    Prior(&'a PCPrior),
}

/// Number of occupied components after `n` categorical draws from
/// `omega ~ Dirichlet(concentrations)`.
fn occupied(n: usize, concentrations: &[f64], rng: &mut SimRng) -> usize {
    let w = weights_from_logs(&log_dirichlet_draw(concentrations, rng));
    let cumulative: Vec<f64> = w
        .iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect();
    let mut hit = vec![false; w.len()];
    let mut count = 0;
    for _ in 0..n {
        let k = crate::dist::categorical_from_cumulative(&cumulative, rng.random::<f64>());
        if !hit[k] {
            hit[k] = true;
            count += 1;
            if count == w.len() {
                break;
            }
        }
    }
    count
}

/// Replicate `r` uses its own stream derived from `(seed, r)`, and its first
/// uniform always drives the `alpha1` draw. Different rates or sources thus
/// share random numbers replicate by replicate.
fn kplus_counts(n: usize, prior: &PriorSpec, source: Alpha1Source<'_>, n_mc: usize, seed: u64) -> Vec<u64> {
    let draws: Vec<usize> = (0..n_mc)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(seed, &[r as u64]));
            let u: f64 = rng.random();
            let alpha1 = match source {
                Alpha1Source::Fixed(a) => a,
                Alpha1Source::Prior(pc) => pc.quantile(u),
            };
            occupied(n, &prior.concentrations(alpha1), &mut rng)
        })
        .collect();
    let mut counts = vec![0u64; prior.k];
    for k in draws {
        counts[k - 1] += 1;
    }
    counts
}

/// Monte Carlo prior of `K+` for `n` observations.
pub fn induced_kplus_pmf(
    n: usize,
    prior: &PriorSpec,
    source: Alpha1Source<'_>,
    n_mc: usize,
    seed: u64,
) -> Result<InducedKPlusPmf> {
    if n == 0 || n_mc == 0 {
        return Err(Error::InvalidConfig("n and n_mc must be positive".into()));
    }
    if prior.k == 0 {
        return Err(Error::InvalidConfig("K must be positive".into()));
    }
    if let Alpha1Source::Fixed(a) = source {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::NonPositiveConcentration);
        }
    }
    let counts = kplus_counts(n, prior, source, n_mc, seed);
    Ok(InducedKPlusPmf {
        probs: counts.iter().map(|&c| c as f64 / n_mc as f64).collect(),
        n,
        n_mc,
    })
}

/// Result of [`calibrate_lambda`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Calibration {
    pub lambda: f64,
    pub prior: PCPrior,
    /// Induced `K+` pmf at the returned rate.
    pub pmf: InducedKPlusPmf,
    /// Achieved `P(K+ < U)`.
    pub tail: f64,
}

const LAMBDA_MIN: f64 = 1e-4;
const LAMBDA_MAX: f64 = 1e4;

/// Find the PC rate for which the induced prior satisfies `P(K+ < U) = tp`
/// within `tol`, by bisection on `log(lambda)` with common random numbers.
pub fn calibrate_lambda(
    n: usize,
    prior: &PriorSpec,
    n_mc: usize,
    tol: f64,
    seed: u64,
) -> Result<Calibration> {
    prior.validate()?;
    let tp = prior.tp;
    if !(tol > 0.0) || 3.0 * (tp * (1.0 - tp) / n_mc as f64).sqrt() >= tol {
        return Err(Error::InvalidConfig(format!(
            "n_mc = {n_mc} is too small for tolerance {tol} at tp = {tp}"
        )));
    }
    let table = DistanceTable::new(prior, DEFAULT_FLOOR, DEFAULT_GRID_SIZE)?;
    let evaluate = |log_lambda: f64| -> Result<(PCPrior, InducedKPlusPmf)> {
        let pc = table.prior(log_lambda.exp())?;
        let pmf = induced_kplus_pmf(n, prior, Alpha1Source::Prior(&pc), n_mc, seed)?;
        Ok((pc, pmf))
    };

    let (mut lo, mut hi) = (LAMBDA_MIN.ln(), LAMBDA_MAX.ln());
    let (pc_lo, pmf_lo) = evaluate(lo)?;
    let (pc_hi, pmf_hi) = evaluate(hi)?;
    let (tail_lo, tail_hi) = (pmf_lo.below(prior.u), pmf_hi.below(prior.u));
    // The tail probability falls as lambda grows.
    if !(tail_lo >= tp && tail_hi <= tp) {
        return Err(Error::BracketingFailure {
            low_lambda: LAMBDA_MIN,
            low_tail: tail_lo,
            high_lambda: LAMBDA_MAX,
            high_tail: tail_hi,
        });
    }

    let mut best = if (tail_lo - tp).abs() <= (tail_hi - tp).abs() {
        (lo, pc_lo, pmf_lo, tail_lo)
    } else {
        (hi, pc_hi, pmf_hi, tail_hi)
    };
    // Aim well inside the tolerance so a fresh-seed check also lands in it.
    let target = tol / 4.0;
    for _ in 0..100 {
        if (best.3 - tp).abs() <= target || hi - lo < 1e-9 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (pc, pmf) = evaluate(mid)?;
        let tail = pmf.below(prior.u);
        if tail > tp {
            lo = mid;
        } else {
            hi = mid;
        }
        if (tail - tp).abs() < (best.3 - tp).abs() {
            best = (mid, pc, pmf, tail);
        }
    }
    let (log_lambda, pc, pmf, tail) = best;
    if (tail - tp).abs() > tol {
        return Err(Error::NumericalFailure(format!(
            "calibration reached P(K+ < U) = {tail}, target {tp} +/- {tol}"
        )));
    }
    Ok(Calibration {
        lambda: log_lambda.exp(),
        prior: pc,
        pmf,
        tail,
    })
}

/// Symmetric Dirichlet concentration whose induced `K+` prior is closest to
/// a target pmf in KL divergence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymmetricMatch {
    pub alpha: f64,
    pub kl: f64,
    pub pmf: InducedKPlusPmf,
}

const MATCH_LOG10_MIN: f64 = -3.0;
const MATCH_LOG10_MAX: f64 = 3.0;
const MATCH_GRID: usize = 31;
const GOLDEN_ITERS: usize = 30;

/// `KL(target || q)` after replacing empty cells of `q` by `1 / (2 n_mc)`
/// and renormalizing.
fn smoothed_kl(target: &[f64], q: &[f64], n_mc: usize) -> f64 {
    let floor = 0.5 / n_mc as f64;
    let smoothed: Vec<f64> = q.iter().map(|&x| if x > 0.0 { x } else { floor }).collect();
    let total: f64 = smoothed.iter().sum();
    target
        .iter()
        .zip(&smoothed)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, s)| p * (p / (s / total)).ln())
        .sum()
}

/// Match a symmetric Dirichlet(alpha) prior to `target` by a log-spaced grid
/// search over `alpha in [1e-3, 1e3]` refined by golden-section search.
/// Ties on the grid go to the larger alpha.
pub fn match_symmetric_alpha(
    target: &InducedKPlusPmf,
    n: usize,
    k: usize,
    n_mc: usize,
    seed: u64,
) -> Result<SymmetricMatch> {
    if target.probs.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "target pmf has {} cells for K = {k}",
            target.probs.len()
        )));
    }
    let objective = |log10_alpha: f64| -> Result<(f64, InducedKPlusPmf)> {
        let sym = PriorSpec::symmetric(k, 10f64.powf(log10_alpha));
        let pmf = induced_kplus_pmf(n, &sym, Alpha1Source::Fixed(1.0), n_mc, seed)?;
        Ok((smoothed_kl(&target.probs, &pmf.probs, n_mc), pmf))
    };

    let step = (MATCH_LOG10_MAX - MATCH_LOG10_MIN) / (MATCH_GRID - 1) as f64;
    let grid: Vec<f64> = (0..MATCH_GRID)
        .map(|i| MATCH_LOG10_MIN + step * i as f64)
        .collect();
    let mut values = Vec::with_capacity(MATCH_GRID);
    for &g in &grid {
        values.push(objective(g)?);
    }
    let mut best_i = 0;
    for i in 1..MATCH_GRID {
        if values[i].0 <= values[best_i].0 {
            best_i = i;
        }
    }
    let (mut best_x, (mut best_kl, mut best_pmf)) = (grid[best_i], values.swap_remove(best_i));

    if best_i > 0 && best_i + 1 < MATCH_GRID {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (grid[best_i - 1], grid[best_i + 1]);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = objective(c)?;
        let mut fd = objective(d)?;
        for _ in 0..GOLDEN_ITERS {
            if fc.0 <= fd.0 {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = objective(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = objective(d)?;
            }
        }
        for (x, f) in [(c, fc), (d, fd)] {
            if f.0 < best_kl {
                best_x = x;
                best_kl = f.0;
                best_pmf = f.1;
            }
        }
    }
    Ok(SymmetricMatch {
        alpha: 10f64.powf(best_x),
        kl: best_kl,
        pmf: best_pmf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elicit::build_pc_prior;

    #[test]
    fn single_component_is_certain() {
        let prior = PriorSpec::new(1, 1);
        let pmf = induced_kplus_pmf(50, &prior, Alpha1Source::Fixed(1.0), 500, 1).unwrap();
        assert_eq!(pmf.probs, vec![1.0]);
    }

    #[test]
    fn two_uniform_components_two_draws() {
        // omega ~ U(0,1): P(both draws in one component) = E[w^2 + (1-w)^2] = 2/3
        let prior = PriorSpec::symmetric(2, 1.0);
        let n_mc = 100_000;
        let pmf = induced_kplus_pmf(2, &prior, Alpha1Source::Fixed(1.0), n_mc, 5).unwrap();
        let se = (2.0 / 9.0 / n_mc as f64).sqrt();
        assert!((pmf.probs[0] - 2.0 / 3.0).abs() < 3.0 * se, "{:?}", pmf.probs);
    }

    #[test]
    fn support_and_reproducibility() {
        let prior = PriorSpec::new(15, 5);
        let a = induced_kplus_pmf(3, &prior, Alpha1Source::Fixed(0.5), 2000, 9).unwrap();
        let b = induced_kplus_pmf(3, &prior, Alpha1Source::Fixed(0.5), 2000, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.probs[3..].iter().all(|&p| p == 0.0));
        assert!((a.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fixed_base_concentration_has_soft_upper_bound() {
        let prior = PriorSpec::new(15, 5);
        let pmf = induced_kplus_pmf(100, &prior, Alpha1Source::Fixed(5.0), 20_000, 2).unwrap();
        assert!(pmf.mode() <= 5);
        assert!(pmf.probs[5..].iter().sum::<f64>() < 0.2);
    }

    #[test]
    fn inverse_cdf_sampling_reproduces_cdf() {
        let prior = PriorSpec::new(15, 5);
        let pc = build_pc_prior(1.3, &prior, 0.05, 512).unwrap();
        let mut rng = rng_from_seed(17);
        let mut draws: Vec<f64> = (0..10_000).map(|_| pc.quantile(rng.random())).collect();
        draws.sort_by(f64::total_cmp);
        let n = draws.len() as f64;
        let ks = draws
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = pc.cdf_at(x);
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.02, "KS = {ks}");
    }

    #[test]
    fn unit_upper_bound_cannot_bracket() {
        let mut prior = PriorSpec::new(15, 1);
        prior.tp = 0.5;
        match calibrate_lambda(20, &prior, 2_000, 0.05, 1) {
            Err(Error::BracketingFailure {
                low_tail, high_tail, ..
            }) => {
                assert_eq!(low_tail, 0.0);
                assert_eq!(high_tail, 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn calibration_monotone_in_tail_probability() {
        let mut prior = PriorSpec::new(10, 4);
        prior.tp = 0.1;
        let low_tp = calibrate_lambda(50, &prior, 5_000, 0.03, 4).unwrap();
        prior.tp = 0.6;
        let high_tp = calibrate_lambda(50, &prior, 5_000, 0.03, 4).unwrap();
        assert!(high_tp.lambda < low_tp.lambda);
        assert!((low_tp.tail - 0.1).abs() <= 0.03);
        assert!((high_tp.tail - 0.6).abs() <= 0.03);
        // Even a vanishing rate cannot push this much mass below U.
        prior.tp = 0.9;
        assert!(matches!(
            calibrate_lambda(50, &prior, 5_000, 0.03, 4),
            Err(Error::BracketingFailure { .. })
        ));
    }

    #[test]
    fn calibration_rejects_small_mc() {
        let prior = PriorSpec::new(15, 5);
        assert!(matches!(
            calibrate_lambda(100, &prior, 100, 0.02, 1),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn symmetric_round_trip() {
        let k = 10;
        let target = induced_kplus_pmf(60, &PriorSpec::symmetric(k, 0.5), Alpha1Source::Fixed(1.0), 20_000, 31)
            .unwrap();
        let m = match_symmetric_alpha(&target, 60, k, 20_000, 77).unwrap();
        assert!((m.alpha / 0.5 - 1.0).abs() < 0.25, "alpha = {}", m.alpha);
    }

    #[test]
    fn point_mass_at_k_matches_largest_alpha() {
        let k = 5;
        let mut probs = vec![0.0; k];
        probs[k - 1] = 1.0;
        let target = InducedKPlusPmf {
            probs,
            n: 100,
            n_mc: 2000,
        };
        let m = match_symmetric_alpha(&target, 100, k, 2000, 3).unwrap();
        assert!((m.alpha - 1e3).abs() < 1e-9, "alpha = {}", m.alpha);
    }

    #[test]
    fn smoothing_only_touches_empty_cells() {
        let kl = smoothed_kl(&[0.5, 0.5], &[0.5, 0.5], 10);
        assert!(kl.abs() < 1e-15);
        assert!(smoothed_kl(&[0.5, 0.5], &[1.0, 0.0], 10).is_finite());
    }
}
