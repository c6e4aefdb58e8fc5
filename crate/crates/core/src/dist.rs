//! Sampling and density helpers shared by the elicitation and MCMC code.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

/// `log(sum(exp(xs)))`, `-inf` for an empty or all `-inf` slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Log of a Gamma(shape, 1) draw, stable for tiny shapes.
///
/// For `shape < 1` uses `G = G' * U^(1/shape)` with `G' ~ Gamma(shape + 1)`,
/// so the log never underflows even when the draw itself would.
pub fn log_gamma_draw<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0);
    if shape >= 1.0 {
        let g: f64 = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
        g.ln()
    } else {
        let g: f64 = Gamma::new(shape + 1.0, 1.0)
            .expect("positive shape")
            .sample(rng);
        // `random::<f64>()` is in [0, 1); flip to (0, 1] to keep the log finite.
        let u = 1.0 - rng.random::<f64>();
        g.ln() + u.ln() / shape
    }
}

/// Draw `log(omega)` for `omega ~ Dirichlet(alpha)`.
pub fn log_dirichlet_draw<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    let mut logs: Vec<f64> = alpha.iter().map(|&a| log_gamma_draw(a, rng)).collect();
    let norm = log_sum_exp(&logs);
    for l in &mut logs {
        *l -= norm;
    }
    logs
}

/// Exponentiate log-weights and renormalize so they sum to one.
pub fn weights_from_logs(log_w: &[f64]) -> Vec<f64> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    w
}

/// Index `k` with `cumulative[k - 1] <= u * total < cumulative[k]`, where
/// `cumulative` is a running sum of nonnegative weights.
#[inline]
pub fn categorical_from_cumulative(cumulative: &[f64], u: f64) -> usize {
    let target = u * cumulative[cumulative.len() - 1];
    let idx = cumulative.partition_point(|&c| c <= target);
    idx.min(cumulative.len() - 1)
}

pub fn normal_log_density(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - 0.5 * d * d / var
}

#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `(log(logistic(x)), log(1 - logistic(x)))` without cancellation.
#[inline]
pub fn log_logistic_pair(x: f64) -> (f64, f64) {
    // log(1 + e^-x) computed stably
    let softplus_neg = if x > 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    };
    (-softplus_neg, -x - softplus_neg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn log_sum_exp_matches_direct() {
        let xs = [0.1, -2.0, 3.0];
        let direct: f64 = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - direct).abs() < 1e-14);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn dirichlet_with_tiny_concentrations_stays_finite() {
        let mut rng = rng_from_seed(3);
        for _ in 0..1000 {
            let l = log_dirichlet_draw(&[0.01; 10], &mut rng);
            assert!(l.iter().all(|x| x.is_finite() && *x <= 0.0));
            let w = weights_from_logs(&l);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_log_mean() {
        // E[G] = shape for both branches
        let mut rng = rng_from_seed(11);
        for shape in [0.3, 2.5] {
            let n = 200_000;
            let mean = (0..n)
                .map(|_| log_gamma_draw(shape, &mut rng).exp())
                .sum::<f64>()
                / n as f64;
            let se = (shape / n as f64).sqrt();
            assert!((mean - shape).abs() < 4.0 * se, "shape {shape}: {mean}");
        }
    }

    #[test]
    fn categorical_boundaries() {
        let cum = [0.0, 0.5, 0.5, 1.0];
        assert_eq!(categorical_from_cumulative(&cum, 0.0), 1);
        assert_eq!(categorical_from_cumulative(&cum, 0.49), 1);
        assert_eq!(categorical_from_cumulative(&cum, 0.5), 3);
        assert_eq!(categorical_from_cumulative(&cum, 0.999), 3);
    }

    #[test]
    fn logistic_pair_is_consistent() {
        for x in [-40.0, -3.0, 0.0, 2.0, 35.0] {
            let (lp, lq) = log_logistic_pair(x);
            assert!((lp.exp() - logistic(x)).abs() < 1e-15);
            assert!((lq.exp() - (1.0 - logistic(x))).abs() < 1e-12);
        }
    }
}
