use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// A categorical covariate attached to the variables (columns) of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub name: String,
    /// Level labels in sorted order; the last one is the implied level.
    pub levels: Vec<String>,
    /// Level index of each variable.
    pub level_of_var: Vec<usize>,
}

impl Factor {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }
}

/// Design matrix for the cluster-specific logistic regressions.
///
/// Column 0 is the intercept. Each factor with `L` levels contributes `L - 1`
/// sum-to-zero contrast columns: column `j` is `+1` for variables at level `j`,
/// `-1` for variables at the last level and `0` otherwise, so the coefficient
/// of the last level is minus the sum of the free ones.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateDesign {
    factors: Vec<Factor>,
    /// Row-major `P x q`.
    x: Vec<f64>,
    p: usize,
    q: usize,
}

impl CovariateDesign {
    /// Intercept-only design for `p` variables.
    pub fn intercept_only(p: usize) -> Self {
        Self {
            factors: Vec::new(),
            x: vec![1.0; p],
            p,
            q: 1,
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Covariate row `x_p`.
    #[inline]
    pub fn row(&self, p: usize) -> &[f64] {
        &self.x[p * self.q..(p + 1) * self.q]
    }

    /// Linear predictor `x_p' beta` for every variable.
    pub fn linear_predictor(&self, beta: &[f64]) -> Vec<f64> {
        debug_assert_eq!(beta.len(), self.q);
        (0..self.p)
            .map(|p| self.row(p).iter().zip(beta).map(|(x, b)| x * b).sum())
            .collect()
    }

    /// Full per-level coefficients of every factor, recovered from the free
    /// coefficient vector `beta` (intercept first).
    pub fn full_coefficients(&self, beta: &[f64]) -> Vec<Vec<f64>> {
        let mut offset = 1;
        self.factors
            .iter()
            .map(|f| {
                let free = &beta[offset..offset + f.n_levels() - 1];
                offset += f.n_levels() - 1;
                let mut full = free.to_vec();
                full.push(-free.iter().sum::<f64>());
                full
            })
            .collect()
    }

    /// Names of the free coefficients, e.g. `intercept`, `habitat[Forest]`.
    pub fn coefficient_names(&self) -> Vec<String> {
        let mut names = vec!["intercept".to_string()];
        for f in &self.factors {
            for level in &f.levels[..f.n_levels() - 1] {
                names.push(format!("{}[{}]", f.name, level));
            }
        }
        names
    }
}

/// Build a sum-to-zero design from `(factor name, level label per variable)`.
pub fn encode_factors(factors: &[(String, Vec<String>)], p: usize) -> Result<CovariateDesign> {
    let mut encoded = Vec::with_capacity(factors.len());
    for (name, per_var) in factors {
        if per_var.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "factor `{name}` has {} entries for {p} variables",
                per_var.len()
            )));
        }
        let levels: Vec<String> = per_var
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if levels.len() < 2 {
            return Err(Error::SingleLevelFactor(name.clone()));
        }
        let level_of_var = per_var
            .iter()
            .map(|l| levels.binary_search(l).expect("level present"))
            .collect();
        encoded.push(Factor {
            name: name.clone(),
            levels,
            level_of_var,
        });
    }

    let q = 1 + encoded.iter().map(|f| f.n_levels() - 1).sum::<usize>();
    let mut x = vec![0.0; p * q];
    for var in 0..p {
        let row = &mut x[var * q..(var + 1) * q];
        row[0] = 1.0;
        let mut offset = 1;
        for f in &encoded {
            let free = f.n_levels() - 1;
            let level = f.level_of_var[var];
            if level == free {
                row[offset..offset + free].fill(-1.0);
            } else {
                row[offset + level] = 1.0;
            }
            offset += free;
        }
    }
    Ok(CovariateDesign {
        factors: encoded,
        x,
        p,
        q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn factor(name: &str, levels: &[&str]) -> (String, Vec<String>) {
        (name.into(), levels.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn two_level_contrast() {
        let d = encode_factors(&[factor("h", &["a", "b"])], 2).unwrap();
        assert_eq!(d.q(), 2);
        assert_eq!(d.row(0), &[1.0, 1.0]);
        assert_eq!(d.row(1), &[1.0, -1.0]);
    }

    #[test]
    fn three_level_implied_coefficient() {
        let d = encode_factors(&[factor("e", &["lo", "mid", "hi", "lo"])], 4).unwrap();
        // sorted levels: hi, lo, mid; `mid` is implied
        assert_eq!(d.factors()[0].levels, vec!["hi", "lo", "mid"]);
        let full = d.full_coefficients(&[0.3, 1.5, -0.25]);
        assert_eq!(full, vec![vec![1.5, -0.25, -1.25]]);
        // the linear predictor picks the full coefficient of each variable's level
        let eta = d.linear_predictor(&[0.3, 1.5, -0.25]);
        let expected = [0.3 - 0.25, 0.3 - 1.25, 0.3 + 1.5, 0.3 - 0.25];
        for (a, b) in eta.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(
            d.coefficient_names(),
            vec!["intercept", "e[hi]", "e[lo]"]
        );
    }

    #[test]
    fn no_factors_is_intercept_only() {
        let d = encode_factors(&[], 3).unwrap();
        assert_eq!(d, CovariateDesign::intercept_only(3));
        assert_eq!(d.q(), 1);
        assert!(d.full_coefficients(&[0.7]).is_empty());
    }

    #[test]
    fn single_level_rejected() {
        assert!(matches!(
            encode_factors(&[factor("r", &["x", "x"])], 2),
            Err(Error::SingleLevelFactor(ref n)) if n == "r"
        ));
    }

    proptest! {
        #[test]
        fn implied_levels_sum_to_zero(
            free in prop::collection::vec(-50.0f64..50.0, 6),
        ) {
            let d = encode_factors(
                &[
                    factor("r", &["g", "c", "m", "g", "c", "m"]),
                    factor("h", &["f", "p", "f", "p", "f", "p"]),
                    factor("e", &["1", "2", "3", "3", "2", "1"]),
                ],
                6,
            )
            .unwrap();
            prop_assert_eq!(d.q(), 6);
            for full in d.full_coefficients(&free) {
                prop_assert!(full.iter().sum::<f64>().abs() < 1e-12);
            }
        }
    }
}
