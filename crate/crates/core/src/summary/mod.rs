//! Posterior summaries of allocation draws.
//!
//! Every function here takes draws as rows of cluster labels and depends on
//! them only through which units share a label within a draw.

mod chips;
mod minvi;

pub use chips::{
    auchips_curve, chips_credible_set, chips_path, unit_uncertainty, ChipsCurve, ChipsPath,
    Subpartition,
};
pub use minvi::{minvi_from_coclustering, minvi_partition, vi_lower_bound, DEFAULT_RESTARTS};

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{count_distinct, Partition};
use crate::error::{Error, Result};

fn check_samples(z_samples: &[Vec<usize>]) -> Result<usize> {
    let n = z_samples
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::InvalidConfig("no posterior samples".into()))?;
    if let Some(bad) = z_samples.iter().find(|s| s.len() != n) {
        return Err(Error::LengthMismatch(n, bad.len()));
    }
    Ok(n)
}

/// Posterior probabilities that two units share a cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct CoclusteringMatrix {
    n: usize,
    c: Vec<f64>,
}

impl CoclusteringMatrix {
    /// Wrap an explicit matrix, checking symmetry, unit diagonal and range.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("co-clustering matrix must be square".into()));
        }
        for i in 0..n {
            if rows[i][i] != 1.0 {
                return Err(Error::DimensionMismatch(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..n {
                let v = rows[i][j];
                if !(0.0..=1.0).contains(&v) || v != rows[j][i] {
                    return Err(Error::DimensionMismatch(format!(
                        "entry ({i}, {j}) is out of range or breaks symmetry"
                    )));
                }
            }
        }
        Ok(Self {
            n,
            c: rows.into_iter().flatten().collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.c[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.c[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.c.chunks(self.n.max(1))
    }
}

/// `C_ij = (1/B) #{b : z_b[i] = z_b[j]}`.
pub fn coclustering_matrix(z_samples: &[Vec<usize>]) -> Result<CoclusteringMatrix> {
    let n = check_samples(z_samples)?;
    let b = z_samples.len() as f64;
    let c: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            (0..n).map(move |j| {
                if i == j {
                    1.0
                } else {
                    z_samples.iter().filter(|z| z[i] == z[j]).count() as f64 / b
                }
            })
        })
        .collect();
    Ok(CoclusteringMatrix { n, c })
}

/// Mean over units of the sample standard deviation of their off-diagonal
/// co-clustering probabilities.
pub fn sd_ccp(c: &CoclusteringMatrix) -> Result<f64> {
    let n = c.n();
    if n < 3 {
        return Err(Error::DimensionTooSmall { needed: 3, found: n });
    }
    let m = (n - 1) as f64;
    let total: f64 = (0..n)
        .map(|i| {
            let off = || (0..n).filter(move |&j| j != i).map(move |j| c.get(i, j));
            let mean = off().sum::<f64>() / m;
            (off().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
        })
        .sum();
    Ok(total / n as f64)
}

/// Posterior of the number of occupied clusters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KPlusPosterior {
    /// `probs[k - 1] = P(K+ = k | data)`.
    pub probs: Vec<f64>,
    /// Most probable value, smallest on ties.
    pub mode: usize,
}

/// Relative frequencies of the number of distinct labels per draw. The pmf
/// has at least `k_max` cells.
pub fn kplus_posterior(z_samples: &[Vec<usize>], k_max: usize) -> Result<KPlusPosterior> {
    check_samples(z_samples)?;
    let counts: Vec<usize> = z_samples.iter().map(|z| count_distinct(z)).collect();
    let len = counts.iter().copied().max().unwrap_or(0).max(k_max);
    let mut probs = vec![0.0; len];
    let b = z_samples.len() as f64;
    for k in counts {
        probs[k - 1] += 1.0 / b;
    }
    let mut mode = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[mode] {
            mode = i;
        }
    }
    Ok(KPlusPosterior {
        probs,
        mode: mode + 1,
    })
}

fn choose2(x: u64) -> f64 {
    (x * x.saturating_sub(1) / 2) as f64
}

/// Adjusted Rand index of two labellings of the same units.
///
/// When the index is undefined (expected and maximum index coincide, e.g.
/// both partitions are a single cluster) it is 1 for identical partitions
/// and 0 otherwise.
pub fn ari(p1: &Partition, p2: &Partition) -> Result<f64> {
    ari_labels(p1.labels(), p2.labels())
}

/// [`ari`] on raw label vectors.
pub fn ari_labels(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len() as u64;
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&v| choose2(v)).sum();
    let sum_a: f64 = rows.values().map(|&v| choose2(v)).sum();
    let sum_b: f64 = cols.values().map(|&v| choose2(v)).sum();
    let expected = sum_a * sum_b / choose2(n).max(1.0);
    let max_index = 0.5 * (sum_a + sum_b);
    if max_index == expected {
        let same = crate::data::canonicalize_partition(a) == crate::data::canonicalize_partition(b);
        return Ok(if same { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max_index - expected))
}
