//! Binary datasets, partitions and covariate designs.

mod design;
pub mod io;

use std::collections::{HashMap, HashSet};

pub use design::{encode_factors, CovariateDesign, Factor};

use crate::error::{Error, Result};

/// An `N x P` matrix of binary observations, rows are units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryDataset {
    y: Vec<u8>,
    n: usize,
    p: usize,
    unit_ids: Vec<String>,
    var_ids: Vec<String>,
}

impl BinaryDataset {
    /// Validate a raw integer matrix with default identifiers
    /// (`1..=N` for units, `V1..=VP` for variables).
    pub fn from_rows(raw: &[Vec<i64>]) -> Result<Self> {
        let p = raw.first().map_or(0, Vec::len);
        let unit_ids = (1..=raw.len()).map(|i| i.to_string()).collect();
        let var_ids = (1..=p).map(|j| format!("V{j}")).collect();
        validate_dataset(raw, unit_ids, var_ids)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, i: usize, p: usize) -> u8 {
        self.y[i * self.p + p]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u8] {
        &self.y[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        (0..self.n).map(move |i| self.row(i))
    }

    pub fn unit_ids(&self) -> &[String] {
        &self.unit_ids
    }

    pub fn var_ids(&self) -> &[String] {
        &self.var_ids
    }
}

/// Check that `raw` is a rectangular {0,1} matrix with unique identifiers.
pub fn validate_dataset(
    raw: &[Vec<i64>],
    unit_ids: Vec<String>,
    var_ids: Vec<String>,
) -> Result<BinaryDataset> {
    let n = raw.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let p = raw[0].len();
    if unit_ids.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} unit identifiers for {} rows",
            unit_ids.len(),
            n
        )));
    }
    if var_ids.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "{} variable identifiers for {} columns",
            var_ids.len(),
            p
        )));
    }
    check_unique(&unit_ids)?;
    check_unique(&var_ids)?;

    let mut y = Vec::with_capacity(n * p);
    for (row, values) in raw.iter().enumerate() {
        if values.len() != p {
            return Err(Error::RaggedRow {
                row,
                found: values.len(),
                expected: p,
            });
        }
        for (col, &value) in values.iter().enumerate() {
            match value {
                0 | 1 => y.push(value as u8),
                _ => return Err(Error::NonBinaryEntry { row, col, value }),
            }
        }
    }
    Ok(BinaryDataset {
        y,
        n,
        p,
        unit_ids,
        var_ids,
    })
}

fn check_unique(ids: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateIdentifier(id.clone()));
        }
    }
    Ok(())
}

/// Threshold an integer matrix: 1 where the entry strictly exceeds
/// `max_value / 2`, 0 elsewhere.
pub fn binarize(raw: &[Vec<i64>], max_value: i64) -> Result<Vec<Vec<i64>>> {
    raw.iter()
        .enumerate()
        .map(|(row, values)| {
            values
                .iter()
                .enumerate()
                .map(|(col, &v)| {
                    if !(0..=max_value).contains(&v) {
                        return Err(Error::OutOfRange {
                            row,
                            col,
                            max: max_value,
                        });
                    }
                    // v > max/2 without rounding: 2v > max.
                    Ok(i64::from(2 * v > max_value))
                })
                .collect()
        })
        .collect()
}

/// Cluster labels in canonical first-appearance form, starting at 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    labels: Vec<usize>,
    n_clusters: usize,
}

impl Partition {
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    /// Cluster sizes indexed by canonical label minus one.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters];
        for &l in &self.labels {
            sizes[l - 1] += 1;
        }
        sizes
    }
}

/// Relabel by order of first appearance: `[5, 5, 2, 9]` becomes `[1, 1, 2, 3]`.
pub fn canonicalize_partition(labels: &[usize]) -> Partition {
    let mut map: HashMap<usize, usize> = HashMap::new();
    let canonical: Vec<usize> = labels
        .iter()
        .map(|&l| {
            let next = map.len() + 1;
            *map.entry(l).or_insert(next)
        })
        .collect();
    Partition {
        labels: canonical,
        n_clusters: map.len(),
    }
}

/// Number of distinct values in `labels`.
pub fn count_distinct(labels: &[usize]) -> usize {
    let mut seen: Vec<usize> = labels.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn validates_small_matrix() {
        let d = BinaryDataset::from_rows(&[vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!((d.n(), d.p()), (2, 2));
        assert_eq!(d.row(0), &[0, 1]);
        assert_eq!(d.get(1, 0), 1);
    }

    #[test]
    fn rejects_non_binary() {
        let err = BinaryDataset::from_rows(&[vec![0, 2], vec![1, 0]]).unwrap_err();
        assert!(matches!(
            err,
            Error::NonBinaryEntry {
                row: 0,
                col: 1,
                value: 2
            }
        ));
    }

    #[test]
    fn zero_columns_allowed() {
        let d = BinaryDataset::from_rows(&[vec![], vec![], vec![]]).unwrap();
        assert_eq!((d.n(), d.p()), (3, 0));
        assert!(d.row(2).is_empty());
    }

    #[test]
    fn empty_and_duplicates() {
        assert!(matches!(
            BinaryDataset::from_rows(&[]),
            Err(Error::EmptyDataset)
        ));
        let err = validate_dataset(
            &[vec![0], vec![1]],
            vec!["a".into(), "a".into()],
            vec!["x".into()],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateIdentifier(ref s) if s == "a"));
        assert!(matches!(
            BinaryDataset::from_rows(&[vec![0, 1], vec![1]]),
            Err(Error::RaggedRow { row: 1, .. })
        ));
    }

    #[test]
    fn binarize_is_strict() {
        assert_eq!(binarize(&[vec![16]], 16).unwrap(), vec![vec![1]]);
        assert_eq!(binarize(&[vec![8]], 16).unwrap(), vec![vec![0]]);
        assert_eq!(binarize(&[vec![0, 9, 7]], 16).unwrap(), vec![vec![0, 1, 0]]);
        assert!(matches!(
            binarize(&[vec![0, 17]], 16),
            Err(Error::OutOfRange { row: 0, col: 1, .. })
        ));
    }

    #[test]
    fn canonical_examples() {
        assert_eq!(canonicalize_partition(&[5, 5, 2, 9]).labels(), &[1, 1, 2, 3]);
        assert_eq!(
            canonicalize_partition(&[1, 2, 1, 2]),
            canonicalize_partition(&[2, 1, 2, 1])
        );
        let single = canonicalize_partition(&[7]);
        assert_eq!(single.labels(), &[1]);
        assert_eq!(single.n_clusters(), 1);
        assert_eq!(canonicalize_partition(&[3, 1, 3, 3]).sizes(), vec![3, 1]);
    }

    proptest! {
        #[test]
        fn canonical_form_is_idempotent_and_bijection_invariant(
            labels in prop::collection::vec(0usize..6, 1..30),
            shift in 1usize..100,
        ) {
            let c = canonicalize_partition(&labels);
            prop_assert_eq!(&canonicalize_partition(c.labels()), &c);
            // An injective relabelling: reversed order plus an offset.
            let relabelled: Vec<usize> = labels.iter().map(|&l| 1000 - 7 * l + shift).collect();
            prop_assert_eq!(&canonicalize_partition(&relabelled), &c);
            prop_assert_eq!(c.n_clusters(), count_distinct(&labels));
            prop_assert_eq!(c.labels()[0], 1);
        }

        #[test]
        fn binarize_is_idempotent_at_unit_scale(
            raw in prop::collection::vec(prop::collection::vec(0i64..=16, 4), 1..8)
        ) {
            let once = binarize(&raw, 16).unwrap();
            prop_assert_eq!(binarize(&once, 1).unwrap(), once);
        }

        #[test]
        fn validation_accepts_exactly_binary(
            raw in prop::collection::vec(prop::collection::vec(-2i64..4, 3), 1..6)
        ) {
            let binary = raw.iter().flatten().all(|v| *v == 0 || *v == 1);
            prop_assert_eq!(BinaryDataset::from_rows(&raw).is_ok(), binary);
        }
    }
}
