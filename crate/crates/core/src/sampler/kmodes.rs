//! Huang-style k-modes with simple-matching dissimilarity.

use std::collections::HashSet;

use rand::seq::SliceRandom;

use crate::data::{canonicalize_partition, BinaryDataset, Partition};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Cluster the rows of `data` into at most `n_modes` groups.
///
/// Initial modes are `n_modes` rows picked at random, preferring rows with
/// distinct contents. Assignment ties go to the lowest mode index and
/// per-column mode ties go to 0. With `P = 0` every unit lands in one cluster.
pub fn kmodes_init(
    data: &BinaryDataset,
    n_modes: usize,
    seed: u64,
    max_iter: usize,
) -> Result<Partition> {
    let (n, p) = (data.n(), data.p());
    if p == 0 {
        return Ok(canonicalize_partition(&vec![1; n]));
    }
    if n_modes == 0 || n_modes > n {
        return Err(Error::InvalidConfig(format!(
            "k-modes needs 1 <= n_modes <= N = {n}, got {n_modes}"
        )));
    }

    let mut rng = rng_from_seed(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut seen = HashSet::new();
    let (mut distinct, mut repeated): (Vec<usize>, Vec<usize>) =
        order.into_iter().partition(|&i| seen.insert(data.row(i)));
    distinct.append(&mut repeated);
    let mut modes: Vec<Vec<u8>> = distinct[..n_modes]
        .iter()
        .map(|&i| data.row(i).to_vec())
        .collect();

    let mut assignment = vec![usize::MAX; n];
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        for (i, slot) in assignment.iter_mut().enumerate() {
            let row = data.row(i);
            let nearest = modes
                .iter()
                .enumerate()
                .min_by_key(|(m, mode)| (mismatches(row, mode), *m))
                .map(|(m, _)| m)
                .expect("at least one mode");
            if *slot != nearest {
                *slot = nearest;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut ones = vec![vec![0usize; p]; n_modes];
        let mut sizes = vec![0usize; n_modes];
        for (i, &m) in assignment.iter().enumerate() {
            sizes[m] += 1;
            for (c, &y) in ones[m].iter_mut().zip(data.row(i)) {
                *c += usize::from(y);
            }
        }
        for m in 0..n_modes {
            if sizes[m] > 0 {
                for (v, &c) in modes[m].iter_mut().zip(&ones[m]) {
                    *v = u8::from(2 * c > sizes[m]);
                }
            }
        }
    }
    Ok(canonicalize_partition(&assignment))
}

fn mismatches(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}
