//! Greedy CHIPS subpartitions and the AUChips curve.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check_samples;
use crate::data::canonicalize_partition;
use crate::error::{Error, Result};

/// A grouping of a subset of units that a posterior draw either satisfies or
/// not. Units are 0-based and ascending; `labels[k]` is the canonical block of
/// `units[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subpartition {
    pub units: Vec<usize>,
    pub labels: Vec<usize>,
    pub probability: f64,
    pub gamma: f64,
    /// Set when not even the best pair reaches `gamma`; the subpartition is
    /// then empty with probability 1 by convention.
    pub below_threshold: bool,
}

impl Subpartition {
    pub fn size(&self) -> usize {
        self.units.len()
    }

    /// Whether the restriction of `z` to `units` equals `labels` up to
    /// relabelling.
    pub fn satisfied_by(&self, z: &[usize]) -> bool {
        let restricted: Vec<usize> = self.units.iter().map(|&u| z[u]).collect();
        canonicalize_partition(&restricted).labels() == self.labels.as_slice()
    }
}

/// One greedy run: the order units were added, their blocks, and the
/// frequency after each addition. Prefixes of the path are the subpartitions
/// returned for every threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ChipsPath {
    order: Vec<usize>,
    blocks: Vec<usize>,
    /// `freqs[m]` is the frequency of the first `m + 2` units.
    freqs: Vec<f64>,
}

impl ChipsPath {
    pub fn max_size(&self) -> usize {
        self.order.len()
    }

    /// Largest prefix whose frequency is at least `gamma`.
    pub fn at(&self, gamma: f64) -> Subpartition {
        let taken = self.freqs.iter().take_while(|&&f| f >= gamma).count();
        if taken == 0 {
            return Subpartition {
                units: Vec::new(),
                labels: Vec::new(),
                probability: 1.0,
                gamma,
                below_threshold: true,
            };
        }
        let size = taken + 1;
        let mut pairs: Vec<(usize, usize)> = self.order[..size]
            .iter()
            .copied()
            .zip(self.blocks[..size].iter().copied())
            .collect();
        pairs.sort_unstable();
        let blocks: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        Subpartition {
            units: pairs.iter().map(|p| p.0).collect(),
            labels: canonicalize_partition(&blocks).into_labels(),
            probability: self.freqs[taken - 1],
            gamma,
            below_threshold: false,
        }
    }
}

/// Seed pair: the pair whose majority relation (together or apart) is most
/// frequent. Ties prefer pairs that are more often together, then the
/// smallest indices.
fn seed_pair(z_samples: &[Vec<usize>], n: usize) -> (usize, usize, bool) {
    let b = z_samples.len();
    let best = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best: Option<(usize, usize, usize)> = None;
            for j in i + 1..n {
                let together = z_samples.iter().filter(|z| z[i] == z[j]).count();
                let majority = together.max(b - together);
                if best.is_none_or(|(m, t, _)| (majority, together) > (m, t)) {
                    best = Some((majority, together, j));
                }
            }
            best.map(|(m, t, j)| (m, t, i, j))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .fold(None::<(usize, usize, usize, usize)>, |acc, cand| match acc {
            Some(a) if (a.0, a.1) >= (cand.0, cand.1) => Some(a),
            _ => Some(cand),
        })
        .expect("at least two units");
    let (majority, together, i, j) = best;
    (i, j, together == majority)
}

/// Run the greedy construction to completion.
pub fn chips_path(z_samples: &[Vec<usize>]) -> Result<ChipsPath> {
    let n = check_samples(z_samples)?;
    let b = z_samples.len();
    if n < 2 {
        return Ok(ChipsPath {
            order: Vec::new(),
            blocks: Vec::new(),
            freqs: Vec::new(),
        });
    }
    let (i, j, together) = seed_pair(z_samples, n);
    let mut order = vec![i, j];
    let mut blocks = vec![0, if together { 0 } else { 1 }];
    let mut n_blocks = blocks[1] + 1;
    let mut in_set = vec![false; n];
    in_set[i] = true;
    in_set[j] = true;
    let mut matching: Vec<usize> = (0..b)
        .filter(|&s| (z_samples[s][i] == z_samples[s][j]) == together)
        .collect();
    let mut freqs = vec![matching.len() as f64 / b as f64];

    // block_of[s][label] for matching samples, usize::MAX when unused
    let max_label = z_samples.iter().flatten().copied().max().unwrap_or(0);
    let mut block_of: Vec<Vec<usize>> = vec![vec![usize::MAX; max_label + 1]; b];
    for &s in &matching {
        for (k, &u) in order.iter().enumerate() {
            block_of[s][z_samples[s][u]] = blocks[k];
        }
    }

    while order.len() < n && !matching.is_empty() {
        // best placement per candidate unit: (count, unit, block)
        let best = (0..n)
            .into_par_iter()
            .filter(|&u| !in_set[u])
            .map(|u| {
                let mut counts = vec![0usize; n_blocks + 1];
                for &s in &matching {
                    let blk = block_of[s][z_samples[s][u]];
                    counts[if blk == usize::MAX { n_blocks } else { blk }] += 1;
                }
                let mut arg = 0;
                for (k, &c) in counts.iter().enumerate() {
                    if c > counts[arg] {
                        arg = k;
                    }
                }
                (counts[arg], u, arg)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(None::<(usize, usize, usize)>, |acc, c| match acc {
                Some(a) if a.0 >= c.0 => Some(a),
                _ => Some(c),
            })
            .expect("a candidate remains");
        let (count, u, blk) = best;
        if count == 0 {
            break;
        }
        matching.retain(|&s| {
            let cur = block_of[s][z_samples[s][u]];
            if blk == n_blocks {
                cur == usize::MAX
            } else {
                cur == blk
            }
        });
        for &s in &matching {
            block_of[s][z_samples[s][u]] = blk;
        }
        if blk == n_blocks {
            n_blocks += 1;
        }
        in_set[u] = true;
        order.push(u);
        blocks.push(blk);
        freqs.push(count as f64 / b as f64);
    }
    Ok(ChipsPath {
        order,
        blocks,
        freqs,
    })
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidConfig(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    Ok(())
}

/// Largest greedy subpartition whose frequency is at least `gamma`.
pub fn chips_credible_set(z_samples: &[Vec<usize>], gamma: f64) -> Result<Subpartition> {
    check_gamma(gamma)?;
    Ok(chips_path(z_samples)?.at(gamma))
}

/// Subpartition size and probability over an even threshold grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChipsCurve {
    pub gammas: Vec<f64>,
    pub sizes: Vec<usize>,
    pub probabilities: Vec<f64>,
    /// Normalized area under size/N as a function of the threshold.
    pub auchips: f64,
}

/// Evaluate the greedy subpartition on `grid_size` evenly spaced thresholds
/// in [0, 1] and integrate size/N over them with the trapezoid rule.
pub fn auchips_curve(z_samples: &[Vec<usize>], grid_size: usize) -> Result<ChipsCurve> {
    if grid_size < 11 {
        return Err(Error::InvalidConfig(format!(
            "the threshold grid needs at least 11 points, got {grid_size}"
        )));
    }
    let n = check_samples(z_samples)?;
    let path = chips_path(z_samples)?;
    let gammas: Vec<f64> = (0..grid_size)
        .map(|g| g as f64 / (grid_size - 1) as f64)
        .collect();
    let subs: Vec<Subpartition> = gammas.iter().map(|&g| path.at(g)).collect();
    let sizes: Vec<usize> = subs.iter().map(Subpartition::size).collect();
    let probabilities = subs.iter().map(|s| s.probability).collect();
    // trapezoid rule on the even grid, kept in integers until the last step
    let twice_area: usize =
        2 * sizes.iter().sum::<usize>() - sizes[0] - sizes[grid_size - 1];
    let auchips = (twice_area as f64 / (2 * (grid_size - 1) * n) as f64).clamp(0.0, 1.0);
    Ok(ChipsCurve {
        gammas,
        sizes,
        probabilities,
        auchips,
    })
}

/// Among draws satisfying `sub`, the share placing `unit` in its most common
/// position relative to the subpartition's blocks (a fresh cluster counts as
/// one position).
pub fn unit_uncertainty(z_samples: &[Vec<usize>], sub: &Subpartition, unit: usize) -> Result<f64> {
    let n = check_samples(z_samples)?;
    if unit >= n {
        return Err(Error::DimensionMismatch(format!("unit {unit} is not among the {n} units")));
    }
    if sub.units.contains(&unit) {
        return Err(Error::UnitInSubpartition(unit));
    }
    let n_blocks = sub.labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; n_blocks + 1];
    let mut satisfied = 0usize;
    for z in z_samples.iter().filter(|z| sub.satisfied_by(z)) {
        satisfied += 1;
        let pos = sub
            .units
            .iter()
            .position(|&u| z[u] == z[unit])
            .map_or(n_blocks, |k| sub.labels[k]);
        counts[pos] += 1;
    }
    if satisfied == 0 {
        return Err(Error::NoSatisfyingSamples);
    }
    Ok(*counts.iter().max().unwrap() as f64 / satisfied as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_samples(rng: &mut ChaCha8Rng, b: usize, n: usize, k: usize) -> Vec<Vec<usize>> {
        (0..b)
            .map(|_| (0..n).map(|_| rng.random_range(1..=k)).collect())
            .collect()
    }

    fn restriction(z: &[usize], units: &[usize]) -> Vec<usize> {
        canonicalize_partition(&units.iter().map(|&u| z[u]).collect::<Vec<_>>()).into_labels()
    }

    /// Largest subset size whose most frequent restriction reaches gamma.
    fn exhaustive_best_size(z: &[Vec<usize>], n: usize, gamma: f64) -> usize {
        let mut best = 0;
        for mask in 1u32..(1 << n) {
            let units: Vec<usize> = (0..n).filter(|&u| mask >> u & 1 == 1).collect();
            if units.len() < 2 || units.len() <= best {
                continue;
            }
            let mut freq = std::collections::HashMap::new();
            for s in z {
                *freq.entry(restriction(s, &units)).or_insert(0usize) += 1;
            }
            let top = *freq.values().max().unwrap() as f64 / z.len() as f64;
            if top >= gamma {
                best = units.len();
            }
        }
        best
    }

    #[test]
    fn identical_samples_give_everything() {
        let z = vec![vec![2, 2, 1, 3, 1]; 7];
        for gamma in [0.0, 0.4, 1.0] {
            let s = chips_credible_set(&z, gamma).unwrap();
            assert_eq!(s.units, vec![0, 1, 2, 3, 4]);
            assert_eq!(s.labels, vec![1, 1, 2, 3, 2]);
            assert_eq!(s.probability, 1.0);
        }
        assert_eq!(auchips_curve(&z, 11).unwrap().auchips, 1.0);
    }

    #[test]
    fn greedy_is_close_to_exhaustive_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let z = random_samples(&mut rng, 10, 5, 3);
            let gamma = 0.5;
            let s = chips_credible_set(&z, gamma).unwrap();
            let best = exhaustive_best_size(&z, 5, gamma);
            if !s.below_threshold {
                assert!(s.probability >= gamma);
            }
            assert!(s.size() <= best);
            assert!(best - s.size() <= 1, "greedy {} vs best {best}", s.size());
        }
    }

    #[test]
    fn probability_matches_independent_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for gamma in [0.1, 0.3, 0.6] {
            let z = random_samples(&mut rng, 40, 8, 2);
            let s = chips_credible_set(&z, gamma).unwrap();
            if s.below_threshold {
                continue;
            }
            let hits = z
                .iter()
                .filter(|zb| restriction(zb, &s.units) == s.labels)
                .count();
            assert_eq!(s.probability, hits as f64 / z.len() as f64);
            assert!(s.probability >= gamma);
        }
    }

    #[test]
    fn unattainable_threshold_flags_empty() {
        let z = vec![vec![1, 2, 3], vec![1, 1, 2], vec![1, 2, 1], vec![2, 1, 1]];
        let s = chips_credible_set(&z, 1.0).unwrap();
        assert!(s.below_threshold);
        assert!(s.units.is_empty());
        assert_eq!(s.probability, 1.0);
        assert!(chips_credible_set(&z, 1.5).is_err());
    }

    #[test]
    fn noisy_labels_give_small_area() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = random_samples(&mut rng, 200, 10, 2);
        let curve = auchips_curve(&z, 21).unwrap();
        assert!(curve.auchips < 0.6, "{}", curve.auchips);
        assert!(curve.sizes.windows(2).all(|w| w[0] >= w[1]));
        let doubled: Vec<Vec<usize>> = z.iter().chain(z.iter()).cloned().collect();
        assert_eq!(auchips_curve(&doubled, 21).unwrap(), curve);
    }

    #[test]
    fn unit_uncertainty_counts() {
        let sub = Subpartition {
            units: vec![0, 1],
            labels: vec![1, 2],
            probability: 1.0,
            gamma: 0.5,
            below_threshold: false,
        };
        let always = vec![vec![1, 2, 1], vec![3, 4, 3]];
        assert_eq!(unit_uncertainty(&always, &sub, 2).unwrap(), 1.0);
        let split = vec![vec![1, 2, 1], vec![1, 2, 2], vec![5, 6, 5], vec![5, 6, 6]];
        assert_eq!(unit_uncertainty(&split, &sub, 2).unwrap(), 0.5);
        let fresh = vec![vec![1, 2, 3], vec![1, 2, 3], vec![1, 2, 1]];
        assert!((unit_uncertainty(&fresh, &sub, 2).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let none = vec![vec![1, 1, 1]];
        assert!(matches!(
            unit_uncertainty(&none, &sub, 2),
            Err(Error::NoSatisfyingSamples)
        ));
        assert!(matches!(
            unit_uncertainty(&always, &sub, 0),
            Err(Error::UnitInSubpartition(0))
        ));
    }
}
