use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::calibrate;
use crate::config::{PriorSpec, SamplerSpec};
use crate::data::io::read_optdigits;
use crate::data::{binarize, canonicalize_partition, BinaryDataset, Partition};
use crate::error::Result;
use crate::sampler::{run_chain, ChainOutput};
use crate::summary::{ari, kplus_posterior, minvi_partition, KPlusPosterior, DEFAULT_RESTARTS};

/// Pixel intensities run from 0 to this value.
const MAX_INTENSITY: i64 = 16;

#[derive(Debug, Clone, Serialize)]
pub struct DigitsConfig {
    pub k: usize,
    pub u: usize,
    pub alpha2: f64,
    pub tp: f64,
    pub n_iter: usize,
    pub seed: u64,
    pub minvi_restarts: usize,
}

impl Default for DigitsConfig {
    fn default() -> Self {
        Self {
            k: 15,
            u: 10,
            alpha2: 0.01,
            tp: 0.1,
            n_iter: 10_000,
            seed: 0,
            minvi_restarts: DEFAULT_RESTARTS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DigitsResult {
    pub data: BinaryDataset,
    pub digit_labels: Vec<usize>,
    pub lambda: f64,
    pub chain: ChainOutput,
    pub partition: Partition,
    pub kplus: KPlusPosterior,
    pub ari: f64,
    /// Mean binarized image per true digit, ascending by digit.
    pub digit_means: Vec<(usize, Vec<f64>)>,
    /// Mean binarized image per estimated cluster.
    pub cluster_means: Vec<(usize, Vec<f64>)>,
    pub runtime_seconds: f64,
}

fn group_means(data: &BinaryDataset, groups: &[usize]) -> Vec<(usize, Vec<f64>)> {
    let mut acc: BTreeMap<usize, (usize, Vec<f64>)> = BTreeMap::new();
    for (row, &g) in data.rows().zip(groups) {
        let entry = acc.entry(g).or_insert_with(|| (0, vec![0.0; data.p()]));
        entry.0 += 1;
        for (s, &y) in entry.1.iter_mut().zip(row) {
            *s += f64::from(y);
        }
    }
    acc.into_iter()
        .map(|(g, (count, sums))| (g, sums.into_iter().map(|s| s / count as f64).collect()))
        .collect()
}

/// Parse an optdigits file, binarize at half intensity, fit the asymmetric
/// model and compare its minVI partition with the digit labels.
pub fn digits_pipeline(path: &Path, cfg: &DigitsConfig) -> Result<DigitsResult> {
    let (pixels, digit_labels) = read_optdigits(path)?;
    let data = BinaryDataset::from_rows(&binarize(&pixels, MAX_INTENSITY)?)?;
    let start = Instant::now();
    let prior = PriorSpec {
        alpha2: cfg.alpha2,
        tp: cfg.tp,
        ..PriorSpec::new(cfg.k, cfg.u)
    };
    let calibration = calibrate(data.n(), &prior, cfg.seed)?;
    let spec = SamplerSpec::with_iters(cfg.n_iter, cfg.seed);
    let chain = run_chain(&data, &prior, &spec, Some(&calibration.prior), None)?;
    let partition = minvi_partition(&chain.z_samples, cfg.minvi_restarts, cfg.seed)?;
    let kplus = kplus_posterior(&chain.z_samples, cfg.k)?;
    let runtime_seconds = start.elapsed().as_secs_f64();
    let ari = ari(&partition, &canonicalize_partition(&digit_labels))?;
    Ok(DigitsResult {
        digit_means: group_means(&data, &digit_labels),
        cluster_means: group_means(&data, partition.labels()),
        data,
        digit_labels,
        lambda: calibration.lambda,
        chain,
        partition,
        kplus,
        ari,
        runtime_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn small_digit_file_end_to_end() {
        // two synthetic "digits": bright left half vs bright right half
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let mut file = tempfile::NamedTempFile::new().unwrap();
        for i in 0..40 {
            let digit = i % 2;
            let pixels: Vec<String> = (0..64)
                .map(|j| {
                    let bright = (j % 8 < 4) == (digit == 0);
                    let noise = rng.random::<f64>() < 0.1;
                    if bright != noise { "14" } else { "2" }.to_string()
                })
                .collect();
            writeln!(file, "{},{digit}", pixels.join(",")).unwrap();
        }
        let cfg = DigitsConfig {
            k: 6,
            u: 3,
            tp: 0.5,
            n_iter: 300,
            seed: 2,
            minvi_restarts: 4,
            ..DigitsConfig::default()
        };
        let out = digits_pipeline(file.path(), &cfg).unwrap();
        assert_eq!((out.data.n(), out.data.p()), (40, 64));
        assert_eq!(out.digit_means.len(), 2);
        assert!(out
            .digit_means
            .iter()
            .all(|(_, m)| m.len() == 64 && m.iter().all(|v| (0.0..=1.0).contains(v))));
        assert!(out.ari > 0.9, "ari {} kplus {}", out.ari, out.kplus.mode);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "{},3", vec!["0"; 64].join(",")).unwrap();
        writeln!(file, "{},3", vec!["0"; 63].join(",")).unwrap();
        let err = digits_pipeline(file.path(), &DigitsConfig::default()).unwrap_err();
        assert!(matches!(err, crate::Error::Parse { line: 2, .. }), "{err}");
    }
}
