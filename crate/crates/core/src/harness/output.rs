//! Artifact writers (and the matching readers where a file is read back).
//!
//! Reals are written with Rust's shortest round-trip formatting, so every
//! CSV here reads back bit-exactly.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;

use super::MetricsRecord;
use crate::data::io::{read_real_matrix, write_csv};
use crate::data::{BinaryDataset, Partition};
use crate::elicit::{InducedKPlusPmf, PCPrior};
use crate::error::{Error, Result};
use crate::sampler::ChainOutput;
use crate::summary::{
    auchips_curve, chips_credible_set, coclustering_matrix, kplus_posterior,
    minvi_from_coclustering, sd_ccp, unit_uncertainty, ari_labels, CoclusteringMatrix,
    ChipsCurve, KPlusPosterior, Subpartition,
};

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_f64_le(path: &Path, values: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Read a little-endian `f64` array written by the fit outputs.
pub fn read_f64_le(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{} is not a whole number of 8-byte floats",
            path.display()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn unix_timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Write `z_samples.csv`, `alpha1_trace.csv`, `omega_samples.csv`,
/// `pi_samples.bin` with its JSON sidecar (plus `beta_samples.bin` for the
/// covariate model) and `run.json`.
///
/// `config` is echoed into `run.json` next to acceptance rates, the wall
/// time and a timestamp; those last two are the only run-dependent fields.
pub fn write_fit_outputs(
    dir: &Path,
    chain: &ChainOutput,
    config: serde_json::Value,
    wall_time_seconds: f64,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_csv(&dir.join("z_samples.csv"), None, chain.z_samples.iter().cloned())?;
    write_csv(
        &dir.join("alpha1_trace.csv"),
        Some(&["alpha1"]),
        chain.alpha1_trace.iter().map(|a| vec![*a]),
    )?;
    write_csv(
        &dir.join("omega_samples.csv"),
        None,
        chain.omega_samples.iter().cloned(),
    )?;
    write_f64_le(&dir.join("pi_samples.bin"), &chain.pi_samples)?;
    write_json(
        &dir.join("pi_samples.json"),
        &json!({
            "file": "pi_samples.bin",
            "dtype": "float64",
            "byte_order": "little",
            "layout": "row-major",
            "dims": ["draw", "component", "variable"],
            "shape": [chain.n_retained(), chain.k, chain.p],
        }),
    )?;
    if let (Some(beta), Some(q)) = (&chain.beta_samples, chain.q) {
        write_f64_le(&dir.join("beta_samples.bin"), beta)?;
        write_json(
            &dir.join("beta_samples.json"),
            &json!({
                "file": "beta_samples.bin",
                "dtype": "float64",
                "byte_order": "little",
                "layout": "row-major",
                "dims": ["draw", "component", "coefficient"],
                "shape": [chain.n_retained(), chain.k, q],
            }),
        )?;
    }
    write_json(
        &dir.join("run.json"),
        &json!({
            "config": config,
            "prior": chain.prior,
            "sampler": chain.spec,
            "n_units": chain.n,
            "n_variables": chain.p,
            "n_retained": chain.n_retained(),
            "acceptance": chain.acceptance,
            "wall_time_seconds": wall_time_seconds,
            "timestamp_unix": unix_timestamp(),
        }),
    )
}

/// Options for [`write_summary_outputs`].
#[derive(Debug, Clone)]
pub struct SummaryOptions {
    pub gamma: f64,
    pub grid_size: usize,
    pub n_restarts: usize,
    pub seed: u64,
    pub k_max: usize,
    pub truth: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct UnitUncertainty {
    /// 1-based unit index.
    pub unit: usize,
    pub uncertainty: Option<f64>,
}

/// Everything `summarize` reports.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryReport {
    #[serde(skip)]
    pub coclustering: CoclusteringMatrix,
    #[serde(skip)]
    pub partition: Partition,
    #[serde(skip)]
    pub kplus: KPlusPosterior,
    pub subpartition: Subpartition,
    pub curve: ChipsCurve,
    pub auchips: f64,
    pub sd_ccp: Option<f64>,
    pub unit_uncertainty: Vec<UnitUncertainty>,
    pub ari: Option<f64>,
}

/// Compute every posterior summary of `z_samples` and write
/// `coclustering.csv`, `partition.csv`, `kplus_pmf.csv` and `chips.json`.
/// Units are reported 1-based.
pub fn write_summary_outputs(
    dir: &Path,
    z_samples: &[Vec<usize>],
    opts: &SummaryOptions,
) -> Result<SummaryReport> {
    fs::create_dir_all(dir)?;
    let c = coclustering_matrix(z_samples)?;
    let partition = minvi_from_coclustering(&c, opts.n_restarts, opts.seed)?;
    let kplus = kplus_posterior(z_samples, opts.k_max)?;
    let subpartition = chips_credible_set(z_samples, opts.gamma)?;
    let curve = auchips_curve(z_samples, opts.grid_size)?;
    let sd = if c.n() >= 3 { Some(sd_ccp(&c)?) } else { None };
    let unit_uncertainty = if subpartition.below_threshold {
        Vec::new()
    } else {
        (0..c.n())
            .filter(|u| !subpartition.units.contains(u))
            .map(|u| UnitUncertainty {
                unit: u + 1,
                uncertainty: unit_uncertainty(z_samples, &subpartition, u).ok(),
            })
            .collect()
    };
    let ari = match &opts.truth {
        Some(t) => Some(ari_labels(partition.labels(), t)?),
        None => None,
    };

    write_coclustering_csv(&dir.join("coclustering.csv"), &c)?;
    write_csv(
        &dir.join("partition.csv"),
        Some(&["unit", "cluster"]),
        partition
            .labels()
            .iter()
            .enumerate()
            .map(|(i, l)| vec![i + 1, *l]),
    )?;
    write_csv(
        &dir.join("kplus_pmf.csv"),
        Some(&["kplus", "probability"]),
        kplus
            .probs
            .iter()
            .enumerate()
            .map(|(k, p)| vec![(k + 1).to_string(), p.to_string()]),
    )?;
    let report = SummaryReport {
        coclustering: c,
        partition,
        kplus,
        auchips: curve.auchips,
        subpartition,
        curve,
        sd_ccp: sd,
        unit_uncertainty,
        ari,
    };
    let mut chips = serde_json::to_value(&report)?;
    // 1-based units in the file, matching partition.csv
    if let Some(units) = chips.pointer_mut("/subpartition/units") {
        *units = json!(report.subpartition.units.iter().map(|u| u + 1).collect::<Vec<_>>());
    }
    chips["kplus_mode"] = json!(report.kplus.mode);
    write_json(&dir.join("chips.json"), &chips)?;
    Ok(report)
}

pub fn write_coclustering_csv(path: &Path, c: &CoclusteringMatrix) -> Result<()> {
    write_csv(path, None, c.rows().map(<[f64]>::to_vec))
}

pub fn read_coclustering_csv(path: &Path) -> Result<CoclusteringMatrix> {
    CoclusteringMatrix::from_rows(read_real_matrix(path)?)
}

/// Tabulated PC density with columns `alpha1,density,cdf`.
pub fn write_pc_prior_csv(path: &Path, pc: &PCPrior) -> Result<()> {
    write_csv(
        path,
        Some(&["alpha1", "density", "cdf"]),
        pc.grid()
            .iter()
            .zip(pc.density())
            .zip(pc.cdf())
            .map(|((a, d), c)| vec![*a, *d, *c]),
    )
}

/// Read a tabulated density: the first two columns are `alpha1` and an
/// unnormalized density; further columns are ignored.
pub fn read_density_file(path: &Path) -> Result<PCPrior> {
    let rows = read_real_matrix(path)?;
    if rows.iter().any(|r| r.len() < 2) {
        return Err(Error::DimensionMismatch(
            "a density file needs alpha1 and density columns".into(),
        ));
    }
    PCPrior::from_tabulated(
        rows.iter().map(|r| r[0]).collect(),
        rows.iter().map(|r| r[1]).collect(),
    )
}

/// One induced `K+` prior curve for the plot table.
#[derive(Debug, Clone)]
pub struct InducedPriorRow<'a> {
    pub method: &'a str,
    pub u: usize,
    /// `tp` for the PC-prior method, `alpha` for symmetric matches.
    pub tp_or_alpha: f64,
    pub pmf: &'a InducedKPlusPmf,
}

/// Long table with columns `method,U,tp_or_alpha,kplus,probability`.
pub fn write_induced_prior_csv(path: &Path, curves: &[InducedPriorRow<'_>]) -> Result<()> {
    write_csv(
        path,
        Some(&["method", "U", "tp_or_alpha", "kplus", "probability"]),
        curves.iter().flat_map(|c| {
            c.pmf.probs.iter().enumerate().map(move |(k, p)| {
                vec![
                    c.method.to_string(),
                    c.u.to_string(),
                    c.tp_or_alpha.to_string(),
                    (k + 1).to_string(),
                    p.to_string(),
                ]
            })
        }),
    )
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(String::new, ToString::to_string)
}

/// Per-cell metrics. Runtimes are left out so the file depends only on the
/// configuration; they go to the run log instead.
pub fn write_metrics_csv(path: &Path, records: &[MetricsRecord]) -> Result<()> {
    write_csv(
        path,
        Some(&[
            "scenario", "n", "p", "kplus_true", "dataset", "arm", "ari", "kplus_estimate",
            "kplus_bias", "error",
        ]),
        records.iter().map(|r| {
            vec![
                r.scenario.to_string(),
                r.n.to_string(),
                r.p.to_string(),
                r.kplus_true.to_string(),
                r.dataset_index.to_string(),
                r.arm.clone(),
                opt(&r.ari),
                opt(&r.kplus_estimate),
                opt(&r.kplus_bias),
                csv_field(r.error.as_deref().unwrap_or("")),
            ]
        }),
    )
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Long table with columns `scenario,p,kplus_true,arm,metric,value`, one row
/// per successful cell and metric.
pub fn write_boxplot_csv(path: &Path, records: &[MetricsRecord]) -> Result<()> {
    write_csv(
        path,
        Some(&["scenario", "p", "kplus_true", "arm", "metric", "value"]),
        records.iter().filter(|r| r.error.is_none()).flat_map(|r| {
            let base = [r.scenario.to_string(), r.p.to_string(), r.kplus_true.to_string(), r.arm.clone()];
            [("ari", opt(&r.ari)), ("kplus_bias", opt(&r.kplus_bias))]
                .into_iter()
                .map(move |(metric, value)| {
                    let mut row = base.to_vec();
                    row.push(metric.to_string());
                    row.push(value);
                    row
                })
        }),
    )
}

/// Binary data with an `id` column and variable names as header.
pub fn write_binary_csv(path: &Path, data: &BinaryDataset) -> Result<()> {
    let mut header = vec!["id"];
    header.extend(data.var_ids().iter().map(String::as_str));
    write_csv(
        path,
        Some(&header),
        data.rows().zip(data.unit_ids()).map(|(row, id)| {
            std::iter::once(id.clone())
                .chain(row.iter().map(u8::to_string))
                .collect::<Vec<_>>()
        }),
    )
}

/// One label per line under a `label` header.
pub fn write_labels_csv(path: &Path, labels: &[usize]) -> Result<()> {
    write_csv(path, Some(&["label"]), labels.iter().map(|l| vec![*l]))
}

pub fn write_real_matrix_csv(path: &Path, header: Option<&[&str]>, rows: &[Vec<f64>]) -> Result<()> {
    write_csv(path, header, rows.iter().cloned())
}

/// Group means as `key,p1..pP` rows.
pub fn write_mean_images_csv(path: &Path, key: &str, means: &[(usize, Vec<f64>)]) -> Result<()> {
    let p = means.first().map_or(0, |m| m.1.len());
    let names: Vec<String> = (1..=p).map(|j| format!("p{j}")).collect();
    let mut header = vec![key];
    header.extend(names.iter().map(String::as_str));
    write_csv(
        path,
        Some(&header),
        means.iter().map(|(g, m)| {
            std::iter::once(g.to_string())
                .chain(m.iter().map(f64::to_string))
                .collect::<Vec<_>>()
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::io::{read_binary_csv, read_label_matrix, read_labels};

    #[test]
    fn coclustering_round_trip_is_exact() {
        let z = vec![vec![1, 2, 1, 3], vec![1, 1, 2, 3], vec![2, 2, 2, 1]];
        let c = coclustering_matrix(&z).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        write_coclustering_csv(&path, &c).unwrap();
        assert_eq!(read_coclustering_csv(&path).unwrap(), c);
    }

    #[test]
    fn binary_and_label_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let data = BinaryDataset::from_rows(&[vec![0, 1, 1], vec![1, 0, 0]]).unwrap();
        write_binary_csv(&dir.path().join("d.csv"), &data).unwrap();
        assert_eq!(read_binary_csv(&dir.path().join("d.csv")).unwrap(), data);
        write_labels_csv(&dir.path().join("l.csv"), &[3, 1, 2]).unwrap();
        assert_eq!(read_labels(&dir.path().join("l.csv")).unwrap(), vec![3, 1, 2]);
        let bin = dir.path().join("x.bin");
        write_f64_le(&bin, &[0.1, -2.5, 1e-300]).unwrap();
        assert_eq!(read_f64_le(&bin).unwrap(), vec![0.1, -2.5, 1e-300]);
        let _ = read_label_matrix;
    }

    #[test]
    fn table_schemas() {
        let dir = tempfile::tempdir().unwrap();
        let pmf = InducedKPlusPmf {
            probs: vec![0.25, 0.75],
            n: 10,
            n_mc: 4,
        };
        let path = dir.path().join("induced.csv");
        write_induced_prior_csv(
            &path,
            &[InducedPriorRow { method: "pc", u: 2, tp_or_alpha: 0.5, pmf: &pmf }],
        )
        .unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "method,U,tp_or_alpha,kplus,probability\npc,2,0.5,1,0.25\npc,2,0.5,2,0.75\n"
        );
        let rec = MetricsRecord {
            scenario: 1,
            n: 10,
            p: 4,
            kplus_true: 2,
            dataset_index: 0,
            arm: "oracle".into(),
            ari: Some(1.0),
            kplus_estimate: Some(2),
            kplus_bias: Some(0),
            runtime_seconds: 0.1,
            error: None,
        };
        let path = dir.path().join("box.csv");
        write_boxplot_csv(&path, &[rec]).unwrap();
        assert_eq!(
            fs::read_to_string(&path).unwrap(),
            "scenario,p,kplus_true,arm,metric,value\n1,4,2,oracle,ari,1\n1,4,2,oracle,kplus_bias,0\n"
        );
    }
}
