use std::fs;
use std::path::Path;
use std::time::Instant;

use log::info;
use serde_json::json;

use binclust::config::{PriorSpec, SamplerSpec};
use binclust::data::io::{read_binary_csv, read_covariates_csv, read_label_matrix, read_labels, write_csv};
use binclust::elicit::{calibrate_lambda, match_symmetric_alpha, PCPrior};
use binclust::harness::output::{
    read_density_file, unix_timestamp, write_binary_csv, write_boxplot_csv, write_fit_outputs,
    write_induced_prior_csv, write_labels_csv, write_mean_images_csv, write_metrics_csv,
    write_pc_prior_csv, write_real_matrix_csv, write_summary_outputs, InducedPriorRow,
    SummaryOptions,
};
use binclust::harness::{
    arm_grid, calibrate, digits_pipeline, run_study, simulate_scenario, Arm, DigitsConfig,
    Scenario, StudyConfig, DESK_ITERS, PAPER_ITERS,
};
use binclust::rng::{derive_seed, stream};
use binclust::sampler::run_chains;
use binclust::{Error, Result};

use crate::args::{
    Cli, Command, DigitsArgs, ElicitArgs, FitArgs, PriorArgs, SimulateArgs, StudyArgs,
    SummarizeArgs,
};

pub fn run(cli: &Cli) -> Result<()> {
    let out = cli.global.out_dir.as_path();
    fs::create_dir_all(out)?;
    let seed = cli.global.seed;
    let echo = serde_json::to_value(cli)?;
    match &cli.command {
        Command::Elicit(a) => elicit(a, seed, out),
        Command::Fit(a) => fit(a, seed, out, echo),
        Command::Summarize(a) => summarize(a, seed, out),
        Command::Simulate(a) => simulate(a, seed, out),
        Command::Study(a) => study(a, seed, out, echo),
        Command::Digits(a) => digits(a, seed, out, echo),
    }
}

fn asymmetric_prior(p: &PriorArgs) -> PriorSpec {
    PriorSpec {
        alpha2: p.alpha2,
        tp: p.tp,
        ..PriorSpec::new(p.k, p.u)
    }
}

fn write_pretty(path: &Path, value: &serde_json::Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn elicit(a: &ElicitArgs, seed: u64, out: &Path) -> Result<()> {
    let prior = asymmetric_prior(&a.prior);
    let cal = calibrate_lambda(a.n, &prior, a.n_mc, a.tol, derive_seed(seed, &[stream::ELICIT]))?;
    info!("lambda = {}, P(K+ < U) = {}", cal.lambda, cal.tail);
    write_pc_prior_csv(&out.join("pc_prior.csv"), &cal.prior)?;
    let matched = if a.match_symmetric {
        Some(match_symmetric_alpha(&cal.pmf, a.n, prior.k, a.n_mc, derive_seed(seed, &[stream::ELICIT, 1]))?)
    } else {
        None
    };
    let mut curves = vec![InducedPriorRow {
        method: "aFMM_pc",
        u: prior.u,
        tp_or_alpha: prior.tp,
        pmf: &cal.pmf,
    }];
    if let Some(m) = &matched {
        curves.push(InducedPriorRow {
            method: "sFMM_matched",
            u: prior.u,
            tp_or_alpha: m.alpha,
            pmf: &m.pmf,
        });
    }
    write_induced_prior_csv(&out.join("induced_prior.csv"), &curves)?;
    write_pretty(
        &out.join("elicit.json"),
        &json!({
            "N": a.n,
            "prior": prior,
            "lambda": cal.lambda,
            "tail_probability": cal.tail,
            "induced_mode": cal.pmf.mode(),
            "alpha1_prior_mean": cal.prior.mean(),
            "symmetric_match": matched.as_ref().map(|m| json!({"alpha": m.alpha, "kl": m.kl})),
        }),
    )
}

fn fit(a: &FitArgs, seed: u64, out: &Path, echo: serde_json::Value) -> Result<()> {
    let data = read_binary_csv(&a.data)?;
    let design = a
        .covariates
        .as_ref()
        .map(|p| read_covariates_csv(p, data.p()))
        .transpose()?;
    let start = Instant::now();
    let (prior, pc): (PriorSpec, Option<PCPrior>) = match (a.symmetric_alpha, &a.density_file) {
        (Some(alpha), _) => (PriorSpec::symmetric(a.prior.k, alpha), None),
        (None, Some(path)) => {
            let prior = asymmetric_prior(&a.prior);
            let pc = read_density_file(path)?;
            if (pc.upper() - prior.u as f64).abs() > 1e-9 {
                log::warn!("density grid ends at {} but U = {}", pc.upper(), prior.u);
            }
            (prior, Some(pc))
        }
        (None, None) => {
            let prior = asymmetric_prior(&a.prior);
            let cal = calibrate(data.n(), &prior, seed)?;
            info!("calibrated lambda = {}", cal.lambda);
            (prior, Some(cal.prior))
        }
    };
    let spec = SamplerSpec {
        t1: a.t1,
        proposal_sd_alpha1: a.proposal_sd_alpha1,
        proposal_sd_beta: a.proposal_sd_beta,
        exact_alpha1_lik: a.exact_alpha1_lik,
        ..SamplerSpec::with_iters(a.iters, seed)
    };
    if a.chains == 0 {
        return Err(Error::InvalidConfig("--chains must be positive".into()));
    }
    let chains = if a.chains == 1 {
        vec![binclust::sampler::run_chain(&data, &prior, &spec, pc.as_ref(), design.as_ref())?]
    } else {
        run_chains(&data, &prior, &spec, pc.as_ref(), design.as_ref(), a.chains)?
    };
    let wall = start.elapsed().as_secs_f64();
    if let Some(pc) = &pc {
        write_pc_prior_csv(&out.join("pc_prior.csv"), pc)?;
    }
    for (c, chain) in chains.iter().enumerate() {
        let dir = if a.chains == 1 {
            out.to_path_buf()
        } else {
            out.join(format!("chain_{}", c + 1))
        };
        let mut config = echo.clone();
        config["lambda"] = json!(pc.as_ref().and_then(PCPrior::lambda));
        write_fit_outputs(&dir, chain, config, wall)?;
    }
    Ok(())
}

fn summarize(a: &SummarizeArgs, seed: u64, out: &Path) -> Result<()> {
    let z = read_label_matrix(&a.samples)?;
    let truth = a.truth.as_ref().map(|p| read_labels(p)).transpose()?;
    let k_max = z.iter().flatten().copied().max().unwrap_or(1);
    let report = write_summary_outputs(
        out,
        &z,
        &SummaryOptions {
            gamma: a.gamma,
            grid_size: a.grid,
            n_restarts: a.restarts,
            seed: derive_seed(seed, &[stream::MINVI]),
            k_max,
            truth,
        },
    )?;
    info!(
        "minVI partition has {} clusters; AUChips {}",
        report.partition.n_clusters(),
        report.auchips
    );
    Ok(())
}

fn simulate(a: &SimulateArgs, seed: u64, out: &Path) -> Result<()> {
    let sim = simulate_scenario(Scenario::from_index(a.scenario)?, a.n, a.p, a.kplus, seed)?;
    write_binary_csv(&out.join("data.csv"), &sim.data)?;
    write_labels_csv(&out.join("truth.csv"), sim.truth.labels())?;
    let header: Vec<String> = (1..=a.p).map(|j| format!("V{j}")).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_real_matrix_csv(&out.join("pi.csv"), Some(&header), &sim.pi)
}

fn parse_arm(spec: &str, k: usize, tp: f64, alpha2: f64) -> Result<Arm> {
    let bad = || Error::InvalidConfig(format!("cannot parse arm `{spec}`"));
    match spec.split_once(':') {
        None if spec == "oracle" => Ok(Arm::Oracle),
        Some(("afmm", u)) => Ok(Arm::Asymmetric {
            k,
            u: u.parse().map_err(|_| bad())?,
            alpha2,
            tp,
        }),
        Some(("sfmm", alpha)) => Ok(Arm::Symmetric {
            k,
            alpha: alpha.parse().map_err(|_| bad())?,
        }),
        _ => Err(bad()),
    }
}

fn study(a: &StudyArgs, seed: u64, out: &Path, echo: serde_json::Value) -> Result<()> {
    let arms = if a.arms.is_empty() {
        arm_grid(a.k)
            .into_iter()
            .map(|arm| match arm {
                Arm::Asymmetric { k, u, .. } => Arm::Asymmetric { k, u, alpha2: a.alpha2, tp: a.tp },
                other => other,
            })
            .collect()
    } else {
        a.arms
            .iter()
            .map(|s| parse_arm(s.trim(), a.k, a.tp, a.alpha2))
            .collect::<Result<Vec<_>>>()?
    };
    let n_iter = match (a.iters, a.paper_scale) {
        (Some(n), _) => n,
        (None, true) => PAPER_ITERS,
        (None, false) => DESK_ITERS,
    };
    let cfg = StudyConfig {
        scenario: Scenario::from_index(a.scenario)?,
        n: a.n,
        p: a.p,
        kplus_true: a.kplus,
        n_datasets: a.datasets,
        arms,
        n_iter,
        seed,
        minvi_restarts: a.restarts,
    };
    let start = Instant::now();
    let records = run_study(&cfg)?;
    write_metrics_csv(&out.join("metrics.csv"), &records)?;
    write_boxplot_csv(&out.join("boxplot.csv"), &records)?;
    let failures = records.iter().filter(|r| r.error.is_some()).count();
    if failures > 0 {
        log::warn!("{failures} of {} cells failed; see metrics.csv", records.len());
    }
    write_pretty(
        &out.join("run.json"),
        &json!({
            "config": echo,
            "study": cfg,
            "runtimes_seconds": records.iter().map(|r| json!({
                "dataset": r.dataset_index,
                "arm": r.arm,
                "seconds": r.runtime_seconds,
            })).collect::<Vec<_>>(),
            "wall_time_seconds": start.elapsed().as_secs_f64(),
            "timestamp_unix": unix_timestamp(),
        }),
    )
}

fn digits(a: &DigitsArgs, seed: u64, out: &Path, echo: serde_json::Value) -> Result<()> {
    let cfg = DigitsConfig {
        k: a.k,
        u: a.u,
        alpha2: a.alpha2,
        tp: a.tp,
        n_iter: a.iters,
        seed,
        minvi_restarts: a.restarts,
    };
    let res = digits_pipeline(&a.data, &cfg)?;
    write_csv(
        &out.join("partition.csv"),
        Some(&["unit", "cluster", "digit"]),
        res.partition
            .labels()
            .iter()
            .zip(&res.digit_labels)
            .enumerate()
            .map(|(i, (c, d))| vec![i + 1, *c, *d]),
    )?;
    write_csv(
        &out.join("kplus_pmf.csv"),
        Some(&["kplus", "probability"]),
        res.kplus
            .probs
            .iter()
            .enumerate()
            .map(|(k, p)| vec![(k + 1).to_string(), p.to_string()]),
    )?;
    write_mean_images_csv(&out.join("digit_means.csv"), "digit", &res.digit_means)?;
    write_mean_images_csv(&out.join("cluster_means.csv"), "cluster", &res.cluster_means)?;
    write_pretty(
        &out.join("digits.json"),
        &json!({
            "N": res.data.n(),
            "P": res.data.p(),
            "ari": res.ari,
            "kplus_mode": res.kplus.mode,
            "minvi_clusters": res.partition.n_clusters(),
            "lambda": res.lambda,
            "alpha1_acceptance": res.chain.acceptance.alpha1,
        }),
    )?;
    write_pretty(
        &out.join("run.json"),
        &json!({
            "config": echo,
            "runtime_seconds": res.runtime_seconds,
            "timestamp_unix": unix_timestamp(),
        }),
    )
}
