//! Process-level behaviour of the binary: exit codes, config files and
//! output layout.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_binclust"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(code(&[]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["elicit", "--K", "abc"]), 2);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn bad_data_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    fs::write(&data, "0,1\n2,0\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&["fit", "--data", p(&data), "--symmetric-alpha", "0.5", "--out-dir", p(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!o.stderr.is_empty());
    let missing = dir.path().join("missing.csv");
    assert_eq!(code(&["fit", "--data", p(&missing), "--out-dir", p(&out)]), 3);
}

#[test]
fn invalid_prior_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let c = code(&["elicit", "--K", "5", "--U", "9", "--out-dir", p(&out)]);
    assert_ne!(c, 0);
}

#[test]
fn simulate_then_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let args = ["simulate", "--scenario", "2", "--N", "30", "--P", "12", "--kplus", "2"];
    assert_eq!(code(&[&args[..], &["--out-dir", p(&sim), "--seed", "4"]].concat()), 0);
    for f in ["data.csv", "truth.csv", "pi.csv"] {
        assert!(sim.join(f).exists(), "{f} missing");
    }

    let (data, truth) = (sim.join("data.csv"), sim.join("truth.csv"));
    let fit = dir.path().join("fit");
    let fit_args = ["fit", "--data", p(&data), "--symmetric-alpha", "0.5"];
    let extra = ["--K", "6", "--iters", "300", "--out-dir", p(&fit)];
    assert_eq!(code(&[&fit_args[..], &extra[..]].concat()), 0);
    let z = fs::read_to_string(fit.join("z_samples.csv")).unwrap();
    assert_eq!(z.lines().count(), 30);

    let summ = dir.path().join("summ");
    let z_path = fit.join("z_samples.csv");
    let sargs = ["summarize", "--samples", p(&z_path), "--truth", p(&truth), "--out-dir", p(&summ)];
    assert_eq!(code(&sargs), 0);
    for f in ["coclustering.csv", "partition.csv", "kplus_pmf.csv", "chips.json"] {
        assert!(summ.join(f).exists(), "{f} missing");
    }
    let chips: serde_json::Value =
        serde_json::from_slice(&fs::read(summ.join("chips.json")).unwrap()).unwrap();
    assert!(chips["auchips"].as_f64().is_some());
}

#[test]
fn config_file_values_apply_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# simulation settings\nN = 25\nP = 6\nkplus = 3\nscenario = 1\n").unwrap();
    let out = dir.path().join("out");
    let args = ["simulate", "--config", p(&cfg), "--P", "4", "--out-dir", p(&out)];
    assert_eq!(code(&args), 0);
    let data = fs::read_to_string(out.join("data.csv")).unwrap();
    let mut lines = data.lines();
    let header = lines.next().unwrap();
    assert_eq!(header.split(',').count(), 1 + 4);
    assert_eq!(lines.count(), 25);

    fs::write(&cfg, "bogus_key = 1\n").unwrap();
    assert_eq!(code(&["simulate", "--config", p(&cfg), "--out-dir", p(&out)]), 2);
}
