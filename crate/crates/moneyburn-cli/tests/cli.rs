//! End-to-end tests of the command-line binary: reruns are
//! byte-identical, manifests carry valid checksums, bad input exits 2
//! without leaving files behind, and I/O failures exit 3.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_moneyburn")
}

/// Fresh scratch directory, unique per test, wiped on entry.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("moneyburn-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary should spawn")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

#[test]
fn help_lists_all_subcommands() {
    let out = Command::new(bin()).arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in [
        "hazard",
        "compare",
        "frechet-thresholds",
        "rf",
        "lp",
        "simulate",
        "classify",
    ] {
        assert!(text.contains(sub), "help should mention {sub}");
    }
}

#[test]
fn rerun_is_byte_identical() {
    let args = [
        "hazard",
        "--marginal",
        "weibull:0.9",
        "--k",
        "1,4",
        "--grid",
        "0.1:3:40",
        "--out",
        "haz.csv",
    ];
    let d1 = scratch("rerun-a");
    let d2 = scratch("rerun-b");
    assert!(run_in(&d1, &args).status.success());
    assert!(run_in(&d2, &args).status.success());
    assert_eq!(read(&d1, "haz.csv"), read(&d2, "haz.csv"));
    assert_eq!(
        read(&d1, "haz.csv.manifest.json"),
        read(&d2, "haz.csv.manifest.json")
    );
    let csv = String::from_utf8(read(&d1, "haz.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "k,w,density,hazard_derivative");
    // Two K values, 41 grid points each, plus the header.
    assert_eq!(csv.lines().count(), 1 + 2 * 41);
}

#[test]
fn simulate_is_reproducible_and_ordered() {
    let args = [
        "simulate",
        "--alphas",
        "0.8,1.0",
        "--m",
        "1",
        "--trials",
        "1000",
        "--seed",
        "7",
        "--out",
        "sweep.csv",
    ];
    let d1 = scratch("sim-a");
    let d2 = scratch("sim-b");
    assert!(run_in(&d1, &args).status.success());
    assert!(run_in(&d2, &args).status.success());
    assert_eq!(read(&d1, "sweep.csv"), read(&d2, "sweep.csv"));

    let csv = String::from_utf8(read(&d1, "sweep.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|t| t.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    let (r08, r10) = (&rows[0], &rows[1]);
    assert_eq!(r08[0], 0.8);
    assert_eq!(r10[0], 1.0);
    // The no-screening share rises with the tail shape; at these
    // shapes the gap dwarfs the 1000-trial standard errors.
    assert!(
        r10[2] - r08[2] > 3.0 * (r08[3] + r10[3]),
        "ratios {} vs {} with stderrs {} and {}",
        r08[2],
        r10[2],
        r08[3],
        r10[3]
    );

    let manifest: serde_json::Value =
        serde_json::from_slice(&read(&d1, "sweep.csv.manifest.json")).unwrap();
    assert_eq!(manifest["seed"], serde_json::json!(7));
}

#[test]
fn manifest_checksums_cover_all_outputs() {
    let d = scratch("manifest");
    let out = run_in(
        &d,
        &[
            "compare",
            "--marginal",
            "spareto:2",
            "--supply",
            "0.6",
            "--k-max",
            "6",
            "--out",
            "curve.csv",
            "--design-k",
            "4",
            "--design-out",
            "mech.json",
        ],
    );
    assert!(out.status.success());
    let manifest: serde_json::Value =
        serde_json::from_slice(&read(&d, "curve.csv.manifest.json")).unwrap();
    assert_eq!(manifest["command"], serde_json::json!("compare"));
    assert_eq!(manifest["version"], serde_json::json!(env!("CARGO_PKG_VERSION")));
    assert_eq!(manifest["params"]["supply"], serde_json::json!(0.6));
    let outputs = manifest["outputs"].as_object().unwrap();
    assert_eq!(outputs.len(), 2);
    for name in ["curve.csv", "mech.json"] {
        let want = outputs[name].as_str().unwrap();
        let got = format!("sha256:{:x}", Sha256::digest(read(&d, name)));
        assert_eq!(want, got, "checksum of {name}");
    }
    // Both sidecars carry the same manifest.
    assert_eq!(
        read(&d, "curve.csv.manifest.json"),
        read(&d, "mech.json.manifest.json")
    );
    // The mechanism dump exposes the contract fields.
    let mech: serde_json::Value = serde_json::from_slice(&read(&d, "mech.json")).unwrap();
    assert_eq!(mech["m_bar"], serde_json::json!(0.6));
    assert!(mech["rs"].as_f64().unwrap() > 0.0);
    let segments = mech["segments"].as_array().unwrap();
    assert!(!segments.is_empty());
    for seg in segments {
        for key in ["v_lo", "v_hi", "x", "p"] {
            assert!(seg.get(key).is_some(), "segment missing {key}");
        }
    }
}

#[test]
fn lp_mechanism_json_and_heatmap() {
    let d = scratch("lp");
    let out = run_in(
        &d,
        &[
            "lp",
            "--marginals",
            "exp:1,exp:1",
            "--n",
            "4",
            "--capacities",
            "0.25,0.25",
            "--out-mechanism",
            "mech.json",
            "--out-heatmap",
            "heat.csv",
        ],
    );
    assert!(out.status.success());
    let mech: serde_json::Value = serde_json::from_slice(&read(&d, "mech.json")).unwrap();
    assert_eq!(mech["n"], serde_json::json!(4));
    assert_eq!(mech["dimensions"], serde_json::json!(2));
    assert_eq!(mech["allocation"].as_array().unwrap().len(), 16);
    assert_eq!(mech["payments"].as_array().unwrap().len(), 16);
    let rs = mech["rs"].as_f64().unwrap();
    assert!((rs - 0.727_227_182_7).abs() < 1e-6, "rs = {rs}");
    let heat = String::from_utf8(read(&d, "heat.csv")).unwrap();
    assert_eq!(heat.lines().next().unwrap(), "v1,v2,x1,x2,p");
    assert_eq!(heat.lines().count(), 17);
}

#[test]
fn classify_writes_json_or_prints() {
    let d = scratch("classify");
    let out = run_in(&d, &["classify", "--marginal", "frechet:3"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("\"frechet\""));
    assert!(std::fs::read_dir(&d).unwrap().next().is_none(), "no files expected");

    let out = run_in(&d, &["classify", "--marginal", "uniform:2", "--out", "fam.json"]);
    assert!(out.status.success());
    let fam: serde_json::Value = serde_json::from_slice(&read(&d, "fam.json")).unwrap();
    assert_eq!(fam["family"], serde_json::json!("reverse_weibull"));
    assert!((fam["shape"].as_f64().unwrap() - 1.0).abs() < 0.05);
}

#[test]
fn invalid_input_exits_2_without_output() {
    let d = scratch("bad-input");
    let cases: &[&[&str]] = &[
        &["hazard", "--marginal", "weibull:-1", "--out", "x.csv"],
        &["hazard", "--marginal", "nonsense", "--out", "x.csv"],
        &["compare", "--marginal", "exp:1", "--supply", "1.5", "--out", "x.csv"],
        &["frechet-thresholds", "--alphas", "0.5", "--out", "x.csv"],
        &["rf", "--lo", "0.4", "--hi", "0.2", "--out", "x.csv"],
        &["lp", "--marginals", "exp:1", "--n", "4", "--capacities", "0.5,0.5", "--out-mechanism", "x.json"],
        &["simulate", "--marginal", "frechet:3", "--trials", "1000", "--out", "x.csv"],
        &["simulate", "--alphas", "0.8", "--trials", "999", "--out", "x.csv"],
    ];
    for args in cases {
        let out = run_in(&d, args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}");
    }
    assert!(
        std::fs::read_dir(&d).unwrap().next().is_none(),
        "failed runs must not leave files"
    );
}

#[test]
fn unwritable_output_exits_3() {
    let d = scratch("io-fail");
    let out = run_in(
        &d,
        &["rf", "--steps", "3", "--out", "no-such-dir/rf.csv"],
    );
    assert_eq!(out.status.code(), Some(3));
}
