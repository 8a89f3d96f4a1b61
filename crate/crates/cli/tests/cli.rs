use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use skewdiag_cli::RunManifest;

fn skewdiag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skewdiag"))
        .args(args)
        .env_remove("SKEWDIAG_OUT")
        .output()
        .expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn manifest(dir: &Path, command: &str) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{command}.manifest.json"))).unwrap()).unwrap()
}

#[test]
fn partition_counts() {
    let dir = tempfile::tempdir().unwrap();
    let o = skewdiag(&["partitions", "--k", "4", "--out", &out_arg(dir.path())]);
    assert!(o.status.success());
    let v = json(&dir.path().join("partitions.json"));
    assert_eq!(v["pair_partitions"], 3);

    let o = skewdiag(&["partitions", "--k", "6", "--list", "--out", &out_arg(dir.path())]);
    assert!(o.status.success());
    let v = json(&dir.path().join("partitions.json"));
    assert_eq!(v["noncrossing"], 5);
    assert_eq!(v["partitions"].as_array().unwrap().len(), 15);
}

#[test]
fn odd_order_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = skewdiag(&["partitions", "--k", "5", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("k must be even"));
    assert!(!dir.path().join("partitions.json").exists());
}

#[test]
fn unknown_flag_is_a_validation_failure() {
    let o = skewdiag(&["partitions", "--size", "4"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn volume_of_crossing_pair() {
    let dir = tempfile::tempdir().unwrap();
    let o = skewdiag(&["volume", "--partition", "{1,3}{2,4}", "--out", &out_arg(dir.path())]);
    assert!(o.status.success());
    let v = json(&dir.path().join("volume.json"));
    assert_eq!(v["exact"], "5/12");
    assert_eq!(v["method"], "exact");

    let o = skewdiag(&["volume", "--k", "4", "--method", "mc", "--samples", "20000", "--out", &out_arg(dir.path())]);
    assert!(o.status.success());
    let v = json(&dir.path().join("volume.json"));
    let records = v.as_array().unwrap();
    assert_eq!(records.len(), 3);
    assert!(records.iter().all(|r| r["exact"].is_null() && r["samples"] == 20000));
}

#[test]
fn moments_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = skewdiag(&["moments", "--kmax", "6", "--c", "0", "--out", &out_arg(dir.path())]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("moments.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "k,M_k_exact,M_k_float,M_k_stderr");
    assert!(lines[6].starts_with("6,5,5,"));
    for odd in [1, 3, 5] {
        assert!(lines[odd].starts_with(&format!("{odd},0,0,")));
    }

    let o = skewdiag(&["moments", "--kmax", "4", "--c", "1", "--out", &out_arg(dir.path())]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("moments.csv")).unwrap();
    assert!(csv.lines().nth(4).unwrap().starts_with("4,29/12,"));

    let o = skewdiag(&["moments", "--kmax", "4", "--c", "3/2", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let o = skewdiag(&["moments", "--kmax", "12", "--c", "1/2", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Monte Carlo"));
}

#[test]
fn simulate_rows_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = skewdiag(&[
            "simulate", "--regime", "hankel", "--n", "64", "--trials", "5", "--seed", "11", "--out",
            &out_arg(dir.path()),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let trials = std::fs::read_to_string(a.path().join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 6);
    assert!(trials.starts_with("seed,n,regime,m1,m2,m3,m4,m5,m6,m7,m8,ks\n"));
    let hist = std::fs::read_to_string(a.path().join("histogram.csv")).unwrap();
    let total: u64 = hist.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 5 * 64);
    assert_eq!(manifest(a.path(), "simulate").outputs, manifest(b.path(), "simulate").outputs);

    let o = skewdiag(&["simulate", "--regime", "hankel", "--n", "8", "--trials", "0", "--out", &out_arg(a.path())]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn matrix_dump_is_symmetric() {
    let dir = tempfile::tempdir().unwrap();
    let o = skewdiag(&[
        "simulate", "--regime", "weak_c1", "--rho", "0.5", "--n", "6", "--trials", "2", "--dump-matrices", "--out",
        &out_arg(dir.path()),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("matrix_0001.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,regime,seed"));
    assert!(lines.next().unwrap().starts_with("6,weak_c1(rho=0.5),"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 6);
    for p in 0..6 {
        for q in 0..6 {
            assert_eq!(rows[p][q].to_bits(), rows[q][p].to_bits());
        }
    }
}

#[test]
fn compare_passes_and_flags_negative_control() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let o = skewdiag(&["simulate", "--regime", "iid", "--n", "200", "--trials", "20", "--seed", "4", "--out", &out]);
    assert!(o.status.success());
    let o = skewdiag(&["compare", "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["rows"].as_array().unwrap().len(), 6);
    assert_eq!(report["any_flagged"], false);

    // iid spectra are nowhere near the Hankel limit at order 4
    let o = skewdiag(&["compare", "--c", "1", "--kmax", "4", "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&dir.path().join("report.json"))["any_flagged"], true);
}

#[test]
fn compare_rejects_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("trials.csv"), "seed,n,regime,m1,m2,m3,m4,m5,m6,m7,m8,ks\n").unwrap();
    let o = skewdiag(&["compare", "--input", &out_arg(dir.path()), "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no trials"));
}

#[test]
fn freeconv_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let o = skewdiag(&["freeconv", "--c", "1/2", "--kmax", "4", "--out", &out]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&dir.path().join("freeconv.json"))["all_hold"], true);
    let o = skewdiag(&["freeconv", "--c", "1/2", "--kmax", "6", "--circuit", "closed", "--out", &out]);
    assert_eq!(o.status.code(), Some(0));
    let o = skewdiag(&["freeconv", "--c", "1/2", "--kmax", "5", "--out", &out]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn concentration_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = skewdiag(&[
        "concentration", "--regime", "iid", "--k", "2", "--n-list", "16,32", "--trials", "50", "--out",
        &out_arg(dir.path()),
    ]);
    assert!(o.status.code().is_some_and(|c| c == 0 || c == 2));
    let csv = std::fs::read_to_string(dir.path().join("concentration.csv")).unwrap();
    assert!(csv.starts_with("n,k,fourth_central_moment,ratio_to_n2"));
    assert_eq!(csv.lines().count(), 3);
    let o = skewdiag(&["concentration", "--regime", "iid", "--trials", "10", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("from-config");
    std::fs::write(
        &cfg,
        format!(
            "seed = 7\nout = {:?}\n[simulate]\nregime = \"constant_c2\"\nc = 0.5\nn = 16\ntrials = 3\n",
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = skewdiag(&["--config", cfg.to_str().unwrap(), "simulate", "--trials", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out, "simulate");
    assert_eq!(m.seed, 7);
    assert_eq!(m.config["trials"], 4);
    assert_eq!(m.config["spec"]["n"], 16);
    assert_eq!(m.config["spec"]["regime"]["c"], 0.5);

    std::fs::write(&cfg, "[simulate]\nsize = 3\n").unwrap();
    let o = skewdiag(&["--config", cfg.to_str().unwrap(), "simulate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn environment_sets_default_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("env-out");
    let o = Command::new(env!("CARGO_BIN_EXE_skewdiag"))
        .args(["partitions", "--k", "2"])
        .env("SKEWDIAG_OUT", &target)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(target.join("partitions.json").exists());
}
