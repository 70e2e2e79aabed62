//! End-to-end runs of the `relinfo` binary.

use std::path::Path;
use std::process::{Command, Output};

use relinfo_cli::report::Report;
use serde_json::Value;

fn relinfo(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relinfo"))
        .args(args)
        .current_dir(dir)
        .env_remove("RELINFO_WORKERS")
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Report {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("report parses")
}

fn estimate(v: &Value) -> f64 {
    v["estimate"].as_f64().expect("estimate present")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

const SURVIVAL: &str = "time,status,cov1\n0.4,1,1\n0.9,1,0\n1.3,0,1\n1.7,1,1\n2.2,1,0\n2.9,1,1\n3.0,1,0\n3.5,0,0\n4.1,1,0\n";

#[test]
fn binomial_example_gives_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let r = report(&relinfo(&["binom-ri", "--x", "30", "--n-obs", "50", "--n-missing", "50", "--p0", "0.5"], dir.path()));
    assert_eq!(r.command, "binom-ri");
    assert!((estimate(&r.results["ri1"]) - 0.5).abs() < 1e-12);
    assert_eq!(estimate(&r.results["ri1_closed_form"]), 0.5);
    assert_eq!(r.provenance.seed, relinfo::mc::DEFAULT_SEED);
}

#[test]
fn design_example_reports_96_percent() {
    let dir = tempfile::tempdir().unwrap();
    let r = report(&relinfo(&["design-eval", "--design-a", "base-doubled", "--design-b", "interlaced"], dir.path()));
    let ratio = &r.results["variance_ratio"];
    assert!((estimate(ratio) - 0.9638).abs() < 5e-4);
    assert_eq!(ratio["display"], "96%");
    assert!(r.results["external_contrast"]["note"].is_string());
}

#[test]
fn design_files_match_expressions() {
    let dir = tempfile::tempdir().unwrap();
    let points: String = (0..=9).map(|i| format!("{}\n", i as f64 / 9.0)).collect();
    let file = write(dir.path(), "base.txt", &format!("# base design\n{points}\n"));
    let from_file = report(&relinfo(&["design-eval", "--design-a-file", &file, "--design-b", "base", "--centered"], dir.path()));
    assert!((estimate(&from_file.results["variance_ratio"]) - 1.0).abs() < 1e-12);
    assert!(from_file.results["centered"]["variance_ratio"].is_object());
}

#[test]
fn cox_naive_without_new_subjects_is_exactly_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "s.csv", SURVIVAL);
    let r = report(&relinfo(&["cox-ri", "--data", &data, "--mode", "naive", "--n-new", "0", "--draws", "200"], dir.path()));
    assert_eq!(estimate(&r.results["naive"]["ri1"]), 1.0);
    assert_eq!(r.results["naive"]["ri1"]["mc_standard_error"], 0.0);
}

#[test]
fn cox_both_modes_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "s.csv", SURVIVAL);
    let r = report(&relinfo(
        &["cox-ri", "--data", &data, "--mode", "both", "--n-new", "3", "--new-covariates", "1", "--draws", "300", "--csv", "tables"],
        dir.path(),
    ));
    for key in ["naive", "correct"] {
        let ri = &r.results[key]["ri1"];
        assert!(estimate(ri) > 0.0 && ri["mc_standard_error"].as_f64().unwrap() > 0.0, "{key}: {ri}");
    }
    assert!(dir.path().join("tables/cox-ri_summary.csv").exists());
    let baseline = std::fs::read_to_string(dir.path().join("tables/cox-ri_baseline.csv")).unwrap();
    assert!(baseline.starts_with("time,jump\n"));
    assert_eq!(baseline.lines().count(), 1 + 7);
}

#[test]
fn report_inputs_reproduce_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["ri-y", "--x", "55", "--n-obs", "100", "--n-missing", "50", "--p1", "0.55", "--draws", "500", "--seed", "9", "--out", "a.json"];
    let out = relinfo(&args, dir.path());
    assert!(out.status.success());
    let first: Report = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.json")).unwrap()).unwrap();

    // rerun from the echoed argv, redirecting the output
    let mut argv: Vec<String> = first.inputs.argv.clone();
    let at = argv.iter().position(|a| a == "a.json").unwrap();
    argv[at] = "b.json".into();
    let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
    assert!(relinfo(&argv, dir.path()).status.success());
    let second: Report = serde_json::from_str(&std::fs::read_to_string(dir.path().join("b.json")).unwrap()).unwrap();
    assert_eq!(first.comparable(), second.comparable());

    // and from the echoed configuration, under another worker count
    let third = report(&relinfo(&["--config", "a.json", "--workers", "3"], dir.path()));
    assert_eq!(first.comparable(), third.comparable());
    assert_eq!(third.provenance.workers, 3);
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["binom-ri", "--x", "12", "--n-obs", "40", "--n-missing", "30", "--route", "monte-carlo", "--draws", "3000"];
    let runs: Vec<Value> = ["1", "4", "8"]
        .iter()
        .map(|w| {
            let out = Command::new(env!("CARGO_BIN_EXE_relinfo"))
                .args(args)
                .env("RELINFO_WORKERS", w)
                .current_dir(dir.path())
                .output()
                .unwrap();
            report(&out).comparable()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}

#[test]
fn lod_var_reports_gap_with_standard_errors() {
    let dir = tempfile::tempdir().unwrap();
    let r = report(&relinfo(&["lod-var", "--x", "30", "--n-obs", "50", "--n-missing", "50", "--draws", "2000", "--log10"], dir.path()));
    assert_eq!(r.results["observed_lod"]["scale"], "log10");
    assert!(r.results["lod_gap"]["standard_error"].as_f64().unwrap() > 0.0);
    assert_eq!(r.results["dominance_violations"], 0);
    assert!(estimate(&r.results["lod_ratio_variance"]) > 0.0);
}

#[test]
fn combine_warns_on_missing_pairs_and_rejects_mixed_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(
        dir.path(),
        "ok.json",
        r#"[{"lod_observed": 2.0, "ri1": 0.5, "label": "a", "pair": {"theta_null": [0.5], "theta_alt": [0.6]}},
            {"lod_observed": 1.0, "ri1": 0.25}]"#,
    );
    let r = report(&relinfo(&["combine", "--studies", &ok], dir.path()));
    assert!((estimate(&r.results["combined_ri1"]) - 0.375).abs() < 1e-15);
    assert_eq!(r.warnings.len(), 1);
    assert!(r.warnings[0].contains("#2"));

    let mixed = write(
        dir.path(),
        "mixed.json",
        r#"[{"lod_observed": 2.0, "ri1": 0.5, "pair": {"theta_null": [0.5], "theta_alt": [0.6]}},
            {"lod_observed": 1.0, "ri1": 0.25, "pair": {"theta_null": [0.5], "theta_alt": [0.7]}}]"#,
    );
    let out = relinfo(&["combine", "--studies", &mixed], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes_and_error_locations() {
    let dir = tempfile::tempdir().unwrap();

    let missing_flag = relinfo(&["binom-ri", "--x", "3"], dir.path());
    assert_eq!(missing_flag.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing_flag.stderr).contains("--n-obs"));

    let bad = write(dir.path(), "bad.csv", "time,status,cov1\n1.0,1,0\n2.0,1,0,5\n");
    let out = relinfo(&["cox-ri", "--data", &bad], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("bad.csv") && msg.contains("line 3"), "{msg}");

    let bad = write(dir.path(), "bad2.csv", "time,status,cov1\n1.0,1,0\n2.0,1,1e\n");
    let msg = String::from_utf8_lossy(&relinfo(&["cox-ri", "--data", &bad], dir.path()).stderr).into_owned();
    assert!(msg.contains("line 3") && msg.contains("column 3 (cov1)"), "{msg}");

    // an observed proportion on the boundary has no interior MLE
    let boundary = relinfo(&["lod-var", "--x", "0", "--n-obs", "10"], dir.path());
    assert_eq!(boundary.status.code(), Some(3));

    // completely separated covariate: the partial likelihood has no finite maximum
    let sep = write(dir.path(), "sep.csv", "time,status,cov1\n1,1,0\n2,1,0\n3,1,1\n4,0,1\n");
    assert_eq!(relinfo(&["cox-ri", "--data", &sep, "--draws", "10"], dir.path()).status.code(), Some(3));

    assert_eq!(relinfo(&["ri-y", "--x", "3", "--n-obs", "10", "--p1", "1.5"], dir.path()).status.code(), Some(2));
    assert_eq!(relinfo(&["lod-var", "--x", "3", "--n-obs", "10", "--draws", "1"], dir.path()).status.code(), Some(2));
    assert_eq!(relinfo(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(relinfo(&[], dir.path()).status.code(), Some(2));

    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"seed": 1, "draws": 10, "log10": false, "verbose": true, "experiment": {"command": "design-eval", "design_a": "base", "design_b": "interlaced"}}"#,
    );
    assert_eq!(relinfo(&["--config", &cfg], dir.path()).status.code(), Some(2));
}

#[test]
fn replication_subcommand_summarizes_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let r = report(&relinfo(&["doss-replication", "--datasets", "6", "--draws", "200", "--csv", "t"], dir.path()));
    assert_eq!(r.results["n_datasets"], 6);
    assert_eq!(r.results["rows"].as_array().unwrap().len(), 6);
    let p = estimate(&r.results["fraction_naive_above_one"]);
    assert!((0.0..=1.0).contains(&p));
    let table = std::fs::read_to_string(dir.path().join("t/doss-replication_datasets.csv")).unwrap();
    assert_eq!(table.lines().count(), 7);
}
