use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn anonaug(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anonaug")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = anonaug(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn generate(dir: &Path) -> (String, String) {
    ok(&["generate", "--profile", "italia", "--seed", "1", "--out-dir", p(dir)]);
    (p(&dir.join("data.csv")).into(), p(&dir.join("config.json")).into())
}

#[test]
fn anonymize_then_audit_then_augment() {
    let t = tempfile::tempdir().unwrap();
    let (data, config) = generate(&t.path().join("in"));
    let anon = t.path().join("anon.csv");

    let meta: serde_json::Value = serde_json::from_str(&ok(&[
        "anonymize", "--alg", "cba", "--k", "10", "--seed", "2", "--input", &data, "--config", &config, "--output", p(&anon),
    ]))
    .unwrap();
    assert_eq!(meta["algorithm"], "CBA");
    assert!(meta["report"]["k"].as_u64().unwrap() >= 10);
    assert!(meta["report"]["class_size_histogram"].is_object());
    assert!(meta["gcp"].as_f64().unwrap() > 0.0);
    assert!(anon.with_extension("json").is_file());

    let report: serde_json::Value =
        serde_json::from_str(&ok(&["audit", "--input", p(&anon), "--config", &config])).unwrap();
    assert_eq!(report["k"], meta["report"]["k"]);

    let out_dir = t.path().join("aug");
    let outcome: serde_json::Value = serde_json::from_str(&ok(&[
        "augment", "--input", p(&anon), "--config", &config, "--k", "10", "--backend", "synth", "--policy", "strict",
        "--count", "5", "--seed", "3", "--out-dir", p(&out_dir),
    ]))
    .unwrap();
    assert_eq!(outcome["records"], 105);
    assert!(outcome["post_k"].as_u64() >= outcome["pre_k"].as_u64());
    assert!(out_dir.join("merged.csv").is_file());
}

#[test]
fn sample_is_seeded() {
    let t = tempfile::tempdir().unwrap();
    let (data, config) = generate(t.path());
    let a = t.path().join("a.csv");
    let b = t.path().join("b.csv");
    for out in [&a, &b] {
        ok(&["sample", "--input", &data, "--config", &config, "--count", "30", "--seed", "9", "--output", p(out)]);
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 31);
    assert_eq!(text, fs::read_to_string(&b).unwrap());

    let out = anonaug(&["sample", "--input", &data, "--config", &config, "--count", "500", "--output", p(&a)]);
    assert!(!out.status.success());
}

#[test]
fn experiment_prints_tables_in_both_precisions() {
    let t = tempfile::tempdir().unwrap();
    let (data, config) = generate(t.path());
    for precision in ["64", "32"] {
        let out_dir = t.path().join(format!("exp{precision}"));
        let text = ok(&[
            "--precision", precision, "experiment", "--input", &data, "--config", &config, "--k-grid", "2,100,105",
            "--algs", "cba,bm", "--backends", "synth", "--seed", "1", "--parallel", "2", "--out-dir", p(&out_dir),
        ]);
        assert!(text.contains("k    BM"), "{text}");
        assert!(text.contains("BM/synth"));
        let row100 = text.lines().find(|l| l.starts_with("100 ")).unwrap();
        assert_eq!(row100.split_whitespace().collect::<Vec<_>>(), ["100", "=", "="]);
        assert!(text.contains("skipped: k exceeds n"));
        assert!(out_dir.join("results.json").is_file());
    }
}

#[test]
fn bad_arguments_fail() {
    let t = tempfile::tempdir().unwrap();
    let (data, config) = generate(t.path());
    let out = anonaug(&["experiment", "--input", &data, "--config", &config, "--k-grid", "5,2", "--out-dir", p(t.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("strictly increasing"));

    let out = anonaug(&["augment", "--input", &data, "--config", &config, "--k", "2", "--backend", "llm", "--out-dir", p(t.path())]);
    assert!(!out.status.success());

    let out = anonaug(&["audit", "--input", "/nonexistent.csv", "--config", &config]);
    assert!(!out.status.success());
}
