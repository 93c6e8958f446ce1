use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mpcert_core::tanner::{girth, parse_alist};

fn mpcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpcert"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(out)))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn help_documents_every_flag() {
    let cases: &[(&str, &[&str])] = &[
        ("decode", &["--code", "--example1", "--llr", "--channel", "--param", "--seed", "--perturb", "--algorithm", "--beta", "--iters", "--fp-tol", "--div-threshold", "--div-window", "--no-divergence-detection", "--stop-on-codeword", "--rho", "--certify", "--messages", "--config", "--jobs"]),
        ("threshold", &["--dv", "--dc", "--beta", "--channel", "--population", "--tol", "--max-iters", "--target", "--lo", "--hi", "--stall-window", "--seed", "--csv"]),
        ("campaign", &["--output", "--seed", "--trials"]),
        ("gencode", &["--n", "--dv", "--dc", "--girth", "--seed", "--out"]),
        ("certify", &["--tol-cert", "--ml", "--beta", "--llr"]),
    ];
    for (sub, flags) in cases {
        let out = mpcert(&[sub, "--help"]);
        assert_eq!(code(&out), 0);
        let text = stdout(&out);
        for f in *flags {
            assert!(text.contains(f), "{sub} --help lacks {f}");
        }
    }
}

#[test]
fn gencode_is_deterministic_and_meets_girth() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.alist");
    let b = dir.path().join("b.alist");
    for p in [&a, &b] {
        let out = mpcert(&["gencode", "--n", "1000", "--girth", "6", "--seed", "3", "--out", p.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let g = parse_alist(&text).unwrap();
    assert_eq!((g.n(), g.regular_degrees()), (1000, Some((3, 6))));
    assert!(girth(&g).unwrap() >= 6);
}

#[test]
fn gencode_infeasible_exits_3() {
    let out = mpcert(&["gencode", "--n", "12", "--dv", "3", "--dc", "6", "--girth", "12"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn decode_all_minus_one_on_the_example_code() {
    let dir = tempfile::tempdir().unwrap();
    let llr = write(dir.path(), "llr.txt", &"-1\n".repeat(12));
    let out = mpcert(&["decode", "--example1", "--llr", &llr, "--beta", "0.8", "--iters", "500"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    // Every check has degree 4, so each check message equals the incoming
    // message and v ← −1 + 1.6 v runs to −∞: all ones, itself a codeword.
    assert_eq!(v["hard"], "111111111111");
    assert_eq!(v["status"]["kind"], "divergent_consistent");
    assert_eq!(v["is_codeword"], true);
    assert!(v.get("messages").is_none());
}

#[test]
fn decode_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let llr = write(dir.path(), "llr.txt", &"1\n".repeat(12));
    assert_eq!(code(&mpcert(&["decode", "--example1", "--llr", &llr, "--beta", "1.5"])), 2);
    assert_eq!(code(&mpcert(&["decode", "--example1", "--llr", "/nonexistent/llr.txt"])), 2);
    assert_eq!(code(&mpcert(&["decode", "--code", "/nonexistent/code.alist", "--llr", &llr])), 2);
    let short = write(dir.path(), "short.txt", "1 2 3");
    assert_eq!(code(&mpcert(&["decode", "--example1", "--llr", &short])), 2);
    assert_eq!(code(&mpcert(&["decode", "--example1", "--llr", &llr, "--bogus"])), 2);
}

#[test]
fn decode_with_channel_is_seeded() {
    let args = ["decode", "--example1", "--channel", "bsc", "--param", "0.1", "--seed", "9", "--certify", "--beta", "0.4"];
    let a = mpcert(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, mpcert(&args).stdout);
    let trmp = mpcert(&["decode", "--example1", "--channel", "bsc", "--param", "0.1", "--algorithm", "trmp", "--iters", "50"]);
    assert_eq!(code(&trmp), 0);
    let v = json(&trmp);
    assert_eq!(v["iters"], 50);
    // (12(1 + 4/3) − 1) / 36
    assert!((v["rho"].as_f64().unwrap() - 27.0 / 36.0).abs() < 1e-12);
}

#[test]
fn config_table_fills_missing_flags_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let llr = write(dir.path(), "llr.txt", &"1\n".repeat(12));
    let cfg = write(dir.path(), "cfg.toml", "[decode]\nbeta = 1.5\niters = 7\nno_divergence_detection = true\n");
    assert_eq!(code(&mpcert(&["--config", &cfg, "decode", "--example1", "--llr", &llr])), 2);
    let out = mpcert(&["--config", &cfg, "decode", "--example1", "--llr", &llr, "--beta", "0.3"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["beta"], 0.3);
    let bad = write(dir.path(), "bad.toml", "[decode]\nnot_a_flag = 1\n");
    assert_eq!(code(&mpcert(&["--config", &bad, "decode", "--example1", "--llr", &llr])), 2);
}

#[test]
fn certify_reports_ml_agreement() {
    let out = mpcert(&["certify", "--example1", "--channel", "bsc", "--param", "0.05", "--seed", "4", "--beta", "0.45", "--iters", "3000", "--ml"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["status"]["kind"], "converged");
    assert_eq!(v["certified"], true, "{v}");
    assert_eq!(v["ml"]["agrees"], true);
}

#[test]
fn threshold_outcomes_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curve.csv");
    let quick = ["--population", "20000", "--max-iters", "150", "--csv", csv.to_str().unwrap()];
    let mut args = vec!["threshold", "--beta", "0.3"];
    args.extend(quick);
    let out = mpcert(&args);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("no_threshold"));

    let mut args = vec!["threshold", "--beta", "0.5", "--lo", "0.005", "--hi", "0.01"];
    args.extend(quick);
    let out = mpcert(&args);
    assert_eq!(code(&out), 3);

    let table = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("dv,dc,beta"));
    assert!(lines[1].contains("no_threshold") && lines[2].contains("error"));
}

#[test]
fn wer_campaign_resumes_to_identical_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let recipe = write(
        dir.path(),
        "wer.toml",
        &format!(
            r#"grid = [0.04, 0.08]
trials = 30
seed = 5
output = "{}"
checkpoint = 16
perturbation = 1e-9

[graph]
source = "generate"
n = 96
dv = 3
dc = 6
girth = 6
seed = 2

[channel]
kind = "bsc"
p = 0.05

[[decoders]]
algorithm = "wms"
beta = 0.5
iters = 100

[[decoders]]
algorithm = "trmp"
iters = 50
"#,
            out_dir.display()
        ),
    );
    let first = mpcert(&["campaign", "wer", &recipe]);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    let trials = fs::read(out_dir.join("trials.csv")).unwrap();
    let summary = fs::read(out_dir.join("summary.csv")).unwrap();
    assert!(out_dir.join("manifest.json").exists());
    assert_eq!(stdout(&first).as_bytes(), summary.as_slice());
    // tear the tail as a killed run would, then resume
    fs::write(out_dir.join("trials.csv"), &trials[..trials.len() * 2 / 3]).unwrap();
    let again = mpcert(&["campaign", "wer", &recipe]);
    assert_eq!(code(&again), 0);
    assert_eq!(fs::read(out_dir.join("trials.csv")).unwrap(), trials);
    assert_eq!(fs::read(out_dir.join("summary.csv")).unwrap(), summary);
    // a different seed in the same directory is refused
    assert_eq!(code(&mpcert(&["campaign", "wer", &recipe, "--seed", "6"])), 2);
}

#[test]
fn census_and_conjecture_campaigns_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let census = write(
        dir.path(),
        "census.toml",
        &format!("output = \"{}\"\np = 0.1\nbeta = 0.8\niters = 200\nblocks = 300\nseed = 1\n", dir.path().join("c").display()),
    );
    let out = mpcert(&["campaign", "census", &census]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("c/census.csv")).unwrap();
    assert!(table.starts_with("blocks,returned_codeword"));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("c/census.json")).unwrap()).unwrap();
    assert_eq!(v["blocks"], 300);

    let probe = write(
        dir.path(),
        "probe.toml",
        &format!(
            "output = \"{}\"\ndv = 3\ndc = 6\nn = 96\ngirth = 4\ngrid = [0.01, 0.2]\ntrials = 8\nmax_iters = 300\nseed = 1\n",
            dir.path().join("p").display()
        ),
    );
    let out = mpcert(&["campaign", "conjecture", &probe]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Vec<_> = fs::read_to_string(dir.path().join("p/conjecture.csv")).unwrap().lines().map(String::from).collect();
    assert_eq!(rows.len(), 3);

    let broken = write(dir.path(), "broken.toml", "p = 0.1\n");
    assert_eq!(code(&mpcert(&["campaign", "census", &broken])), 2);
}
