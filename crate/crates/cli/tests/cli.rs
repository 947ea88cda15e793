use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn admeq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_admeq"))
        .args(args)
        .env("ADMEQ_THREADS", "2")
        .output()
        .expect("spawn admeq")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_converges_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = admeq(&["solve", "--instance", "bpdn", "--algo", "alg1", "--iters", "1000", "--out", path(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("k,objective,primal_residual"), "{header}");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["converged"], true);
    for key in ["final_objective", "iterations", "wall_time_seconds"] {
        assert!(summary.get(key).is_some(), "{key}");
    }
}

#[test]
fn solve_without_convergence_exits_2() {
    let out = admeq(&["solve", "--instance", "bpdn", "--iters", "3"]);
    assert_eq!(code(&out), 2);
    // header plus k = 0..3
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 5);
}

#[test]
fn zero_iterations_give_a_single_row() {
    let out = admeq(&["solve", "--instance", "bp", "--algo", "alg3", "--iters", "0"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let rows: Vec<_> = stdout.lines().collect();
    assert_eq!(rows.len(), 2, "{stdout}");
    assert!(rows[1].starts_with("0,"));
}

#[test]
fn csv_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = admeq(&["solve", "--instance", "bpdn", "--seed", "7", "--iters", "50", "--out", path(dir.path())]);
        assert!(matches!(code(&out), 0 | 2));
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("trace.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn every_algorithm_tag_runs_somewhere() {
    for (instance, algo) in [
        ("bpdn", "alg2"),
        ("bpdn", "alg3"),
        ("bpdn", "alg4"),
        ("bpdn", "alg5"),
        ("bpdn", "rprs"),
        ("bpdn", "mixed"),
        ("tv", "alg1"),
        ("tv", "alg4"),
        ("three-block", "tb-primal"),
        ("three-block", "tb-dual"),
    ] {
        let out = admeq(&["solve", "--instance", instance, "--algo", algo, "--iters", "20"]);
        assert!(matches!(code(&out), 0 | 2), "{instance} {algo}: {}", stderr(&out));
    }
}

#[test]
fn bad_input_exits_1() {
    assert_eq!(code(&admeq(&["solve", "--algo", "alg9"])), 1);
    assert_eq!(code(&admeq(&["solve", "--instance", "tv", "--algo", "tb-primal"])), 1);
    assert_eq!(code(&admeq(&["solve", "--lambda", "-1"])), 1);
    assert_eq!(code(&admeq(&["solve", "--bogus"])), 1);
    assert_eq!(code(&admeq(&["verify", "--pair", "nope"])), 1);
    assert_eq!(code(&admeq(&["--help"])), 0);
}

#[test]
fn malformed_image_reports_a_location() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("bad.pgm");
    fs::write(&img, "P2\n2 2\n255\n0 1 x 3\n").unwrap();
    let out = admeq(&["solve", "--instance", "tv", "--image", path(&img)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("parse error at"), "{}", stderr(&out));

    let csv = dir.path().join("bad.csv");
    fs::write(&csv, "0,1\n1,oops\n").unwrap();
    let out = admeq(&["solve", "--instance", "tv", "--image", path(&csv)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn image_file_drives_tv() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("img.csv");
    fs::write(&img, "0,0,1,1\n0,0,1,1\n0,0,1,1\n0,0,1,1\n").unwrap();
    let out = admeq(&["verify", "--pair", "tv", "--image", path(&img)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn verify_passes_and_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = admeq(&["verify", "--pair", "alg1-alg2", "--instance", "bpdn", "--out", path(&report)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["pass"], true);
    assert_eq!(json["pair"], "alg1-alg2");
    assert!(json["per_quantity"].is_object());
}

#[test]
fn verify_negative_control_exits_3() {
    let out = admeq(&["verify", "--pair", "alg1-alg2", "--instance", "bpdn", "--perturb-init", "1e-3"]);
    assert_eq!(code(&out), 3);
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["pass"], false);
}

#[test]
fn verify_guards_exit_1() {
    let out = admeq(&["verify", "--pair", "alg5-alg1", "--instance", "bp"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("not affine"), "{}", stderr(&out));
    let out = admeq(&["verify", "--pair", "three-block", "--mu", "2"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn verify_report_is_deterministic() {
    let a = admeq(&["verify", "--pair", "tv", "--iters", "40"]);
    let b = admeq(&["verify", "--pair", "tv", "--iters", "40"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn suite_passes_in_its_variants() {
    for extra in [&[][..], &["--lambda", "10"], &["--iters", "0"]] {
        let mut args = vec!["suite"];
        args.extend_from_slice(extra);
        let out = admeq(&args);
        assert_eq!(code(&out), 0, "{extra:?}: {}", String::from_utf8_lossy(&out.stdout));
        let table = String::from_utf8_lossy(&out.stdout);
        assert!(table.lines().count() > 10);
        assert!(!table.contains("FAIL"));
    }
}

#[test]
fn suite_writes_all_reports() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("suite.json");
    let out = admeq(&["suite", "--iters", "20", "--out", path(&file)]);
    assert_eq!(code(&out), 0);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&file).unwrap()).unwrap();
    let reports = json.as_array().unwrap();
    assert!(reports.len() >= 10);
    assert!(reports.iter().all(|r| r["pass"] == true));
}
