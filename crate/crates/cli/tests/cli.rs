use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_atsolve"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().expect("spawn atsolve")
}

fn generate(dir: &Path, args: &[&str]) -> PathBuf {
    let out = run(&[&["generate"], args].concat(), dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let i = args.iter().position(|a| *a == "--out").unwrap();
    dir.join(args[i + 1])
}

fn schema_check(report: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/bench_report.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    let msgs: Vec<String> = match compiled.validate(report) {
        Ok(()) => Vec::new(),
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    assert!(msgs.is_empty(), "report violates schema: {msgs:#?}");
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stderr))
    })
}

#[test]
fn poisson_linear_json_report() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), &["poisson2d", "--grid", "32", "--out", "poisson32.mtx"]);
    std::fs::write(dir.path().join("p.txt"), "POLICY = TIME\n").unwrap();
    let out = run(
        &[
            "--matrix", "poisson32.mtx", "--mode", "linear", "--solver", "gmres", "--policy-file", "p.txt",
            "--threads", "4", "--report", "json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json_of(&out);
    schema_check(&r);
    let selected = r["tuning"]["selected"].as_str().unwrap();
    assert!(["u1", "u2", "u3"].contains(&selected), "{selected}");
    assert!(!r["tuning"]["forced"].as_bool().unwrap());
    for c in r["tuning"]["candidates"].as_array().unwrap() {
        assert!(c["executions"].as_u64().unwrap() <= 4);
    }
    assert_eq!(r["matrix"]["n"], 1024);
    assert!(r["accuracy"]["true_residual"].as_f64().unwrap() < 1e-8);
    assert_eq!(r["resources"]["workers"], 4);
    // one recurrence residual per inner iteration
    assert_eq!(
        r["solver"]["residual_history"].as_array().unwrap().len() as u64,
        r["solver"]["iterations"].as_u64().unwrap()
    );
    // 2·nnz flop model on the expanded matrix
    let nnz_full = 2 * r["matrix"]["nnz"].as_u64().unwrap() - 1024;
    let calls = r["resources"]["spmv_calls"].as_f64().unwrap();
    let secs = r["resources"]["spmv_seconds"].as_f64().unwrap();
    let expect = 2.0 * nnz_full as f64 * calls / secs / 1e9;
    let got = r["spmv_gflops"].as_f64().unwrap();
    assert!((got - expect).abs() <= 1e-9 * expect.max(1.0), "{got} vs {expect}");
}

#[test]
fn forced_kernel_marks_tuning() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), &["laplacian1d", "--n", "100", "--out", "lap1d.mtx"]);
    let out = run(&["--matrix", "lap1d.mtx", "--mode", "eigen", "-k", "4", "--kernel", "s3"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json_of(&out);
    schema_check(&r);
    assert!(r["tuning"]["forced"].as_bool().unwrap());
    assert_eq!(r["tuning"]["selected"], "s3");
    assert!(r["tuning"]["candidates"].as_array().unwrap().is_empty());
    assert_eq!(r["solver"]["name"], "lanczos");
    let mut got: Vec<f64> = r["eigen"]["eigenvalues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|z| z[0].as_f64().unwrap())
        .collect();
    got.sort_by(|a, b| b.total_cmp(a));
    for (j, g) in (97..=100).rev().zip(got) {
        let exact = 2.0 - 2.0 * (j as f64 * std::f64::consts::PI / 101.0).cos();
        assert!((g - exact).abs() < 1e-8);
    }
}

#[test]
fn missing_matrix_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["--mode", "linear"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--matrix"));
    assert!(err.contains("Usage"));
    assert!(out.stdout.is_empty());
}

#[test]
fn bad_inputs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), &["laplacian1d", "--n", "20", "--out", "l.mtx"]);
    std::fs::write(dir.path().join("bad.txt"), "POLICY = FAST\n").unwrap();
    let out = run(&["--matrix", "l.mtx", "--policy-file", "bad.txt"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    for v in ["TIME", "ACCURACY", "MEMORY", "STABLE"] {
        assert!(err.contains(v), "{err}");
    }
    assert_eq!(run(&["--matrix", "nope.mtx"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["--matrix", "l.mtx", "--kernel", "u9"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["--matrix", "l.mtx", "--mode", "eigen", "--solver", "gmres"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["generate", "poisson2d", "--grid", "1", "--out", "x.mtx"], dir.path()).status.code(), Some(1));
}

#[test]
fn unconverged_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), &["poisson2d", "--grid", "16", "--out", "p.mtx"]);
    let out = run(
        &["--matrix", "p.mtx", "--policy", "PRECONDITIONER=NONE", "--max-iters", "3", "--kernel", "u1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let r = json_of(&out);
    schema_check(&r);
    assert_eq!(r["accuracy"]["converged"], false);
    assert_eq!(r["solver"]["termination"]["kind"], "max_iterations");
}

#[test]
fn csv_rows_per_candidate_plus_summary() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), &["skewed_rows", "--n", "400", "--out", "s.mtx"]);
    let out = run(&["--matrix", "s.mtx", "--report", "csv", "--threads", "2", "--out", "r.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let mut rd = csv::Reader::from_path(dir.path().join("r.csv")).unwrap();
    let headers = rd.headers().unwrap().clone();
    let kind = headers.iter().position(|h| h == "row_type").unwrap();
    let selected = headers.iter().position(|h| h == "selected").unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    let (summary, candidates) = rows.split_last().unwrap();
    assert_eq!(&summary[kind], "summary");
    assert!(candidates.len() >= 3);
    assert!(candidates.iter().all(|r| &r[kind] == "candidate"));
    assert_eq!(candidates.iter().filter(|r| &r[selected] == "true").count(), 1);
}

#[test]
fn stable_policy_skips_tuning() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), &["poisson2d", "--grid", "32", "--out", "p.mtx"]);
    let args = ["--matrix", "p.mtx", "--policy", "POLICY=STABLE", "--threads", "2"];
    let a = json_of(&run(&args, dir.path()));
    let b = json_of(&run(&args, dir.path()));
    schema_check(&a);
    assert!(a["tuning"]["candidates"].as_array().unwrap().is_empty());
    assert_eq!(a["solver"]["outer_passes"], 1);
    let traj = a["solver"]["msize_trajectory"].as_array().unwrap();
    assert!(traj.iter().all(|m| m == &traj[0]));
    assert_eq!(a["accuracy"], b["accuracy"]);
    assert_eq!(a["solver"]["residual_history"], b["solver"]["residual_history"]);
}

#[test]
fn generated_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = generate(dir.path(), &["laplacian1d", "--n", "5", "--out", "l5.mtx"]);
    let text = std::fs::read_to_string(p).unwrap();
    assert!(text.starts_with("%%MatrixMarket matrix coordinate real symmetric"));
    let size_line = text.lines().find(|l| !l.starts_with('%')).unwrap();
    assert_eq!(size_line.split_whitespace().collect::<Vec<_>>(), ["5", "5", "9"]);
    let p = generate(dir.path(), &["poisson2d", "--grid", "4", "--out", "p4.mtx"]);
    let text = std::fs::read_to_string(p).unwrap();
    let size_line = text.lines().find(|l| !l.starts_with('%')).unwrap();
    // diagonal plus one stored entry per horizontal and vertical grid edge
    assert_eq!(size_line.split_whitespace().collect::<Vec<_>>(), ["16", "16", "40"]);
    let p = generate(dir.path(), &["convdiff2d", "--grid", "4", "--wind", "2", "--out", "c.mtx"]);
    assert!(std::fs::read_to_string(p).unwrap().contains("general"));
}
