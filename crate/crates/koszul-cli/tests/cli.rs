//! End-to-end tests of the `koszul` binary: documented invocations, file
//! pipelines, JSON output, and the exit-code contract (0 success, 1 failed
//! claim, 2 bad input, 3 budget exceeded).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_koszul"))
        .args(args)
        .current_dir(dir)
        .env_remove("KOSZUL_OUT_DIR")
        .output()
        .expect("binary should spawn")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process should exit normally")
}

/// Fresh scratch directory per test so parallel tests never collide.
fn scratch(name: &str) -> PathBuf {
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let dir = std::env::temp_dir().join(format!(
        "koszul-cli-{}-{}-{}",
        std::process::id(),
        name,
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn bound_for_det4_is_eleven() {
    let dir = scratch("bound");
    let out = run_in(&dir, &["bound", "--tensor", "det", "--n", "4", "--p", "1,2"]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out), "11\n");
}

#[test]
fn missing_input_file_exits_two() {
    let dir = scratch("missing");
    let out = run_in(&dir, &["rank", "missing-file.smat"]);
    assert_eq!(code(&out), 2);
    assert!(!out.stderr.is_empty());
}

#[test]
fn gen_flatten_rank_det_pipeline() {
    let dir = scratch("pipeline");
    let tensor = dir.join("det3.txt");
    let matrix = dir.join("det3.smat");

    let out = run_in(&dir, &["gen", "det", "--n", "3", "--output", tensor.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&tensor).unwrap();
    assert!(text.starts_with("tensor 3 3 3 3\n"), "unexpected header in {text:?}");

    let out = run_in(
        &dir,
        &["flatten", tensor.to_str().unwrap(), "--output", matrix.to_str().unwrap()],
    );
    assert_eq!(code(&out), 0);
    let smat = std::fs::read_to_string(&matrix).unwrap();
    assert!(smat.starts_with("%%smat 9 9 "), "unexpected header in {smat:?}");

    // The flattening of det_3 has full rank 9, rationally and mod 97.
    let out = run_in(&dir, &["rank", matrix.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "9\n");

    let out = run_in(&dir, &["rank", matrix.to_str().unwrap(), "--prime", "97"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "9\n");

    // Full rank means a nonzero determinant; mod 97 it must be a residue.
    let out = run_in(&dir, &["det", matrix.to_str().unwrap(), "--prime", "97"]);
    assert_eq!(code(&out), 0);
    let d: u64 = stdout(&out).trim().parse().unwrap();
    assert!(d != 0 && d < 97);
}

#[test]
fn flatten_to_stdout_without_output_file() {
    let dir = scratch("stdout");
    let out = run_in(&dir, &["flatten", "--tensor", "det", "--n", "3"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("%%smat 9 9 "));
}

#[test]
fn bound_needs_a_tensor_source() {
    let dir = scratch("bare-matrix");
    let matrix = dir.join("m.smat");
    let out = run_in(&dir, &["flatten", "--tensor", "det", "--n", "3", "-o", matrix.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    // A bare matrix file carries no flattening plan, so no divisor is known.
    let out = run_in(&dir, &["bound", matrix.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn determinant_rejects_rectangular_matrices() {
    let dir = scratch("rect");
    let matrix = dir.join("rect.smat");
    std::fs::write(&matrix, "%%smat 2 3 2 Q\n1 1 1\n2 3 5\n").unwrap();
    let out = run_in(&dir, &["det", matrix.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn stored_prime_field_conflicts_with_other_prime() {
    let dir = scratch("field");
    let matrix = dir.join("mod7.smat");
    std::fs::write(&matrix, "%%smat 2 2 2 Fp:7\n1 1 3\n2 2 4\n").unwrap();

    let out = run_in(&dir, &["rank", matrix.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "2\n");

    let out = run_in(&dir, &["rank", matrix.to_str().unwrap(), "--prime", "5"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn certify_then_verify_roundtrip() {
    let dir = scratch("certify");
    let certs = dir.join("certs");
    let out = run_in(
        &dir,
        &["certify", "det-lower", "--n", "3", "--out-dir", certs.to_str().unwrap()],
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("verdict: PROVED"), "unexpected output: {text}");

    let cert = certs.join("det-lower-n3.json");
    assert!(cert.is_file());
    let out = run_in(&dir, &["verify-certificate", cert.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("replay PASS (PROVED)"));
}

#[test]
fn verify_certificate_rejects_tampered_files() {
    let dir = scratch("tamper");
    let certs = dir.join("certs");
    let out = run_in(
        &dir,
        &["certify", "det-lower", "--n", "3", "--out-dir", certs.to_str().unwrap()],
    );
    assert_eq!(code(&out), 0);
    let cert = certs.join("det-lower-n3.json");
    let doctored = std::fs::read_to_string(&cert).unwrap().replace("\"rank\": 9", "\"rank\": 8");
    std::fs::write(&cert, doctored).unwrap();

    let out = run_in(&dir, &["verify-certificate", cert.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("replay FAIL"));
}

#[test]
fn out_dir_env_variable_is_honored() {
    let dir = scratch("env");
    let certs = dir.join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_koszul"))
        .args(["certify", "det-lower", "--n", "3"])
        .current_dir(&dir)
        .env("KOSZUL_OUT_DIR", &certs)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(certs.join("det-lower-n3.json").is_file());
}

#[test]
fn json_output_is_machine_readable() {
    let dir = scratch("json");
    let certs = dir.join("certs");

    let out = run_in(&dir, &["--json", "rank", "--tensor", "det", "--n", "3"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["rank"], 9);
    assert_eq!(v["nrows"], 9);
    assert_eq!(v["prime"], serde_json::Value::Null);

    let out = run_in(
        &dir,
        &[
            "--json",
            "certify",
            "det-lower",
            "--n",
            "3",
            "--out-dir",
            certs.to_str().unwrap(),
        ],
    );
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["verdict"], "PROVED");
    assert_eq!(v["bound"], 5);
    assert!(v["path"].as_str().unwrap().ends_with("det-lower-n3.json"));
}

#[test]
fn decomposition_verification_accepts_and_rejects() {
    let dir = scratch("decomp");
    let good = dir.join("good.txt");
    let bad = dir.join("bad.txt");
    // e1 % e2 - e2 % e1 is exactly the 2 x 2 determinant tensor.
    std::fs::write(&good, "decomposition 2 2\nterm\n1 0\n0 1\nterm\n0 -1\n1 0\n").unwrap();
    std::fs::write(&bad, "decomposition 2 1\nterm\n1 0\n0 1\n").unwrap();

    let out = run_in(
        &dir,
        &["verify-decomposition", "--tensor", "det", "--n", "2", "--terms", good.to_str().unwrap()],
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("decomposition verified"));

    let out = run_in(
        &dir,
        &["verify-decomposition", "--tensor", "det", "--n", "2", "--terms", bad.to_str().unwrap()],
    );
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("REJECTED"));
}

#[test]
fn decompose_reports_connected_components() {
    let dir = scratch("components");
    let out = run_in(&dir, &["--json", "decompose", "--tensor", "perm", "--n", "4"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["nrows"], 96);
    assert_eq!(v["ncols"], 96);
    let comps = v["components"].as_array().unwrap();
    assert!(!comps.is_empty());
    let covered: u64 = comps.iter().map(|c| c["cols"].as_u64().unwrap()).sum();
    let orphans = v["orphan_cols"].as_array().unwrap().len() as u64;
    assert_eq!(covered + orphans, 96);
}
