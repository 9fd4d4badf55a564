use std::path::Path;
use std::process::Command;

use learnwidth::cli::{self, EXIT_DATA, EXIT_NO, EXIT_USAGE, EXIT_YES};
use learnwidth::incoherence::Certificate;
use learnwidth::learnability::{fixture_states, verify_povm, Fixture, Povm};
use learnwidth::matrix::CVec;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("learnwidth").chain(args.iter().copied());
    let code = cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const EXAMPLE: &str = r#"{"n": 4, "entries": [[2, 1, 1, -1], [1, 2, 0, 1], [1, 0, 2, -1], [-1, 1, -1, 2]]}"#;

#[test]
fn learnable_exit_codes() {
    assert_eq!(run(&["learnable", "fixture:trine", "-k", "2"]).0, EXIT_YES);
    let (code, out, _) = run(&["learnable", "fixture:trine", "-k", "1"]);
    assert_eq!(code, EXIT_NO);
    assert!(out.contains("4.08248"), "{out}");
}

#[test]
fn width_of_matrix_file_and_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", EXAMPLE);
    let (code, out, _) = run(&["width", &m]);
    assert_eq!(code, EXIT_YES);
    assert!(out.trim().ends_with('3'), "{out}");
    let (code, out, _) = run(&["--output", "json", "width", "fixture:tetrahedral"]);
    assert_eq!(code, EXIT_YES);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["width"], 2);
}

#[test]
fn json_output_is_reproducible_for_a_seed() {
    let args = ["--output", "json", "--seed", "7", "learnable", "fixture:random(4,3)", "-k", "3"];
    let (c1, a, _) = run(&args);
    let (c2, b, _) = run(&args);
    assert_eq!(c1, c2);
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert!(v.get("verdict").is_some(), "{a}");
    let (_, other, _) = run(&["--output", "json", "--seed", "8", "fixtures", "random(4,3)"]);
    let (_, same, _) = run(&["--output", "json", "--seed", "7", "fixtures", "random(4,3)"]);
    assert_ne!(other, same);
}

#[test]
fn certificate_round_trip_and_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let cert_path = dir.path().join("cert.json");
    let cert = cert_path.to_str().unwrap();
    assert_eq!(run(&["certificate", "fixture:tetrahedral", "-k", "2", "-o", cert]).0, EXIT_YES);
    let text = std::fs::read_to_string(&cert_path).unwrap();
    let parsed = Certificate::from_json(&text).unwrap();
    assert!(parsed.vectors.len() <= 17);
    assert_eq!(run(&["verify", "fixture:tetrahedral", cert]).0, EXIT_YES);

    let mut tampered = parsed.clone();
    tampered.vectors[0] = CVec::zeros(4);
    let bad = write(dir.path(), "bad.json", &tampered.to_json());
    let (code, out, _) = run(&["verify", "fixture:tetrahedral", &bad]);
    assert_eq!(code, EXIT_NO);
    assert!(out.to_lowercase().contains("sum"), "{out}");
}

#[test]
fn certificate_refused_when_not_incoherent() {
    let (code, out, _) = run(&["certificate", "fixture:trine", "-k", "1"]);
    assert_eq!(code, EXIT_NO);
    assert!(out.contains("distance"), "{out}");
}

#[test]
fn clique_decisions() {
    let dir = tempfile::tempdir().unwrap();
    let triangle = write(dir.path(), "tri.txt", "3 3\n1 2\n2 3\n1 3\n");
    let path = write(dir.path(), "p3.txt", "# a path\n3 2\n1 2\n2 3\n");
    assert_eq!(run(&["clique", &triangle, "-k", "3"]).0, EXIT_YES);
    assert_eq!(run(&["clique", &path, "-k", "3"]).0, EXIT_NO);
    assert_eq!(run(&["--method", "sdp", "clique", &triangle, "-k", "3"]).0, EXIT_YES);
    assert_eq!(run(&["clique", &triangle, "-k", "1"]).0, EXIT_USAGE);
    let broken = write(dir.path(), "loop.txt", "2 1\n1 1\n");
    let (code, _, err) = run(&["clique", &broken, "-k", "2"]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn povm_file_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("povm.json");
    assert_eq!(run(&["povm", "fixture:tetrahedral", "-k", "2", "-o", p.to_str().unwrap()]).0, EXIT_YES);
    let povm = Povm::from_json(&std::fs::read_to_string(&p).unwrap()).unwrap();
    let s = fixture_states(&Fixture::Tetrahedral).unwrap();
    assert!(verify_povm(&s, &povm, 1e-6).valid);
    assert_eq!(run(&["povm", "fixture:trine", "-k", "1"]).0, EXIT_NO);
}

#[test]
fn fixtures_listing() {
    let (code, out, _) = run(&["fixtures"]);
    assert_eq!(code, EXIT_YES);
    assert!(out.contains("trine") && out.contains("tetrahedral"), "{out}");
    let (code, out, _) = run(&["fixtures", "basis(3)"]);
    assert_eq!(code, EXIT_YES);
    assert!(out.contains("\"d\":3"), "{out}");
    assert_eq!(run(&["fixtures", "nonsense"]).0, EXIT_USAGE);
}

#[test]
fn usage_and_data_errors() {
    assert_eq!(run(&["learnable"]).0, EXIT_USAGE);
    assert_eq!(run(&["learnable", "/nonexistent/file.json", "-k", "1"]).0, EXIT_DATA);
    assert_eq!(run(&["--method", "sdp", "learnable", "fixture:trine", "-k", "1"]).0, EXIT_USAGE);
    assert_eq!(run(&["learnable", "fixture:trine", "-k", "9"]).0, EXIT_USAGE);
    let dir = tempfile::tempdir().unwrap();
    let junk = write(dir.path(), "junk.json", "{not json");
    assert_eq!(run(&["width", &junk]).0, EXIT_DATA);
}

#[test]
fn binary_exit_codes_and_cap_from_environment() {
    let bin = env!("CARGO_BIN_EXE_learnwidth");
    let code = |k: &str| Command::new(bin).args(["learnable", "fixture:trine", "-k", k]).output().unwrap().status.code();
    assert_eq!(code("2"), Some(EXIT_YES));
    assert_eq!(code("1"), Some(EXIT_NO));
    let out = Command::new(bin)
        .args(["--method", "subset", "width", "fixture:basis(6)"])
        .env("LEARNWIDTH_CAP", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}
