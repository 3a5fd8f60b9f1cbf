mod common;

use common::*;
use pinv_core::cli::{run, EXIT_ERROR, EXIT_FAILED, EXIT_OK};

fn pinv(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("pinv").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path(name: &str) -> String {
    corpus(name).display().to_string()
}

#[test]
fn graph_proof_succeeds() {
    if !solver_available() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let (code, out, _) = pinv(&[
        "verify", "--program", &path("critical_int.prg"), "--spec", &path("critical_int.inv"),
        "--graph", &path("critical_int.graph"), "--jobs", "4", "--report", report.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{out}");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["totals"]["valid"], json["totals"]["generated"]);
    assert_eq!(json["config"]["rule"], "ginv");
    assert!(json["config"].get("jobs").is_none());
}

#[test]
fn failing_candidate_reports_models() {
    if !solver_available() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let (code, out, _) = pinv(&[
        "verify", "--program", &path("critical_int.prg"), "--spec", &path("critical_int.inv"),
        "--invariant", "mutex", "--rule", "pinv", "--report", report.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_FAILED);
    assert!(out.contains("FAILED mutex__P2-i__t4"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let failed: Vec<&serde_json::Value> =
        json["rows"].as_array().unwrap().iter().filter(|r| r["status"] == "invalid").collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|r| r["model"].is_object() && r["provenance"]["transition"] == "t4"));
}

#[test]
fn position_only_runs_need_no_solver() {
    let dir = tempfile::tempdir().unwrap();
    let inv = dir.path().join("loc.inv");
    std::fs::write(&inv, "invariant somewhere(i) := pc(i) in {1, 2, 3, 4, 5, 6, 7}\n").unwrap();
    let (code, out, err) = pinv(&[
        "verify", "--program", &path("critical_int.prg"), "--spec", inv.to_str().unwrap(),
        "--invariant", "somewhere", "--solver-cmd", "/nonexistent/solver",
    ]);
    assert_eq!(code, EXIT_OK, "{out}{err}");
}

#[test]
fn vcs_writes_scripts_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = pinv(&[
        "vcs", "--program", &path("critical_sect.prg"), "--spec", &path("critical_sect.inv"),
        "--invariant", "mutexS", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["premises"].as_array().unwrap().len(), 22);
    for vc in m["vcs"].as_array().unwrap() {
        let file = vc["file"].as_str().unwrap();
        let text = std::fs::read_to_string(dir.path().join(file)).unwrap();
        assert!(text.ends_with("(check-sat)\n(get-model)\n"));
    }
}

#[test]
fn errors_exit_with_three() {
    let blocker = tempfile::NamedTempFile::new().unwrap();
    let out_dir = blocker.path().join("sub");
    let (code, _, err) = pinv(&[
        "vcs", "--program", &path("critical_sect.prg"), "--spec", &path("critical_sect.inv"),
        "--invariant", "mutexS", "--out", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("error:"));

    let bad = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(bad.path(), "procedure main()\nbegin\n  1: await\nend\n").unwrap();
    let (code, _, err) = pinv(&[
        "verify", "--program", bad.path().to_str().unwrap(), "--spec", &path("critical_int.inv"),
        "--invariant", "mutex",
    ]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains(":4:1:"), "{err}");

    let (code, _, _) = pinv(&["verify", "--program", &path("critical_int.prg")]);
    assert_eq!(code, EXIT_ERROR);
    let (code, _, _) = pinv(&["frobnicate"]);
    assert_eq!(code, EXIT_ERROR);
    let (code, out, _) = pinv(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("verify"));
}

#[test]
fn oracle_exit_codes() {
    let (code, out, _) = pinv(&[
        "oracle", "--program", &path("critical_sect.prg"), "--spec", &path("critical_sect.inv"),
        "--invariant", "mutexS", "--threads", "2", "--bound", "4",
    ]);
    assert_eq!(code, EXIT_OK, "{out}");

    let dir = tempfile::tempdir().unwrap();
    let inv = dir.path().join("idle.inv");
    std::fs::write(&inv, "macro active(k) := pc(k) in {4, 5, 6}\ninvariant idle(i) := !active(i)\n").unwrap();
    let (code, out, _) = pinv(&[
        "oracle", "--program", &path("critical_int.prg"), "--spec", inv.to_str().unwrap(), "--threads", "2",
    ]);
    assert_eq!(code, EXIT_FAILED);
    assert!(out.contains("violated") && out.contains("t3[0]"), "{out}");

    let (code, out, _) = pinv(&[
        "oracle", "--program", &path("critical_int.prg"), "--threads", "2", "--bound", "4",
        "--classify", &path("cm1.json"), "--classify", &path("cm2.json"),
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.matches("Spurious").count(), 2);

    let (code, out, _) = pinv(&[
        "oracle", "--program", &path("critical_int.prg"), "--threads", "3", "--bound", "5", "--max-states", "50",
    ]);
    assert_eq!(code, 2, "{out}");
}
