//! End-to-end tests of the `ctlmr` binary: subcommands, output formats,
//! and the exit-code contract (0 holds, 1 fails/findings, 2 error,
//! 3 oracle mismatch).

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ctlmr(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctlmr"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn build_store(dir: &Path, net: &str, store: &str, partitions: &str) {
    let out = ctlmr(&["build", net, store, "--partitions", partitions], dir);
    assert!(
        out.status.success(),
        "build failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn build_self_loop_single_partition() {
    let dir = TempDir::new().unwrap();
    build_store(dir.path(), "self_loop", "store", "1");
    assert!(dir.path().join("store/part-00000").exists());
    assert!(dir.path().join("store/manifest.json").exists());
    let out = ctlmr(&["validate", "store"], dir.path());
    assert!(out.status.success());
    assert!(stdout(&out).contains("1 state(s)"));
}

#[test]
fn build_reports_deadlock_absorption() {
    let dir = TempDir::new().unwrap();
    let out = ctlmr(&["build", "handoff", "store"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("absorbed 1 deadlock state(s)"), "{text}");
}

#[test]
fn build_missing_input_fails_with_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = ctlmr(&["build", "no/such/file.net", "store"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn build_from_net_file_matches_bundled() {
    let dir = TempDir::new().unwrap();
    // Emit the generated net text, rebuild from the file, same counts.
    let out = ctlmr(
        &[
            "build",
            "mutex(3)",
            "a",
            "--emit-net",
            "mutex3.net",
            "--partitions",
            "4",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let from_bundled = stdout(&out);
    let out = ctlmr(
        &["build", "mutex3.net", "b", "--partitions", "4"],
        dir.path(),
    );
    assert!(out.status.success());
    let from_file = stdout(&out);
    assert_eq!(
        from_bundled.split(" at ").next(),
        from_file.split(" at ").next()
    );
}

#[test]
fn check_ex_true_holds_everywhere() {
    let dir = TempDir::new().unwrap();
    build_store(dir.path(), "chain", "store", "2");
    let out = ctlmr(&["check", "store", "EX[true]"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(
        text.contains("property,cardinality,workers,time_seconds"),
        "{text}"
    );
    assert!(text.contains("EX[true],3,1,"), "{text}");
}

#[test]
fn check_verdict_exit_codes() {
    let dir = TempDir::new().unwrap();
    build_store(dir.path(), "chain", "store", "2");
    // EG over the tail {s1, s2}: cardinality 2, fails at the initial state.
    let out = ctlmr(
        &["check", "store", "EG (m(b)=1 | m(c)=1)", "--oracle-verify"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains(",2,1,"), "{}", stdout(&out));
    // EF of a state reachable from everywhere: holds, full cardinality.
    let out = ctlmr(
        &["check", "store", "E[true U m(c)=1]", "--oracle-verify"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains(",3,1,"), "{}", stdout(&out));
}

#[test]
fn check_json_format_is_well_formed() {
    let dir = TempDir::new().unwrap();
    build_store(dir.path(), "chain", "store", "2");
    let out = ctlmr(
        &[
            "check",
            "store",
            "E[true U m(c)=1]",
            "--format",
            "json",
            "--json-out",
            "report.json",
            "--workers",
            "2",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(parsed["property"], "E[true U m(c)=1]");
    assert_eq!(parsed["report"]["cardinality"], 3);
    assert_eq!(parsed["verdict_holds_in_initial"], true);
    let on_disk: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(parsed, on_disk);
}

#[test]
fn check_rejects_malformed_formula() {
    let dir = TempDir::new().unwrap();
    build_store(dir.path(), "chain", "store", "1");
    let out = ctlmr(&["check", "store", "EX"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("syntax"));
}

#[test]
fn check_rejects_unknown_place() {
    let dir = TempDir::new().unwrap();
    build_store(dir.path(), "chain", "store", "1");
    let out = ctlmr(&["check", "store", "m(nope) = 1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown place"));
}

#[test]
fn check_refuses_non_serial_store() {
    let dir = TempDir::new().unwrap();
    // A store written by hand whose relation is not total.
    std::fs::create_dir(dir.path().join("store")).unwrap();
    std::fs::write(dir.path().join("store/part-00000"), "0\t1\t-\t-\n").unwrap();
    std::fs::write(
        dir.path().join("store/manifest.json"),
        r#"{"format":"ctlmr-store-v1","num_partitions":1,"place_names":["a"],"initial_states":[0]}"#,
    )
    .unwrap();
    let out = ctlmr(&["check", "store", "true"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no successor"));
}

#[test]
fn optimized_flag_accepts_both_spellings() {
    let dir = TempDir::new().unwrap();
    build_store(dir.path(), "chain", "store", "2");
    for flag in [
        "--optimized-eu",
        "--optimized-eu=false",
        "--optimized-eu=true",
    ] {
        let out = ctlmr(&["check", "store", "E[true U m(c)=1]", flag], dir.path());
        assert_eq!(out.status.code(), Some(0), "{flag}");
    }
}

#[test]
fn bench_single_worker_has_unit_cheat() {
    let dir = TempDir::new().unwrap();
    build_store(dir.path(), "chain", "store", "2");
    let out = ctlmr(
        &["bench", "store", "EX[true]", "--workers", "1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(
        text.contains("property,cardinality,workers,time_seconds,cheat"),
        "{text}"
    );
    assert!(text.contains(",1.000"), "{text}");
}

#[test]
fn bench_requires_baseline_worker_count() {
    let dir = TempDir::new().unwrap();
    build_store(dir.path(), "chain", "store", "1");
    let out = ctlmr(
        &["bench", "store", "EX[true]", "--workers", "2,4"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("baseline"));
}

#[test]
fn bench_rows_share_one_cardinality() {
    let dir = TempDir::new().unwrap();
    build_store(dir.path(), "shared_memory(3)", "store", "4");
    let out = ctlmr(
        &[
            "bench",
            "store",
            "E[true U (m(Queue) >= 1 & m(Active) = 0)]",
            "--workers",
            "1,2",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let cards: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(cards, vec!["20", "20"]);
}

#[test]
fn validate_reports_findings_with_exit_1() {
    let dir = TempDir::new().unwrap();
    build_store(dir.path(), "chain", "store", "2");
    // Corrupt one record: point a predecessor at a missing id.
    for part in ["store/part-00000", "store/part-00001"] {
        let path = dir.path().join(part);
        let text = std::fs::read_to_string(&path).unwrap();
        if let Some(line) = text.lines().next() {
            let mut cols: Vec<&str> = line.split('\t').collect();
            cols[2] = "99999";
            let rewritten = cols.join("\t");
            std::fs::write(
                &path,
                format!(
                    "{rewritten}\n{}",
                    text.lines().skip(1).collect::<Vec<_>>().join("\n")
                ),
            )
            .unwrap();
            break;
        }
    }
    let out = ctlmr(&["validate", "store"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stdout(&out).contains("dangling id 99999"),
        "{}",
        stdout(&out)
    );
}

#[test]
fn demo_is_deterministic_and_agrees() {
    let dir = TempDir::new().unwrap();
    let a = ctlmr(
        &["demo", "--seed", "7", "--count", "6", "--max-states", "30"],
        dir.path(),
    );
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    assert!(stdout(&a).contains("all 6 pairs agree"));
    let b = ctlmr(
        &["demo", "--seed", "7", "--count", "6", "--max-states", "30"],
        dir.path(),
    );
    assert_eq!(stdout(&a), stdout(&b), "demo output must be reproducible");
}

#[test]
fn build_bound_is_enforced_with_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = ctlmr(
        &["build", "shared_memory(3)", "store", "--bound", "5"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bound"));
}

#[test]
fn spill_dir_env_var_is_honored() {
    let dir = TempDir::new().unwrap();
    build_store(dir.path(), "chain", "store", "1");
    let spill = dir.path().join("spill-here");
    let out = Command::new(env!("CARGO_BIN_EXE_ctlmr"))
        .args(["check", "store", "EX[true]"])
        .current_dir(dir.path())
        .env("CTLMR_SPILL_DIR", &spill)
        .output()
        .expect("binary runs");
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(
        spill.is_dir(),
        "spill parent directory must be created and used"
    );
}
