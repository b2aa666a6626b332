//! Drives the compiled binary through every subcommand: worked examples on
//! stdout, CSV determinism, table re-checks, and end-to-end replays.

use std::fs;
use std::process::Command;

struct Run {
    stdout: String,
    stderr: String,
    ok: bool,
}

fn dtb_cli(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_dtb-cli"))
        .args(args)
        .output()
        .expect("spawn dtb-cli");
    Run {
        stdout: String::from_utf8(out.stdout).expect("utf8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf8 stderr"),
        ok: out.status.success(),
    }
}

#[test]
fn compute_prints_worked_examples() {
    let r = dtb_cli(&["compute", "--n", "2,5,4", "--mu", "1/3", "--nf", "0", "--mode", "serial"]);
    assert!(r.ok, "compute failed: {}", r.stderr);
    assert!(r.stdout.contains("dtb = 1/3"), "stdout: {}", r.stdout);
    assert!(r.stdout.contains("class = I"), "stdout: {}", r.stdout);

    let r = dtb_cli(&["compute", "--n", "2,5,6", "--mu", "0", "--nf", "0", "--mode", "serial"]);
    assert!(r.ok, "compute failed: {}", r.stderr);
    assert!(r.stdout.contains("dtb = 1/3"), "stdout: {}", r.stdout);

    let r = dtb_cli(&["compute", "--n", "2,5,4", "--mu", "0", "--nf", "1", "--mode", "parallel"]);
    assert!(r.ok, "compute failed: {}", r.stderr);
    assert!(r.stdout.contains("dtb = 1/3"), "stdout: {}", r.stdout);
}

#[test]
fn compute_rejects_cache_size_above_one() {
    let r = dtb_cli(&["compute", "--n", "2,5,4", "--mu", "3/2", "--mode", "serial"]);
    assert!(!r.ok, "mu = 3/2 must be a usage error");
}

#[test]
fn sweep_is_deterministic_and_matches_known_rows() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    fn args(path: &str) -> Vec<&str> {
        vec![
            "sweep", "--n", "2,5,4", "--mu-den", "12", "--nf", "0,1,2,5,10", "--mode", "both",
            "--out", path,
        ]
    }

    let r = dtb_cli(&args(out_a.to_str().unwrap()));
    assert!(r.ok, "sweep failed: {}", r.stderr);
    let r = dtb_cli(&args(out_b.to_str().unwrap()));
    assert!(r.ok, "sweep rerun failed: {}", r.stderr);

    let a = fs::read(&out_a).unwrap();
    let b = fs::read(&out_b).unwrap();
    assert_eq!(a, b, "two sweeps over the same arguments must be byte-identical");

    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "nd1,nd2,nd3,nF,mu_num,mu_den,mode,dtb_num,dtb_den,regime_class,crosslink,bottleneck_num,bottleneck_den,dtb_decimal"
    );
    let rows: Vec<&str> = lines.collect();
    // 13 cache sizes x 5 fronthaul rates x 2 modes.
    assert_eq!(rows.len(), 130);

    // Parallel saturates at nf_max = 1 on this channel: every fronthaul rate
    // from there up pins the curve to the floor 1/3.
    for row in &rows {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 14, "row: {row}");
        if f[6] == "Parallel" && f[3] != "0" {
            assert_eq!((f[7], f[8]), ("1", "3"), "row: {row}");
        }
    }

    // Cache-only corner of the serial curve: mu' = 4/12 = 1/3 achieves 1/3.
    assert!(
        rows.contains(&"2,5,4,0,1,3,Serial,1,3,I,SCL,1,3,0.333333"),
        "missing the mu = 1/3 serial row"
    );
}

#[test]
fn verify_rechecks_single_corners() {
    let r = dtb_cli(&["verify", "--corner", "B2", "--n", "2,5,4"]);
    assert!(r.ok, "B2 check failed: {}\n{}", r.stdout, r.stderr);
    assert!(r.stdout.contains("corner B2 on (2,5,4)"), "stdout: {}", r.stdout);
    assert!(r.stdout.contains("feasible and attains the LP objective"), "stdout: {}", r.stdout);

    let r = dtb_cli(&["verify", "--corner", "A1", "--n", "2,5,4", "--nf", "1"]);
    assert!(r.ok, "A1 check failed: {}\n{}", r.stdout, r.stderr);
    assert!(r.stdout.contains("corner A1 on (2,5,4) at nf = 1"), "stdout: {}", r.stdout);
    assert!(r.stdout.contains("feasible and attains the LP objective"), "stdout: {}", r.stdout);
}

#[test]
fn verify_grid_reports_all_tight() {
    // The binary under test is unoptimized, so keep the grid small; the
    // default grid is covered by the release acceptance run.
    let r = dtb_cli(&["verify", "--grid-max", "3"]);
    assert!(r.ok, "verify failed: {}\n{}", r.stdout, r.stderr);
    assert!(r.stdout.contains("all tight"), "stdout: {}", r.stdout);
}

#[test]
fn simulate_replays_worked_examples() {
    let r = dtb_cli(&["simulate", "--n", "2,5,4", "--mu", "1/3", "--L", "3", "--mode", "serial"]);
    assert!(r.ok, "simulate failed: {}", r.stderr);
    assert!(r.stdout.contains("T_F=0, T_E=1, L=3, errors=0"), "stdout: {}", r.stdout);
    assert!(r.stdout.contains("empirical dtb = 1/3"), "stdout: {}", r.stdout);

    let r = dtb_cli(&[
        "simulate", "--n", "2,5,4", "--mu", "0", "--nf", "1", "--mode", "parallel", "--B", "10",
        "--L", "60",
    ]);
    assert!(r.ok, "simulate failed: {}", r.stderr);
    assert!(r.stdout.contains("T_P=21"), "stdout: {}", r.stdout);
    assert!(r.stdout.contains("analytic dtb = 1/3"), "stdout: {}", r.stdout);

    let r = dtb_cli(&["simulate", "--n", "2,5,6", "--mu", "1/2", "--L", "4", "--mode", "serial"]);
    assert!(r.ok, "simulate failed: {}", r.stderr);
    assert!(r.stdout.contains("T_F=0, T_E=1, L=4, errors=0"), "stdout: {}", r.stdout);
    assert!(r.stdout.contains("empirical dtb = 1/4"), "stdout: {}", r.stdout);
}

#[test]
fn simulate_dumps_scheme_transcript_and_certificate() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = dir.path().join("dump.json");
    let r = dtb_cli(&[
        "simulate", "--n", "2,5,4", "--mu", "1/3", "--L", "3", "--mode", "serial", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(r.ok, "simulate failed: {}", r.stderr);

    let dump: serde_json::Value = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    assert!(dump.get("scheme").is_some());
    assert!(dump.get("transcript").is_some());
    assert_eq!(dump["certificate"]["verdict"], "Tight");
}

#[test]
fn simulate_strict_rejects_indivisible_file_size() {
    let args = ["simulate", "--n", "2,5,4", "--mu", "1/3", "--L", "4", "--mode", "serial"];

    let strict: Vec<&str> = args.iter().copied().chain(["--strict"]).collect();
    let r = dtb_cli(&strict);
    assert!(!r.ok, "--strict must refuse an indivisible file size");

    // Without --strict the size is rounded up and the run still succeeds.
    let r = dtb_cli(&args);
    assert!(r.ok, "auto-resolve failed: {}", r.stderr);
    assert!(r.stderr.contains("L=4"), "stderr should name the adjustment: {}", r.stderr);
    assert!(r.stdout.contains("errors=0"), "stdout: {}", r.stdout);
}
