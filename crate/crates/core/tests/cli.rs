use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_potts-qudit"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn dqpt_writes_headed_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "dqpt",
            "--sites",
            "3",
            "--t-max",
            "1",
            "--tau",
            "0.1",
            "--record-every",
            "2",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("dqpt.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# potts-qudit config={"));
    assert!(header.contains("\"sites\":3") && header.contains("\"record_every\":2"));
    assert_eq!(
        lines.next().unwrap(),
        "t,loschmidt_exact,rate_exact,loschmidt_trotter,rate_trotter,infidelity"
    );
    let rows: Vec<&str> = lines.collect();
    // steps 0, 2, 4, 6, 8 and the final step 10
    assert_eq!(rows.len(), 6);
    assert!(rows[0].starts_with("0.00000000000000e0,1.00000000000000e0,0.00000000000000e0,"));
    assert!(stdout(&out).contains("max_infidelity="));
}

#[test]
fn scaling_prints_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["scaling", "--output", "s.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("order=1 slope=0.99"), "{text}");
    assert!(text.contains("order=2 slope=2.00"), "{text}");
    let csv = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("order,tau,state_error"));
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn verify_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--q", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.lines().filter(|l| l.starts_with("PASS ")).count() >= 6);
    assert!(!text.contains("FAIL"));
    assert!(text.contains("mixer_rotations=6"));
}

#[test]
fn invalid_values_exit_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["dqpt", "--q", "1"],
        vec!["dqpt", "--tau", "-0.1"],
        vec!["dqpt", "--scheme", "cz"],
        vec!["dqpt", "--sites", "11"],
        vec!["verify", "--q", "7"],
        vec!["dqpt", "--unknown-flag"],
    ] {
        let out = run(&args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert_eq!(stderr(&out).trim_end().lines().count(), 1, "{args:?}");
    }
    assert!(!dir.path().join("dqpt.csv").exists());
}

#[test]
fn io_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "dqpt",
            "--sites",
            "2",
            "--t-max",
            "0.1",
            "--output",
            "missing/dir/out.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["dqpt", "--config", "absent.json"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.json"),
        r#"{"sites": 3, "tau": 0.5, "t_max": 1.0, "output": "from_file.csv"}"#,
    )
    .unwrap();
    let out = run(
        &["dqpt", "--config", "run.json", "--tau", "0.25"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("from_file.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(
        header.contains("\"tau\":0.25")
            && header.contains("\"sites\":3")
            && header.contains("\"q\":3")
    );
    assert_eq!(csv.lines().count(), 2 + 5);
}

#[test]
fn verify_writes_golden_circuits() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--q", "3", "--output", "circuits"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for name in ["mixer_q3.circ", "ls_q3.circ", "ms_q3.circ"] {
        let fresh = fs::read_to_string(dir.path().join("circuits").join(name)).unwrap();
        let pinned = fs::read_to_string(golden.join(name)).unwrap();
        assert_eq!(fresh, pinned, "{name}");
    }
}
