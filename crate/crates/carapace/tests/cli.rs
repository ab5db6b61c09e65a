//! End-to-end runs of the `carapace` binary: exit codes, result files, the
//! stats report, and cross-run determinism.

use std::path::Path;
use std::process::Command;

fn carapace() -> Command {
    Command::new(env!("CARGO_BIN_EXE_carapace"))
}

fn write(path: &Path, content: &str) {
    std::fs::write(path, content).unwrap();
}

const TC: &str = "\
path(x, y) :- edge(x, y).\n\
path(x, z) :- edge(x, y), path(y, z).\n";

#[test]
fn run_writes_sorted_csv_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let program = dir.path().join("tc.dl");
    write(&program, TC);
    let facts = dir.path().join("facts");
    std::fs::create_dir(&facts).unwrap();
    write(&facts.join("edge.facts"), "a\tb\nb\tc\nc\td\n");
    let out = dir.path().join("out");
    let stats = dir.path().join("stats.txt");

    let status = carapace()
        .args(["--program"])
        .arg(&program)
        .args(["--facts"])
        .arg(&facts)
        .args(["--out"])
        .arg(&out)
        .args(["--stats"])
        .arg(&stats)
        .output()
        .unwrap();
    assert!(status.status.success(), "{:?}", status);

    let csv = std::fs::read_to_string(out.join("path.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 6);
    let mut sorted = lines.clone();
    sorted.sort();
    assert_eq!(lines, sorted, "output lines must be sorted");
    assert!(lines.contains(&"a\td"));

    let report = std::fs::read_to_string(&stats).unwrap();
    assert!(report.contains("[config]"));
    assert!(report.contains("mode = interp"));
    assert!(report.contains("iterations_total = 4"));
}

#[test]
fn jit_and_interp_give_identical_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let program = dir.path().join("tc.dl");
    write(&program, TC);
    let facts = dir.path().join("facts");
    std::fs::create_dir(&facts).unwrap();
    write(&facts.join("edge.facts"), "1\t2\n2\t3\n3\t4\n4\t1\n");

    let mut outputs = Vec::new();
    for mode in [vec!["--mode", "interp"], vec!["--mode", "jit", "--backend", "pipeline"]] {
        let out = tempfile::tempdir().unwrap();
        let status = carapace()
            .args(["--program"])
            .arg(&program)
            .args(["--facts"])
            .arg(&facts)
            .args(["--out"])
            .arg(out.path())
            .args(&mode)
            .args(["--stats"])
            .arg(out.path().join("s.txt"))
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read_to_string(out.path().join("path.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let program = dir.path().join("p.dl");
    write(
        &program,
        "r(x,z) :- e(x,y), e(y,z), x != z.\nr(x,y) :- e(x,y).\n",
    );
    let facts = dir.path().join("facts");
    std::fs::create_dir(&facts).unwrap();
    write(&facts.join("e.facts"), "1\t2\n2\t1\n2\t3\n");

    let run_once = || {
        let out = tempfile::tempdir().unwrap();
        let status = carapace()
            .args(["--program"])
            .arg(&program)
            .args(["--facts"])
            .arg(&facts)
            .args(["--out"])
            .arg(out.path())
            .args(["--seed", "7", "--mode", "jit"])
            .args(["--stats"])
            .arg(out.path().join("s.txt"))
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read_to_string(out.path().join("r.csv")).unwrap()
    };
    assert_eq!(run_once(), run_once());
}

#[test]
fn validation_problems_exit_1_listing_all() {
    let dir = tempfile::tempdir().unwrap();
    let program = dir.path().join("bad.dl");
    write(&program, "p(x) :- q(y).\nr(a, b) :- q(a).\n");
    let output = carapace().args(["--program"]).arg(&program).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("`x`"), "{stderr}");
    assert!(stderr.contains("`b`"), "{stderr}");
}

#[test]
fn unreadable_program_exits_2() {
    let output = carapace()
        .args(["--program", "/nonexistent/never.dl"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unknown_granularity_value_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let program = dir.path().join("p.dl");
    write(&program, "p(x) :- q(x).\n");
    let output = carapace()
        .args(["--program"])
        .arg(&program)
        .args(["--mode", "jit", "--granularity", "foo"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn reserved_backend_exits_1_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let program = dir.path().join("p.dl");
    write(&program, "p(x) :- q(x).\n");
    for backend in ["quotes", "bytecode"] {
        let output = carapace()
            .args(["--program"])
            .arg(&program)
            .args(["--mode", "jit", "--backend", backend])
            .output()
            .unwrap();
        assert_eq!(output.status.code(), Some(1));
        assert!(
            String::from_utf8_lossy(&output.stderr).contains("unsupported on this build"),
            "missing message for {backend}"
        );
    }
}

#[test]
fn missing_facts_file_is_treated_as_empty_with_success() {
    let dir = tempfile::tempdir().unwrap();
    let program = dir.path().join("p.dl");
    write(&program, "p(x) :- e(x).\n");
    let facts = dir.path().join("facts");
    std::fs::create_dir(&facts).unwrap();
    let out = dir.path().join("out");
    let status = carapace()
        .args(["--program"])
        .arg(&program)
        .args(["--facts"])
        .arg(&facts)
        .args(["--out"])
        .arg(&out)
        .args(["--stats"])
        .arg(dir.path().join("s.txt"))
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(std::fs::read_to_string(out.join("p.csv")).unwrap(), "");
}
