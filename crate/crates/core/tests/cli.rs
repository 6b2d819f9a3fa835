use std::path::Path;
use std::process::{Command, Output};

use pomdp_verify::bench::read_records;
use pomdp_verify::model::running_example_text;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pomdp-verify"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Pulls `name = value` out of the result line.
fn field(line: &str, name: &str) -> String {
    let key = format!("{name} = ");
    let start = line
        .find(&key)
        .unwrap_or_else(|| panic!("no {name} in {line}"))
        + key.len();
    line[start..]
        .split(',')
        .next()
        .unwrap()
        .trim()
        .trim_end_matches(" s")
        .to_string()
}

fn running_example(dir: &Path) -> String {
    let path = dir.join("running.txt");
    std::fs::write(&path, running_example_text()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn missing_model_file_exits_one() {
    let out = run(&["run", "/definitely/not/here.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn malformed_model_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "pomdp 2 1 1\nactions a\ninit 5\n").unwrap();
    let out = run(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn coarsest_single_shot_gives_the_fully_observable_bound() {
    let dir = tempfile::tempdir().unwrap();
    let model = running_example(dir.path());
    let out = run(&["run", &model, "--mode", "single-shot", "--resolution", "1"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let line = stdout(&out);
    let upper: f64 = field(&line, "U").parse().unwrap();
    assert!((upper - 1.0).abs() < 1e-6, "{line}");
}

#[test]
fn refine_writes_csv_log_and_abstraction() {
    let dir = tempfile::tempdir().unwrap();
    let model = running_example(dir.path());
    let csv = dir.path().join("out.csv");
    let log = dir.path().join("log.jsonl");
    let dump = dir.path().join("abs.txt");
    let out = run(&[
        "run",
        &model,
        "--time",
        "20",
        "--csv",
        csv.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
        "--export-abstraction",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let line = stdout(&out);
    let lower: f64 = field(&line, "L").parse().unwrap();
    let upper: f64 = field(&line, "U").parse().unwrap();
    assert!(lower <= 35.0 / 51.0 + 1e-6 && upper >= 35.0 / 51.0 - 1e-6);

    let records = read_records(&csv).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].mode, "refine");
    assert_eq!(records[0].heuristic, "h0");
    let entries = std::fs::read_to_string(&log).unwrap();
    // One line per iteration plus the bootstrap entry.
    assert_eq!(entries.lines().count(), records[0].iterations + 1);
    for (i, entry) in entries.lines().enumerate() {
        let v: serde_json::Value = serde_json::from_str(entry).unwrap();
        assert_eq!(v["iteration"].as_u64(), Some(i as u64));
        assert!(v["lower"].as_f64().unwrap() <= v["upper"].as_f64().unwrap() + 1e-9);
    }
    let abstraction = std::fs::read_to_string(&dump).unwrap();
    assert!(abstraction.lines().any(|l| l.starts_with("state ")));
}

#[test]
fn threshold_verdicts_set_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let model = running_example(dir.path());
    let holds = run(&["run", &model, "--threshold", ">=0.6"]);
    assert_eq!(holds.status.code(), Some(2), "{holds:?}");
    assert!(stdout(&holds).contains("threshold holds"));
    let refuted = run(&["run", &model, "--threshold", "<=0.6"]);
    assert_eq!(refuted.status.code(), Some(0), "{refuted:?}");
    assert!(stdout(&refuted).contains("threshold refuted"));
}

#[test]
fn exact_and_float_agree() {
    let dir = tempfile::tempdir().unwrap();
    let model = running_example(dir.path());
    let bounds = |flag: &str| {
        let out = run(&["run", &model, flag, "--max-iters", "3", "--time", "20"]);
        assert_eq!(out.status.code(), Some(0), "{out:?}");
        let line = stdout(&out);
        let l: f64 = field(&line, "L").parse().unwrap();
        let u: f64 = field(&line, "U").parse().unwrap();
        (l, u)
    };
    let (fl, fu) = bounds("--float");
    let (el, eu) = bounds("--exact");
    let value = 35.0 / 51.0;
    for (l, u) in [(fl, fu), (el, eu)] {
        assert!(l <= value + 1e-6 && u >= value - 1e-6, "[{l}, {u}]");
    }
}

#[test]
fn generation_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for family in ["grid-avoid", "maze-like", "refuel-lite", "rocks-lite"] {
        let paths: Vec<_> = ["a", "b", "c"]
            .iter()
            .map(|n| dir.path().join(format!("{family}-{n}.txt")))
            .collect();
        for (path, seed) in paths.iter().zip(["7", "7", "8"]) {
            let out = run(&[
                "generate",
                family,
                "--width",
                "4",
                "--seed",
                seed,
                "-o",
                path.to_str().unwrap(),
            ]);
            assert_eq!(out.status.code(), Some(0), "{out:?}");
        }
        let text: Vec<String> = paths
            .iter()
            .map(|p| std::fs::read_to_string(p).unwrap())
            .collect();
        assert_eq!(text[0], text[1], "{family}");
        assert!(text[0].starts_with("pomdp ") || text[0].starts_with('#'));
    }
}

#[test]
fn trivial_grid_is_decided_at_once() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.txt");
    let out = run(&[
        "generate",
        "grid-avoid",
        "--width",
        "1",
        "--height",
        "1",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let out = run(&["run", path.to_str().unwrap(), "--time", "5"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let line = stdout(&out);
    assert_eq!(field(&line, "L"), "1.000000", "{line}");
    assert_eq!(field(&line, "U"), "1.000000", "{line}");
    let secs: f64 = field(&line, "time").parse().unwrap();
    assert!(secs < 1.0, "{line}");
}

#[test]
fn bad_arguments_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let model = running_example(dir.path());
    let out = run(&["run", &model, "--mode", "single-shot", "--resolution", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["run", &model, "--heuristic", "h9"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["run", &model, "--threshold", "=0.5"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["generate", "nonsense"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["run", &model, "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
