use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use hammersley_cli::{run, RunManifest, EXIT_INVARIANT, EXIT_PASS, EXIT_STATISTICAL, EXIT_USAGE};
use serde_json::Value;

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn cli(args: &[&str]) -> i32 {
    run(std::iter::once("hammersley").chain(args.iter().copied()))
}

fn cli_in(dir: &Path, args: &[&str]) -> i32 {
    let mut all = args.to_vec();
    let dir = dir.to_str().unwrap();
    all.extend(["--out-dir", dir]);
    cli(&all)
}

fn binary(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_hammersley")).args(args).output().unwrap().status.code().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn validator(name: &str) -> jsonschema::Validator {
    let load = |n: &str| read_json(&repo_root().join(format!("schemas/{n}.schema.json")));
    let realization = jsonschema::Resource::from_contents(load("realization")).unwrap();
    jsonschema::options().with_resource("urn:hammersley:schema:realization", realization).build(&load(name)).unwrap()
}

fn assert_valid(schema: &str, doc: &Path) {
    let v = validator(schema);
    let instance = read_json(doc);
    let errors: Vec<String> = v.iter_errors(&instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{} against {schema}: {errors:?}", doc.display());
}

#[test]
fn simulate_writes_three_files_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let args = ["simulate", "--t", "2", "--lambda", "1", "--seed", "7"];
    assert_eq!(cli_in(&a, &args), EXIT_PASS);
    assert_eq!(cli_in(&b, &args), EXIT_PASS);
    let m: RunManifest = serde_json::from_value(read_json(&a.join("manifest.json"))).unwrap();
    assert_eq!(m.outputs, ["realization.json", "events.csv", "paths.csv"]);
    for name in &m.outputs {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    assert_valid("realization", &a.join("realization.json"));
    assert_valid("manifest", &a.join("manifest.json"));
}

#[test]
fn fixture_event_log_matches_hand_simulation() {
    let tmp = tempfile::tempdir().unwrap();
    let input = repo_root().join("fixtures/fixture_a.json");
    assert_valid("realization", &input);
    assert_eq!(cli_in(tmp.path(), &["simulate", "--input", input.to_str().unwrap()]), EXIT_PASS);
    let events = fs::read_to_string(tmp.path().join("events.csv")).unwrap();
    assert_eq!(events, "time,type,x_old,x_new\n0.5,alpha-jump,1.5,1\n1,sink-exit,0.5,\n");
    assert_eq!(cli(&["replay", tmp.path().join("manifest.json").to_str().unwrap()]), EXIT_PASS);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(binary(&["simulate", "--lambda", "1"]), EXIT_USAGE);
    assert_eq!(binary(&["check", "switch"]), EXIT_USAGE);
    assert_eq!(binary(&["check", "no-such-identity", "--t", "10"]), EXIT_USAGE);
    assert_eq!(binary(&["sweep", "tail", "--t", "10", "--grid", ""]), EXIT_USAGE);
    assert_eq!(binary(&["sweep", "tail", "--t", "10", "--grid", "1,x"]), EXIT_USAGE);
    assert_eq!(binary(&["sweep", "scaling"]), EXIT_USAGE);
    assert_eq!(binary(&["simulate", "--t", "-1"]), EXIT_USAGE);
    assert_eq!(binary(&["check", "flux", "--t", "5", "--reps", "0"]), EXIT_USAGE);
    assert_eq!(binary(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(binary(&["--help"]), EXIT_PASS);
    assert_eq!(binary(&["--version"]), EXIT_PASS);
}

#[test]
fn switch_check_passes_pathwise() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(cli_in(tmp.path(), &["check", "switch", "--t", "10", "--reps", "1000"]), EXIT_PASS);
    let report = read_json(&tmp.path().join("report.json"));
    assert_eq!(report["outcome"], "pass");
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["kind"] == "pathwise"));
    assert_valid("report", &tmp.path().join("report.json"));
}

#[test]
fn sweep_table_is_replayable_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let code = cli_in(
        tmp.path(),
        &["sweep", "scaling", "--grid", "5,10,20,40", "--reps", "200", "--seed", "3", "--threads", "3"],
    );
    assert!(code == EXIT_PASS || code == EXIT_STATISTICAL, "exit {code}");
    let table = fs::read_to_string(tmp.path().join("table.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "parameter,estimate,stderr,reps,seed");
    assert_eq!(lines.len(), 5);
    assert_valid("report", &tmp.path().join("report.json"));
    assert_valid("manifest", &tmp.path().join("manifest.json"));

    let manifest = tmp.path().join("manifest.json");
    for threads in ["1", "4"] {
        let out = tmp.path().join(format!("replay-{threads}"));
        let args = ["replay", manifest.to_str().unwrap(), "--threads", threads, "--out-dir", out.to_str().unwrap()];
        assert_eq!(cli(&args), code);
        assert_eq!(fs::read_to_string(out.join("table.csv")).unwrap(), table);
    }
}

#[test]
fn replay_reports_tampered_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(cli_in(tmp.path(), &["check", "flux", "--t", "5", "--reps", "20"]), EXIT_PASS);
    fs::write(tmp.path().join("report.json"), "{}").unwrap();
    assert_eq!(cli(&["replay", tmp.path().join("manifest.json").to_str().unwrap()]), EXIT_INVARIANT);
}

#[test]
fn flags_take_precedence_over_config() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.json");
    fs::write(&config, r#"{"t": 4, "reps": 30, "seed": 9}"#).unwrap();
    let out = tmp.path().join("out");
    assert_eq!(cli_in(&out, &["check", "flux", "--config", config.to_str().unwrap(), "--seed", "2"]), EXIT_PASS);
    let m: RunManifest = serde_json::from_value(read_json(&out.join("manifest.json"))).unwrap();
    assert_eq!((m.params.t, m.params.reps, m.seed), (Some(4.0), Some(30), 2));

    fs::write(&config, r#"{"t": 4, "tee": 1}"#).unwrap();
    assert_eq!(cli_in(&out, &["check", "flux", "--config", config.to_str().unwrap()]), EXIT_USAGE);
}
