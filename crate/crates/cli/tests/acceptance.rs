//! Acceptance suite. Runs every criterion through the `hammersley` binary,
//! prints one PASS/FAIL line per criterion and exits nonzero if any failed.
//! Outputs are kept under the cargo target tmp directory for inspection.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value;

const THREADS: &str = "8";

struct Run {
    label: String,
    dir: PathBuf,
    code: i32,
    elapsed: Duration,
    report: Value,
}

impl Run {
    fn failures(&self) -> Vec<String> {
        let checks = self.report["checks"].as_array().cloned().unwrap_or_default();
        checks
            .iter()
            .filter(|c| c["pass"] == false && c["kind"] != "advisory")
            .map(|c| format!("{}: {}", c["name"].as_str().unwrap_or(""), c["detail"].as_str().unwrap_or("")))
            .collect()
    }

    fn estimate(&self, name: &str) -> Option<f64> {
        self.report["estimates"].as_array()?.iter().find(|e| e["name"] == name)?["value"].as_f64()
    }
}

struct Suite {
    root: PathBuf,
    runs: Vec<Run>,
    failed: usize,
}

fn hammersley(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hammersley")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

impl Suite {
    fn run(&mut self, label: &str, args: &[&str]) -> usize {
        let dir = self.root.join(label);
        let _ = fs::remove_dir_all(&dir);
        let mut all = args.to_vec();
        all.extend(["--threads", THREADS, "--out-dir", dir.to_str().unwrap()]);
        let start = Instant::now();
        let (code, stderr) = hammersley(&all);
        let elapsed = start.elapsed();
        if !stderr.is_empty() {
            eprint!("{label}: {stderr}");
        }
        let report = fs::read_to_string(dir.join("report.json"))
            .ok()
            .and_then(|s| serde_json::from_str(&s).ok())
            .unwrap_or(Value::Null);
        self.runs.push(Run { label: label.into(), dir, code, elapsed, report });
        self.runs.len() - 1
    }

    fn verdict(&mut self, number: usize, title: &str, pass: bool, detail: String) {
        println!("[{}] criterion {number:>2} {title}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed += 1;
        }
    }

    /// Criterion passes when every listed run exited 0.
    fn all_pass(&mut self, number: usize, title: &str, runs: &[usize], extra: impl Fn(&Run) -> String) {
        let mut pass = true;
        let mut parts = Vec::new();
        for &i in runs {
            let r = &self.runs[i];
            pass &= r.code == 0;
            let mut part = format!("{} exit {} in {:.1}s", r.label, r.code, r.elapsed.as_secs_f64());
            let more = extra(r);
            if !more.is_empty() {
                part.push_str(&format!(" ({more})"));
            }
            for f in r.failures() {
                part.push_str(&format!(" [{f}]"));
            }
            parts.push(part);
        }
        self.verdict(number, title, pass, parts.join("; "));
    }
}

fn fit_slope(r: &Run) -> String {
    match r.report["fits"].get(0) {
        Some(f) => format!(
            "slope {:.3} ± {:.3}",
            f["slope"].as_f64().unwrap_or(f64::NAN),
            f["stderr"].as_f64().unwrap_or(f64::NAN)
        ),
        None => String::new(),
    }
}

fn residual(r: &Run) -> String {
    let res = &r.report["residual"];
    format!(
        "residual {:.3} vs 3 SE = {:.3}",
        res["value"].as_f64().unwrap_or(f64::NAN),
        3.0 * res["stderr"].as_f64().unwrap_or(f64::NAN)
    )
}

fn same_bytes(a: &Path, b: &Path) -> bool {
    matches!((fs::read(a), fs::read(b)), (Ok(x), Ok(y)) if x == y)
}

fn main() {
    let root = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    fs::create_dir_all(&root).unwrap();
    let mut s = Suite { root, runs: Vec::new(), failed: 0 };

    let flux = s.run("flux", &["check", "flux", "--t", "10", "--reps", "1000", "--grid", "1,2", "--seed", "1"]);
    let minute = Duration::from_secs(60);
    {
        let r = &s.runs[flux];
        let pass = r.code == 0 && r.elapsed < minute;
        let detail = format!("exit {} in {:.1}s (limit 60s) {:?}", r.code, r.elapsed.as_secs_f64(), r.failures());
        s.verdict(1, "flux equals longest weakly NE path", pass, detail);
    }

    let oracle = s.run("oracle", &["check", "oracle", "--reps", "1000", "--points", "15", "--seed", "1"]);
    {
        let r = &s.runs[oracle];
        let pass = r.code == 0 && r.elapsed < minute;
        let detail = format!("exit {} in {:.1}s (limit 60s) {:?}", r.code, r.elapsed.as_secs_f64(), r.failures());
        s.verdict(2, "sweep paths equal brute force", pass, detail);
    }

    let thm = [
        s.run(
            "thm21-10-10-1",
            &["check", "thm21", "--x", "10", "--t", "10", "--lambda", "1", "--reps", "10000", "--seed", "1"],
        ),
        s.run(
            "thm21-10-20-1",
            &["check", "thm21", "--x", "10", "--t", "20", "--lambda", "1", "--reps", "10000", "--seed", "1"],
        ),
        s.run(
            "thm21-10-10-2",
            &["check", "thm21", "--x", "10", "--t", "10", "--lambda", "2", "--reps", "10000", "--seed", "1"],
        ),
    ];
    s.all_pass(3, "flux variance against second class particle", &thm, residual);

    let ve = [
        s.run("var-exit-10", &["check", "var-exit", "--t", "10", "--reps", "10000", "--seed", "1"]),
        s.run("var-exit-50", &["check", "var-exit", "--t", "50", "--reps", "10000", "--seed", "1"]),
    ];
    s.all_pass(4, "flux variance against exit point, mean 2t", &ve, |r| {
        format!("{}, mean L {:.3}", residual(r), r.estimate("mean_L").unwrap_or(f64::NAN))
    });

    let burke = s
        .run("burke", &["check", "burke", "--x", "10", "--t", "10", "--lambda", "1", "--reps", "10000", "--seed", "1"]);
    s.all_pass(5, "Burke crossing statistics", &[burke], |_| String::new());

    let pathwise = [
        s.run("lemma41", &["check", "lemma41", "--t", "10", "--reps", "1000", "--seed", "1"]),
        s.run("coupling52", &["check", "coupling52", "--t", "10", "--reps", "1000", "--seed", "1"]),
        s.run("coupling61", &["check", "coupling61", "--t", "10", "--reps", "1000", "--seed", "1"]),
        s.run("switch", &["check", "switch", "--t", "10", "--reps", "1000", "--seed", "1"]),
    ];
    s.all_pass(6, "pathwise couplings and switch relations", &pathwise, |_| String::new());

    let ks = s.run("ks", &["check", "ks", "--t", "10", "--reps", "5000", "--seed", "1"]);
    s.all_pass(7, "distributional identities (KS p > 0.01)", &[ks], |r| {
        let tests = r.report["ks"].as_array().cloned().unwrap_or_default();
        tests
            .iter()
            .map(|k| format!("{} p={:.3}", k["name"].as_str().unwrap_or(""), k["p_value"].as_f64().unwrap_or(f64::NAN)))
            .collect::<Vec<_>>()
            .join(", ")
    });

    let scaling =
        s.run("sweep-scaling", &["sweep", "scaling", "--grid", "50,100,200,400", "--reps", "2000", "--seed", "1"]);
    s.all_pass(8, "cube-root scaling of the exit point", &[scaling], fit_slope);

    let tail =
        s.run("sweep-tail", &["sweep", "tail", "--t", "200", "--grid", "1,2,4", "--reps", "4000", "--seed", "1"]);
    s.all_pass(9, "exit point tail decay", &[tail], fit_slope);

    let near = s.run(
        "sweep-exit-near-zero",
        &["sweep", "exit-near-zero", "--t", "200", "--grid", "0.05,0.1,0.2,0.4", "--reps", "4000", "--seed", "1"],
    );
    s.all_pass(10, "exit point near zero", &[near], |r| {
        format!("P(Z >= 0) = {:.4}", r.estimate("P(Z>=0)").unwrap_or(f64::NAN))
    });

    let gap = s.run("sweep-l0-gap", &["sweep", "l0-gap", "--grid", "25,50,100,200", "--reps", "2000", "--seed", "1"]);
    s.all_pass(11, "mean gap of the strict chain length", &[gap], fit_slope);

    let mut differing = Vec::new();
    let mut replayed = 0;
    for r in &s.runs {
        let manifest: Value = match fs::read_to_string(r.dir.join("manifest.json")).map(|t| serde_json::from_str(&t)) {
            Ok(Ok(m)) => m,
            _ => {
                differing.push(format!("{}: no manifest", r.label));
                continue;
            }
        };
        let again = r.dir.join("replay-1");
        let _ = fs::remove_dir_all(&again);
        hammersley(&[
            "replay",
            r.dir.join("manifest.json").to_str().unwrap(),
            "--threads",
            "1",
            "--out-dir",
            again.to_str().unwrap(),
        ]);
        for name in manifest["outputs"].as_array().unwrap() {
            let name = name.as_str().unwrap();
            if !same_bytes(&r.dir.join(name), &again.join(name)) {
                differing.push(format!("{}/{name}", r.label));
            }
        }
        replayed += 1;
    }
    s.verdict(
        12,
        "replay from manifests, 8 threads vs 1",
        differing.is_empty() && replayed == s.runs.len(),
        format!("{replayed} runs replayed, differing outputs: {differing:?}"),
    );

    println!("{} of 12 criteria failed", s.failed);
    if s.failed > 0 {
        std::process::exit(1);
    }
}
