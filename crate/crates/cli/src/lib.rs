//! Command-line front end: parameter resolution, run orchestration, result
//! files and manifests.
//!
//! Every run writes its outputs and a `manifest.json` into one directory. The
//! manifest holds the resolved parameters, so `replay` can reproduce the
//! outputs byte for byte with any number of threads.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use hammersley::dynamics::{evolve, segments_to_csv, space_time_paths};
use hammersley::estimators::{self as est, EstimatorReport, McConfig, Outcome};
use hammersley::paths::longest_weakly_ne;
use hammersley::realization::generate;
use hammersley::{Domain, Intensities, Realization};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_STATISTICAL: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

const DEFAULT_OUT_DIR: &str = "hammersley-out";
pub const MANIFEST: &str = "manifest.json";

#[derive(Parser, Debug)]
#[command(
    name = "hammersley",
    version,
    about = "Simulation laboratory for Hammersley's process with sources and sinks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate or load a realization; write its event log and space-time paths.
    Simulate {
        /// Realization JSON to use instead of generating one.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        params: Params,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Run one identity check.
    Check {
        identity: Identity,
        #[command(flatten)]
        params: Params,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Run an estimator over a parameter grid.
    Sweep {
        kind: SweepKind,
        #[command(flatten)]
        params: Params,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Re-run the command recorded in a manifest and compare the outputs.
    Replay {
        manifest: PathBuf,
        /// Worker threads (defaults to the recorded value).
        #[arg(long)]
        threads: Option<usize>,
        /// Where to write the new outputs (defaults to `replay/` next to the manifest).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Identity {
    /// Variance of the flux against the second class particle.
    Thm21,
    /// Variance of the flux against the exit point.
    VarExit,
    /// Crossing counts as independent Poisson variables.
    Burke,
    /// Exit points against the reflected second class particles.
    ExitY,
    /// Thickened-source bound on the strict chain profile.
    Lemma41,
    /// Flux increments left of the dual second class particle.
    Coupling52,
    /// Flux increments right of the second class particle.
    Coupling61,
    /// Particle locations against flux levels.
    Switch,
    /// Flux from the dynamics against the longest path.
    Flux,
    /// Sweep-based paths against brute force.
    Oracle,
    /// Distributional identities by two-sample KS tests.
    Ks,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    Scaling,
    Tail,
    LocalGain,
    ExitNearZero,
    L0Gap,
}

/// Grid of values, written `a,b,c` on the command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Grid(pub Vec<f64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    let values = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("bad grid value {v:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err("grid values must be finite".into());
    }
    Ok(Grid(values))
}

/// Model and replication parameters. Anything left unset comes from the
/// config file, then from per-command defaults.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Time horizon t.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Space coordinate x (for `check ks`, the chain offset z).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    /// Source intensity λ; sinks have intensity 1/λ.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Monte Carlo replications.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Comma-separated grid: t values, c values, ε values or intensities.
    #[arg(long, value_parser = parse_grid)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    /// Level L of the local gain event.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    /// Point cap of the brute-force oracle.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

impl Params {
    /// Fields of `self`, falling back to `other`.
    fn or(self, other: Params) -> Params {
        Params {
            t: self.t.or(other.t),
            x: self.x.or(other.x),
            lambda: self.lambda.or(other.lambda),
            reps: self.reps.or(other.reps),
            seed: self.seed.or(other.seed),
            grid: self.grid.or(other.grid),
            level: self.level.or(other.level),
            points: self.points.or(other.points),
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq)]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct RunOpts {
    /// Worker threads; results do not depend on it (0 = one per core).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value = DEFAULT_OUT_DIR)]
    out_dir: PathBuf,
    /// Rendering of the result on stdout.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// JSON file with parameters; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub target: Option<String>,
    pub params: Params,
    pub input: Option<PathBuf>,
    pub seed: u64,
    pub tool_version: String,
    pub threads: usize,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// Output files, relative to the manifest's directory.
    pub outputs: Vec<String>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<hammersley::Error> for CliError {
    fn from(e: hammersley::Error) -> Self {
        use hammersley::Error as E;
        match e {
            E::InvalidParameter(_) | E::OutOfBox { .. } | E::TooLarge { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

/// What a command produced: named files and the exit code they imply.
struct Produced {
    files: Vec<(String, Vec<u8>)>,
    code: i32,
    /// Rendering for stdout, per format.
    json: String,
    csv: String,
}

fn outcome_code(o: Outcome) -> i32 {
    match o {
        Outcome::Pass => EXIT_PASS,
        Outcome::StatisticalFail => EXIT_STATISTICAL,
        Outcome::InvariantFail => EXIT_INVARIANT,
    }
}

fn need<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required")))
}

fn pretty<T: Serialize>(v: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

/// Fills per-command defaults and rejects missing required parameters.
fn resolve(command: &str, target: Option<&str>, p: Params) -> CliResult<Params> {
    let grid = |g: &[f64]| Some(Grid(g.to_vec()));
    let defaults = match (command, target) {
        ("simulate", _) => Params { lambda: Some(1.0), seed: Some(0), ..Params::default() },
        ("check", Some(id)) => {
            let reps = match id {
                "thm21" | "var-exit" | "burke" => 10_000,
                "ks" => 5_000,
                _ => 1_000,
            };
            Params {
                lambda: Some(1.0),
                reps: Some(reps),
                seed: Some(1),
                grid: match id {
                    "lemma41" => grid(&[1.0, 1.25, 1.5, 2.0]),
                    "flux" => grid(&[1.0, 2.0]),
                    _ => None,
                },
                points: Some(15),
                ..Params::default()
            }
        }
        ("sweep", Some(kind)) => Params {
            reps: Some(2_000),
            seed: Some(1),
            level: if kind == "local-gain" { Some(1.0) } else { None },
            ..Params::default()
        },
        _ => unreachable!("unknown command {command}"),
    };
    let mut p = p.or(defaults);
    let needs_t = !matches!((command, target), ("check", Some("oracle")) | ("sweep", Some("scaling" | "l0-gap")));
    if needs_t && command != "simulate" {
        need(p.t, "t")?;
    }
    if command == "check" && matches!(target, Some("thm21" | "burke")) && p.x.is_none() {
        p.x = p.t;
    }
    if command == "check" && target == Some("ks") && p.x.is_none() {
        p.x = p.t.map(|t| t / 2.0);
    }
    if command == "sweep" {
        let g = need(p.grid.as_ref(), "grid")?;
        if g.0.is_empty() {
            return Err(CliError::Usage("--grid must not be empty".into()));
        }
    }
    if p.reps == Some(0) {
        return Err(CliError::Usage("--reps must be positive".into()));
    }
    Ok(p)
}

fn report_output(report: EstimatorReport, with_table: bool) -> CliResult<Produced> {
    let json = pretty(&report)?;
    let mut files = vec![("report.json".to_string(), json.clone().into_bytes())];
    let csv = if with_table {
        let t = report.table_csv();
        files.push(("table.csv".into(), t.clone().into_bytes()));
        t
    } else {
        let mut out = String::from("check,kind,pass,detail\n");
        for c in &report.checks {
            out.push_str(&format!(
                "{:?},{},{},{:?}\n",
                c.name,
                serde_json::to_value(c.kind)?.as_str().unwrap(),
                c.pass,
                c.detail
            ));
        }
        out
    };
    for (i, r) in report.counterexamples.iter().enumerate() {
        files.push((format!("mismatch-{i}.json"), (r.to_json()? + "\n").into_bytes()));
    }
    Ok(Produced { files, code: outcome_code(report.outcome), json, csv })
}

fn run_check(id: Identity, p: &Params, threads: usize) -> CliResult<Produced> {
    let mc = McConfig { reps: p.reps.unwrap(), seed: p.seed.unwrap(), threads };
    let t = p.t.unwrap_or(0.0);
    let lambda = p.lambda.unwrap();
    let grid = || p.grid.as_ref().map(|g| g.0.clone()).unwrap_or_default();
    let report = match id {
        Identity::Thm21 => est::second_class_variance_check(p.x.unwrap(), t, lambda, mc)?,
        Identity::VarExit => est::variance_exit_identity(t, mc)?,
        Identity::Burke => est::burke_check(p.x.unwrap(), t, lambda, mc)?,
        Identity::ExitY => est::exit_y_check(t, mc)?,
        Identity::Lemma41 => est::thickening_bound_check(t, &grid(), mc)?,
        Identity::Coupling52 => est::sourceless_coupling_check(t, mc)?,
        Identity::Coupling61 => est::sinkless_coupling_check(t, mc)?,
        Identity::Switch => est::switch_check(t, mc)?,
        Identity::Flux => est::flux_identity_check(t, &grid(), mc)?,
        Identity::Oracle => est::oracle_check(p.points.unwrap(), mc)?,
        Identity::Ks => est::distribution_checks(t, p.x.unwrap(), mc)?,
    };
    report_output(report, false)
}

fn run_sweep(kind: SweepKind, p: &Params, threads: usize) -> CliResult<Produced> {
    let mc = McConfig { reps: p.reps.unwrap(), seed: p.seed.unwrap(), threads };
    let grid = &p.grid.as_ref().unwrap().0;
    let t = p.t.unwrap_or(0.0);
    let report = match kind {
        SweepKind::Scaling => est::scaling_sweep(grid, mc)?,
        SweepKind::Tail => est::tail_profile(t, grid, mc)?,
        SweepKind::LocalGain => est::local_gain_probability(t, grid, p.level.unwrap(), mc)?,
        SweepKind::ExitNearZero => est::exit_near_zero_probability(t, grid, mc)?,
        SweepKind::L0Gap => est::l0_mean_gap(grid, mc)?,
    };
    report_output(report, true)
}

/// Path summary printed by `simulate`.
#[derive(Serialize)]
struct SimulationSummary {
    #[serde(rename = "L")]
    length: u64,
    #[serde(rename = "Z")]
    exit: f64,
    #[serde(rename = "Z_prime")]
    exit_left: f64,
    flux: Option<u64>,
    starved_sinks: Vec<f64>,
    particles: usize,
}

fn run_simulate(p: &Params, input: Option<&Path>) -> CliResult<Produced> {
    let r = match input {
        Some(path) => Realization::from_json(&fs::read_to_string(path)?)?,
        None => {
            let t = need(p.t, "t")?;
            let domain = Domain::new(p.x.unwrap_or(t), t)?;
            generate(Intensities::stationary(p.lambda.unwrap())?, domain, p.seed.unwrap(), 0)?
        }
    };
    let t = p.t.unwrap_or(r.domain().t);
    let x = p.x.unwrap_or(r.domain().x);
    let (config, log) = evolve(&r, t)?;
    let path = longest_weakly_ne(&r, x, t)?;
    let summary = SimulationSummary {
        length: path.length,
        exit: path.exit,
        exit_left: path.exit_left,
        flux: (!log.is_starved()).then(|| (log.sinks_used() + config.count_le(x)) as u64),
        starved_sinks: log.starved_sinks.clone(),
        particles: config.len(),
    };
    let json = pretty(&summary)?;
    let events = log.to_csv();
    let files = vec![
        ("realization.json".to_string(), (r.to_json()? + "\n").into_bytes()),
        ("events.csv".to_string(), events.clone().into_bytes()),
        ("paths.csv".to_string(), segments_to_csv(&space_time_paths(&log)).into_bytes()),
    ];
    Ok(Produced { files, code: EXIT_PASS, json, csv: events })
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Runs a resolved command, writes its files and manifest into `out_dir`.
fn execute(
    command: &str,
    target: Option<&str>,
    params: Params,
    input: Option<PathBuf>,
    threads: usize,
    out_dir: &Path,
) -> CliResult<(Produced, RunManifest)> {
    let started = unix_now();
    let produced = match command {
        "simulate" => run_simulate(&params, input.as_deref())?,
        "check" => run_check(parse_enum(target.unwrap())?, &params, threads)?,
        "sweep" => run_sweep(parse_enum(target.unwrap())?, &params, threads)?,
        _ => unreachable!(),
    };
    fs::create_dir_all(out_dir)?;
    for (name, bytes) in &produced.files {
        fs::write(out_dir.join(name), bytes)?;
    }
    let manifest = RunManifest {
        command: command.into(),
        target: target.map(String::from),
        seed: params.seed.unwrap_or(0),
        params,
        input,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        threads,
        started_unix: started,
        finished_unix: unix_now(),
        outputs: produced.files.iter().map(|f| f.0.clone()).collect(),
    };
    fs::write(out_dir.join(MANIFEST), pretty(&manifest)?)?;
    Ok((produced, manifest))
}

fn parse_enum<T: ValueEnum>(name: &str) -> CliResult<T> {
    T::from_str(name, false).map_err(CliError::Usage)
}

fn target_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().unwrap().get_name().to_string()
}

fn load_config(path: Option<&Path>) -> CliResult<Params> {
    match path {
        None => Ok(Params::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Usage(format!("config {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", p.display())))
        }
    }
}

fn emit(produced: &Produced, format: Format) {
    match format {
        Format::Json => print!("{}", produced.json),
        Format::Csv => print!("{}", produced.csv),
    }
}

fn replay(manifest_path: &Path, threads: Option<usize>, out_dir: Option<PathBuf>) -> CliResult<i32> {
    let text = fs::read_to_string(manifest_path)
        .map_err(|e| CliError::Usage(format!("manifest {}: {e}", manifest_path.display())))?;
    let m: RunManifest = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("manifest: {e}")))?;
    let original = manifest_path.parent().unwrap_or(Path::new("."));
    let out_dir = out_dir.unwrap_or_else(|| original.join("replay"));
    let threads = threads.unwrap_or(m.threads);
    let (produced, _) = execute(&m.command, m.target.as_deref(), m.params.clone(), m.input.clone(), threads, &out_dir)?;
    let mut identical = true;
    for name in &m.outputs {
        let before = fs::read(original.join(name)).ok();
        let same = before.as_deref() == Some(fs::read(out_dir.join(name))?.as_slice());
        println!("{name}: {}", if same { "identical" } else { "differs" });
        identical &= same;
    }
    Ok(if identical { produced.code } else { EXIT_INVARIANT })
}

fn dispatch(cli: Cli) -> CliResult<i32> {
    let (command, target, params, input, run) = match cli.command {
        Command::Replay { manifest, threads, out_dir } => return replay(&manifest, threads, out_dir),
        Command::Simulate { input, params, run } => {
            let input = match input {
                Some(p) => Some(fs::canonicalize(&p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?),
                None => None,
            };
            ("simulate", None, params, input, run)
        }
        Command::Check { identity, params, run } => ("check", Some(target_name(&identity)), params, None, run),
        Command::Sweep { kind, params, run } => ("sweep", Some(target_name(&kind)), params, None, run),
    };
    let params = params.or(load_config(run.config.as_deref())?);
    let params = resolve(command, target.as_deref(), params)?;
    if command == "simulate" && input.is_none() {
        need(params.t, "t")?;
    }
    let (produced, _) = execute(command, target.as_deref(), params, input, run.threads, &run.out_dir)?;
    emit(&produced, run.format);
    Ok(produced.code)
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Usage(_) => EXIT_USAGE,
                CliError::Runtime(_) => EXIT_RUNTIME,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("1, 2.5,4").unwrap(), Grid(vec![1.0, 2.5, 4.0]));
        assert!(parse_grid("").is_err());
        assert!(parse_grid("1,,2").is_err());
        assert!(parse_grid("1,inf").is_err());
    }

    #[test]
    fn flags_win_over_config() {
        let flags = Params { t: Some(5.0), ..Params::default() };
        let config = Params { t: Some(9.0), reps: Some(7), ..Params::default() };
        let merged = flags.or(config);
        assert_eq!((merged.t, merged.reps), (Some(5.0), Some(7)));
    }

    #[test]
    fn defaults_and_requirements() {
        let p = resolve("check", Some("thm21"), Params { t: Some(10.0), ..Params::default() }).unwrap();
        assert_eq!((p.x, p.reps, p.lambda), (Some(10.0), Some(10_000), Some(1.0)));
        assert!(matches!(resolve("check", Some("switch"), Params::default()), Err(CliError::Usage(_))));
        assert!(resolve("check", Some("oracle"), Params::default()).is_ok());
        assert!(matches!(resolve("sweep", Some("scaling"), Params::default()), Err(CliError::Usage(_))));
        let p = resolve("check", Some("ks"), Params { t: Some(10.0), ..Params::default() }).unwrap();
        assert_eq!(p.x, Some(5.0));
    }

    #[test]
    fn identity_names() {
        let names: Vec<String> = Identity::value_variants().iter().map(target_name).collect();
        assert_eq!(
            names,
            [
                "thm21",
                "var-exit",
                "burke",
                "exit-y",
                "lemma41",
                "coupling52",
                "coupling61",
                "switch",
                "flux",
                "oracle",
                "ks"
            ]
        );
        let kinds: Vec<String> = SweepKind::value_variants().iter().map(target_name).collect();
        assert_eq!(kinds, ["scaling", "tail", "local-gain", "exit-near-zero", "l0-gap"]);
    }

    #[test]
    fn config_rejects_unknown_fields() {
        assert!(serde_json::from_str::<Params>(r#"{"t": 1, "bogus": 2}"#).is_err());
        let p: Params = serde_json::from_str(r#"{"grid": [1, 2]}"#).unwrap();
        assert_eq!(p.grid, Some(Grid(vec![1.0, 2.0])));
    }
}
