//! Command line front end: `sample` dumps paths, `verify` runs one named
//! check, `suite` runs them all and aggregates a report.
//!
//! Configuration merges in a fixed order: built-in defaults, then an
//! optional JSON config file, then flags. Validation happens after the
//! merge and before any file is touched, so an invalid config never leaves
//! partial output. Artifacts are written to a temporary sibling and
//! renamed into place.
//!
//! Exit codes: 0 the command passed, 1 a check failed, 2 usage or config
//! error (including unknown checks and unwritable output), 3 a check was
//! inconclusive. Every output byte is determined by (config, seed) except
//! the wall-clock fields in `suite.json`.

mod checks;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use checks::{worse, RunSettings, CHECK_NAMES};
use lastpassage::report::{TestReport, Verdict};
use lastpassage::sampler::{
    path_sidecar, sample_path, write_path_csv, RngStream, SampleMethod, SamplerConfig,
};
use lastpassage::{Error, ModelParams, Result};

#[derive(Parser)]
#[command(name = "lastpassage", version, about = "Drifting diffusion stopped at its last visit to a level: samplers, closed-form laws, and verification checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw paths and write one CSV plus one JSON sidecar per path.
    Sample(SampleArgs),
    /// Run a single named check and write its JSON report.
    Verify(VerifyArgs),
    /// Run all checks in a fixed order and write an aggregate report.
    Suite(SuiteArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Upward drift rate (positive).
    #[arg(long)]
    lambda: Option<f64>,
    /// Level whose last visit stops the path (positive).
    #[arg(long)]
    z: Option<f64>,
    /// Base RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo path budget.
    #[arg(long)]
    paths: Option<usize>,
    /// Time step for sampled path grids.
    #[arg(long)]
    dt: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Path construction: exact, bruteforce, or bangbang.
    #[arg(long, default_value = "exact")]
    method: String,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Check name; `lastpassage suite` runs all of them in order.
    #[arg(long)]
    check: String,
}

#[derive(Args)]
struct SuiteArgs {
    #[command(flatten)]
    common: CommonArgs,
}

/// Effective run configuration. `dt` governs sampled path grids; the
/// randomized checks pin their own step sizes to keep each verdict inside
/// its error budget, and document them in their reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    lambda: f64,
    z: f64,
    seed: u64,
    n_paths: usize,
    dt: f64,
    out_dir: PathBuf,
    /// Optional subset of checks for `suite`, run in the listed order.
    #[serde(skip_serializing_if = "Option::is_none")]
    suite: Option<Vec<String>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lambda: 1.0,
            z: 1.0,
            seed: 42,
            n_paths: 100_000,
            dt: 1e-4,
            out_dir: PathBuf::from("out"),
            suite: None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SuiteEntry {
    wall_clock_ms: u64,
    report: TestReport,
}

#[derive(Debug, Serialize, Deserialize)]
struct SuiteReport {
    config: RunConfig,
    overall: Verdict,
    checks: Vec<SuiteEntry>,
}

fn effective_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Error::usage(format!("cannot read config file {}: {e}", path.display()))
            })?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| {
                Error::usage(format!("invalid config file {}: {e}", path.display()))
            })?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = common.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = common.z {
        cfg.z = v;
    }
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if let Some(v) = common.paths {
        cfg.n_paths = v;
    }
    if let Some(v) = common.dt {
        cfg.dt = v;
    }
    if let Some(v) = &common.out {
        cfg.out_dir = v.clone();
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<()> {
    if !(cfg.lambda.is_finite() && cfg.lambda > 0.0) {
        return Err(Error::usage(format!("lambda must be positive, got {}", cfg.lambda)));
    }
    if !(cfg.z.is_finite() && cfg.z > 0.0) {
        return Err(Error::usage(format!("z must be positive, got {}", cfg.z)));
    }
    if !(cfg.dt.is_finite() && cfg.dt > 0.0) {
        return Err(Error::usage(format!("dt must be positive, got {}", cfg.dt)));
    }
    if cfg.n_paths == 0 {
        return Err(Error::usage("n_paths must be at least 1".to_string()));
    }
    if let Some(list) = &cfg.suite {
        if list.is_empty() {
            return Err(Error::usage("suite list must not be empty".to_string()));
        }
        for name in list {
            if !CHECK_NAMES.contains(&name.as_str()) {
                return Err(Error::usage(format!(
                    "unknown check '{name}' in suite list; valid names: {}",
                    CHECK_NAMES.join(", ")
                )));
            }
        }
        for (i, name) in list.iter().enumerate() {
            if list[i + 1..].contains(name) {
                return Err(Error::usage(format!("duplicate check '{name}' in suite list")));
            }
        }
    }
    Ok(())
}

fn to_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Write via a temporary sibling and rename, so a crash never leaves a
/// half-written artifact under the final name.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::usage(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes)
        .map_err(|e| Error::usage(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| Error::usage(format!("cannot finalize {}: {e}", path.display())))?;
    Ok(())
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::usage(format!("cannot create output directory {}: {e}", dir.display())))
}

fn exit_for(verdict: Verdict) -> ExitCode {
    match verdict {
        Verdict::Pass => ExitCode::SUCCESS,
        Verdict::Fail => ExitCode::from(1),
        Verdict::Inconclusive => ExitCode::from(3),
    }
}

fn cmd_sample(cfg: &RunConfig, method: &str) -> Result<ExitCode> {
    let method: SampleMethod = method.parse()?;
    let params = ModelParams::new(cfg.lambda, cfg.z)?;
    let sampler_cfg = SamplerConfig { dt: cfg.dt, ..Default::default() };
    ensure_out_dir(&cfg.out_dir)?;
    for i in 0..cfg.n_paths {
        let stream = RngStream::new(cfg.seed, i as u64);
        let path = sample_path(params, &sampler_cfg, method, stream)?;
        let mut csv = Vec::new();
        write_path_csv(&mut csv, &path)?;
        write_atomic(&cfg.out_dir.join(format!("path-{i:06}.csv")), &csv)?;
        let sidecar = path_sidecar(params, &sampler_cfg, method, stream, &path);
        write_atomic(
            &cfg.out_dir.join(format!("path-{i:06}.json")),
            to_pretty(&sidecar)?.as_bytes(),
        )?;
    }
    println!("wrote {} {method} path(s) to {}", cfg.n_paths, cfg.out_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(cfg: &RunConfig, check: &str) -> Result<ExitCode> {
    let params = ModelParams::new(cfg.lambda, cfg.z)?;
    let settings = RunSettings { seed: cfg.seed, paths: cfg.n_paths };
    let report = checks::run_check(check, params, &settings)?;
    ensure_out_dir(&cfg.out_dir)?;
    write_atomic(
        &cfg.out_dir.join(format!("check-{check}.json")),
        to_pretty(&report)?.as_bytes(),
    )?;
    println!(
        "{}: {} (statistic={}, p_or_err={}, n={})",
        report.name, report.verdict, report.statistic, report.p_value_or_error, report.n
    );
    Ok(exit_for(report.verdict))
}

fn cmd_suite(cfg: &RunConfig) -> Result<ExitCode> {
    let params = ModelParams::new(cfg.lambda, cfg.z)?;
    let settings = RunSettings { seed: cfg.seed, paths: cfg.n_paths };
    let names: Vec<&str> = match &cfg.suite {
        Some(list) => list.iter().map(String::as_str).collect(),
        None => CHECK_NAMES.to_vec(),
    };
    ensure_out_dir(&cfg.out_dir)?;
    let started = Instant::now();
    let mut entries = Vec::with_capacity(names.len());
    let mut overall = Verdict::Pass;
    for name in names {
        let check_started = Instant::now();
        let report = checks::run_check(name, params, &settings)?;
        let wall_clock_ms = check_started.elapsed().as_millis() as u64;
        println!("{name}: {} ({wall_clock_ms} ms)", report.verdict);
        write_atomic(
            &cfg.out_dir.join(format!("check-{name}.json")),
            to_pretty(&report)?.as_bytes(),
        )?;
        overall = worse(overall, report.verdict);
        entries.push(SuiteEntry { wall_clock_ms, report });
    }
    let suite = SuiteReport { config: cfg.clone(), overall, checks: entries };
    write_atomic(&cfg.out_dir.join("suite.json"), to_pretty(&suite)?.as_bytes())?;
    println!("overall: {overall} ({} ms total)", started.elapsed().as_millis());
    Ok(exit_for(overall))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Sample(args) => {
            let cfg = effective_config(&args.common)?;
            cmd_sample(&cfg, &args.method)
        }
        Command::Verify(args) => {
            let cfg = effective_config(&args.common)?;
            cmd_verify(&cfg, &args.check)
        }
        Command::Suite(args) => {
            let cfg = effective_config(&args.common)?;
            cmd_suite(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_flags() -> CommonArgs {
        CommonArgs {
            config: None,
            lambda: None,
            z: None,
            seed: None,
            paths: None,
            dt: None,
            out: None,
        }
    }

    #[test]
    fn defaults_pass_validation_and_flags_override() {
        let cfg = effective_config(&no_flags()).unwrap();
        assert_eq!(cfg.lambda, 1.0);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.n_paths, 100_000);
        let cfg = effective_config(&CommonArgs {
            lambda: Some(2.0),
            paths: Some(7),
            ..no_flags()
        })
        .unwrap();
        assert_eq!(cfg.lambda, 2.0);
        assert_eq!(cfg.n_paths, 7);
    }

    #[test]
    fn file_then_flags_merge_order() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("cfg.json");
        fs::write(&file, r#"{"lambda": 3.0, "seed": 9}"#).unwrap();
        let cfg = effective_config(&CommonArgs {
            config: Some(file),
            seed: Some(11),
            ..no_flags()
        })
        .unwrap();
        // file overrides the default, flag overrides the file
        assert_eq!(cfg.lambda, 3.0);
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.z, 1.0);
    }

    #[test]
    fn bad_values_are_usage_errors() {
        for cfg in [
            RunConfig { lambda: -1.0, ..Default::default() },
            RunConfig { z: 0.0, ..Default::default() },
            RunConfig { dt: f64::NAN, ..Default::default() },
            RunConfig { n_paths: 0, ..Default::default() },
            RunConfig { suite: Some(vec![]), ..Default::default() },
            RunConfig { suite: Some(vec!["bogus".into()]), ..Default::default() },
            RunConfig {
                suite: Some(vec!["integrals".into(), "integrals".into()]),
                ..Default::default()
            },
        ] {
            assert!(matches!(validate(&cfg), Err(Error::Usage(_))), "{cfg:?}");
        }
        let ok = RunConfig {
            suite: Some(vec!["integrals".into(), "semigroup".into()]),
            ..Default::default()
        };
        validate(&ok).unwrap();
    }

    #[test]
    fn unknown_config_field_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("cfg.json");
        fs::write(&file, r#"{"lambduh": 3.0}"#).unwrap();
        let err = effective_config(&CommonArgs { config: Some(file), ..no_flags() }).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
    }

    #[test]
    fn suite_report_round_trips() {
        let report = SuiteReport {
            config: RunConfig::default(),
            overall: Verdict::Pass,
            checks: vec![SuiteEntry {
                wall_clock_ms: 12,
                report: TestReport::new("integrals", 0.0, 0.0, 114, Verdict::Pass),
            }],
        };
        let text = to_pretty(&report).unwrap();
        let back: SuiteReport = serde_json::from_str(&text).unwrap();
        assert_eq!(to_pretty(&back).unwrap(), text);
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.json");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
