//! `nonlocal`: batch front-end. Reads a JSON run configuration, executes one
//! subcommand and writes `<name>.json` (plus `<name>.csv` for per-point samples)
//! into the output directory.
//!
//! Exit status: 0 if every check passed, 1 if a check failed or the computation
//! raised an error (the report is still written), 2 for an invalid configuration.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nonlocal_core::lemma_suite::LemmaId;
use nonlocal_core::rigidity::ReplaySide;
use nonlocal_core::Error;
use serde_json::{json, Value};

use commands::{Check, Outcome, Row};
use config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Run(#[from] Error),
    #[error("cannot write output: {0}")]
    Io(String),
}

impl CliError {
    fn status(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            // inputs the library rejects before computing anything
            CliError::Run(
                Error::InvalidOrder(_)
                | Error::InvalidDirection { .. }
                | Error::DimensionMismatch { .. }
                | Error::InvalidMeasure(_)
                | Error::InvalidField(_)
                | Error::InvalidNonlinearity(_)
                | Error::Domain(_),
            ) => 2,
            CliError::Run(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nonlocal", version, about = "Evaluate, certify and replay nonlocal operator checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for reports (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the absolute quadrature tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LemmaArg {
    P1,
    P2,
    P3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SideArg {
    Upper,
    Lower,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pointwise or sweep evaluation of ℐu.
    Eval,
    /// Nondegeneracy report of the spectral measure.
    Lambda,
    /// Build the barrier and certify its constant.
    Barrier,
    /// Check one of the barrier estimates on a sample.
    Lemma {
        #[arg(long, value_enum, ignore_case = true)]
        id: LemmaArg,
    },
    /// Two-sided replay of the comparison argument.
    Replay,
    /// Replay of a single branch.
    OneSided {
        #[arg(long, value_enum)]
        side: SideArg,
    },
    /// Explicit periodic flow towards a constant solution.
    Flow,
    /// Constant / affine / non-affine classification of the field.
    Classify,
}

impl Command {
    fn report_name(&self) -> String {
        match self {
            Command::Eval => "eval".into(),
            Command::Lambda => "lambda".into(),
            Command::Barrier => "barrier".into(),
            Command::Lemma { id } => format!("lemma_{id:?}"),
            Command::Replay => "replay".into(),
            Command::OneSided { side } => format!("one_sided_{}", format!("{side:?}").to_lowercase()),
            Command::Flow => "flow".into(),
            Command::Classify => "classify".into(),
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(tol) = cli.tol {
        cfg.tolerance.abs = tol;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn execute(command: &Command, cfg: &mut RunConfig) -> Result<Outcome, CliError> {
    match command {
        Command::Eval => commands::eval(cfg),
        Command::Lambda => commands::lambda(cfg),
        Command::Barrier => commands::barrier(cfg),
        Command::Lemma { id } => {
            let id = match id {
                LemmaArg::P1 => LemmaId::P1,
                LemmaArg::P2 => LemmaId::P2,
                LemmaArg::P3 => LemmaId::P3,
            };
            commands::lemma(cfg, id)
        }
        Command::Replay => commands::replay_cmd(cfg, None),
        Command::OneSided { side } => {
            let side = match side {
                SideArg::Upper => ReplaySide::Upper,
                SideArg::Lower => ReplaySide::Lower,
            };
            commands::replay_cmd(cfg, Some(side))
        }
        Command::Flow => commands::flow(cfg),
        Command::Classify => commands::classify(cfg),
    }
}

fn envelope(name: &str, cfg: &RunConfig, status: &str, checks: &[Check], result: Value, error: Option<String>) -> Value {
    let mut report = json!({
        "schemaVersion": SCHEMA_VERSION,
        "artifact": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "command": name,
        "config": cfg,
        "status": status,
        "checks": checks,
        "result": result,
    });
    if let Some(e) = error {
        report["error"] = Value::String(e);
    }
    report
}

fn write_json(dir: &Path, name: &str, report: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(dir.join(format!("{name}.json")), text).map_err(|e| CliError::Io(e.to_string()))
}

fn write_csv(dir: &Path, name: &str, rows: &[Row]) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(e.to_string());
    let mut w = csv::Writer::from_path(dir.join(format!("{name}.csv"))).map_err(io)?;
    let n = rows.first().map_or(0, |r| r.0.len());
    let mut header: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    header.extend(["value".to_string(), "budget".to_string()]);
    w.write_record(&header).map_err(io)?;
    for (p, v, b) in rows {
        let mut rec: Vec<String> = p.iter().map(|c| format!("{c:e}")).collect();
        rec.push(format!("{v:e}"));
        rec.push(format!("{b:e}"));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

fn run(cli: &Cli) -> u8 {
    let mut cfg = match load(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.status();
        }
    };
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: cannot create {}: {e}", cli.out.display());
        return 1;
    }
    let name = cli.command.report_name();
    let (report, rows, status) = match execute(&cli.command, &mut cfg) {
        Ok(out) => {
            let pass = out.checks.iter().all(|c| c.pass);
            let status = if pass { "pass" } else { "fail" };
            for c in out.checks.iter().filter(|c| !c.pass) {
                eprintln!("check failed: {}", c.name);
            }
            let report = envelope(&name, &cfg, status, &out.checks, out.result, None);
            (report, out.rows, if pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.status() == 2 {
                return 2;
            }
            let report = envelope(&name, &cfg, "error", &[], Value::Null, Some(e.to_string()));
            (report, Vec::new(), e.status())
        }
    };
    let written = write_json(&cli.out, &name, &report).and_then(|_| {
        if rows.is_empty() {
            Ok(())
        } else {
            write_csv(&cli.out, &name, &rows)
        }
    });
    if let Err(e) = written {
        eprintln!("error: {e}");
        return 1;
    }
    status
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(run(&cli))
}
