use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use famprim::scenario::{self, Overrides, Report};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "famprim", version, about = "Smooth families of primitives for exact forms on covered domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its JSON report.
    Run {
        scenario: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override a tolerance, e.g. `--tol residual=1e-9`. Repeatable.
        #[arg(long = "tol", value_name = "KEY=VAL", value_parser = parse_tol)]
        tol: Vec<(String, f64)>,
        /// Report path; defaults to the scenario's `output`, else stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include wall-clock time per stage (reports are then no longer
        /// byte-reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Check the scenario and its cover without running a pipeline.
    Validate { scenario: PathBuf },
    /// Run the invariant suites on the built-in fixtures.
    SelfCheck,
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VAL, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("tolerance {k}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Report for a scenario file that could not be read or parsed.
fn unreadable(e: &scenario::ScenarioError) -> serde_json::Value {
    serde_json::json!({
        "status": "invalid",
        "exit_code": e.exit_code(),
        "error": { "kind": e.kind(), "message": e.to_string() },
    })
}

fn finish(report: &Report, out: Option<&Path>) -> ExitCode {
    if let Err(e) = emit(report, out) {
        eprintln!("famprim: cannot write report: {e}");
        return ExitCode::from(1);
    }
    if let Some(err) = &report.error {
        eprintln!("famprim: {}: {}", err.kind, err.message);
    }
    ExitCode::from(report.exit_code as u8)
}

fn main() -> ExitCode {
    // usage errors exit with 1; 2 is reserved for non-exact families
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match cli.command {
        Command::Run { scenario: path, seed, tol, out, timings } => {
            let s = match scenario::load(&path) {
                Ok(s) => s,
                Err(e) => {
                    let _ = emit(&unreadable(&e), out.as_deref());
                    eprintln!("famprim: {e}");
                    return ExitCode::from(e.exit_code() as u8);
                }
            };
            let out = out.or_else(|| s.output.as_ref().map(PathBuf::from));
            let report = scenario::run(&s, &Overrides { seed, tolerances: tol, timings });
            finish(&report, out.as_deref())
        }
        Command::Validate { scenario: path } => match scenario::load(&path) {
            Ok(s) => finish(&scenario::validate(&s, &Overrides::default()), None),
            Err(e) => {
                let _ = emit(&unreadable(&e), None);
                eprintln!("famprim: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Command::SelfCheck => {
            let report = scenario::self_check();
            if let Err(e) = emit(&report, None) {
                eprintln!("famprim: {e}");
                return ExitCode::from(1);
            }
            ExitCode::from(report.exit_code as u8)
        }
    }
}
