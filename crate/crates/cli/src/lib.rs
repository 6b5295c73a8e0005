//! Command-line front end: argument handling, table output and the
//! verification suites.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod verify;

use config::{Cli, Command, RunConfig};
use error::{CliError, Result};

/// Execute a parsed command line and write its output.
pub fn execute(cli: &Cli) -> Result<()> {
    let cfg = RunConfig::resolve(&cli.common, &cli.command)?;
    match &cli.command {
        Command::Verify { suite, inject_phi_shift } => {
            let (report, bytes) = verify_report(&cfg, *suite, *inject_phi_shift)?;
            output::emit(&cfg, &bytes)?;
            if report.failed > 0 {
                return Err(CliError::CheckFailed {
                    failed: report.failed,
                    total: report.total,
                });
            }
            Ok(())
        }
        other => {
            let table = match other {
                Command::Phi { grid, t } => commands::cmd_phi(&cfg, *grid, t)?,
                Command::Green { x, targets, route } => commands::cmd_green(&cfg, x, targets, *route)?,
                Command::Martin { xbox, seq, oracle } => commands::cmd_martin(&cfg, xbox, seq, *oracle)?,
                Command::Evolve { x, mode } => commands::cmd_evolve(&cfg, x, *mode)?,
                Command::FirstHit { x, mode } => commands::cmd_first_hit(&cfg, x, *mode)?,
                Command::Verify { .. } => unreachable!(),
            };
            output::emit(&cfg, &output::render(&cfg, &table)?)
        }
    }
}

/// Run the suites and render the report in the configured format.
pub fn verify_report(cfg: &RunConfig, suite: config::Suite, shift: Option<f64>) -> Result<(verify::Report, Vec<u8>)> {
    let report = verify::run(cfg, suite, shift)?;
    let bytes = match cfg.format {
        config::Format::Json => output::json_bytes(&report)?,
        config::Format::Csv => output::render_csv(cfg, &verify_table(&report))?,
    };
    Ok((report, bytes))
}

fn verify_table(r: &verify::Report) -> output::Table {
    let mut t = output::Table::new(&["suite", "name", "criterion", "passed", "value", "tolerance", "detail"]);
    for c in &r.checks {
        t.push(vec![
            c.suite.into(),
            c.name.clone().into(),
            c.criterion.map_or(String::new(), |n| n.to_string()).into(),
            (if c.passed { "true" } else { "false" }).into(),
            c.value.into(),
            c.tolerance.into(),
            c.detail.clone().into(),
        ]);
    }
    if let Some(w) = &r.winner {
        t.note("winner", w);
    }
    t.note("failed", r.failed);
    t
}

/// Size the global worker pool from `ORLAT_THREADS` when set.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("ORLAT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("ORLAT_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))
}
