//! Acceptance run: one line per criterion, exiting nonzero if any
//! criterion did not pass. Runs without the test harness so the lines are
//! never captured.

use std::process::Command;

use clap::Parser;
use orlat_cli::config::{Cli, Command as Sub, RunConfig};
use orlat_cli::verify::Report;

/// Criterion number, short title and time limit in seconds.
const CRITERIA: [(u8, &str, f64); 8] = [
    (1, "kernel exactness", 1.0),
    (2, "variant arbitration", 120.0),
    (3, "induced Green exponent", 60.0),
    (4, "directional Green exponents", 300.0),
    (5, "first-hit decomposition identity", 180.0),
    (6, "boundary triviality", 300.0),
    (7, "induced samplers agree", 120.0),
    (8, "three-way Green agreement", 120.0),
];

fn verify_all_in_process() -> (Report, Vec<u8>) {
    let cli = Cli::parse_from(["orlat", "verify", "--suite", "all"]);
    let Sub::Verify { suite, inject_phi_shift } = &cli.command else {
        unreachable!()
    };
    let cfg = RunConfig::resolve(&cli.common, &cli.command).unwrap();
    orlat_cli::verify_report(&cfg, *suite, *inject_phi_shift).unwrap()
}

fn main() {
    let (report, first) = verify_all_in_process();
    let mut failed = Vec::new();
    for (n, title, limit) in CRITERIA {
        let checks: Vec<_> = report.checks.iter().filter(|c| c.criterion == Some(n)).collect();
        let secs = report.criterion_seconds(n);
        let pass = report.criterion_passed(n) == Some(true) && secs < limit;
        let worst = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect::<Vec<_>>();
        println!(
            "criterion {n} ({title}): {} [{} checks, {secs:.1} s of {limit} s{}]",
            if pass { "PASS" } else { "FAIL" },
            checks.len(),
            if worst.is_empty() {
                String::new()
            } else {
                format!("; failing: {}", worst.join(", "))
            }
        );
        for c in &checks {
            println!("    {}: {} = {:.6e} vs {:e}", c.name, if c.passed { "ok" } else { "FAILED" }, c.value, c.tolerance);
        }
        if !pass {
            failed.push(n);
        }
    }

    // a second run through the binary, on the same seed, to stdout
    let out = Command::new(env!("CARGO_BIN_EXE_orlat"))
        .args(["verify", "--suite", "all"])
        .output()
        .expect("binary runs");
    let identical = out.stdout == first;
    let pass = identical && out.status.success() == (report.failed == 0);
    println!(
        "criterion 9 (reproducible verify report): {} [{} bytes, {}]",
        if pass { "PASS" } else { "FAIL" },
        first.len(),
        if identical { "byte-identical" } else { "reports differ" }
    );
    if !pass {
        failed.push(9);
    }
    println!(
        "winner: {}; {} of {} checks passed",
        report.winner.as_deref().unwrap_or("none"),
        report.passed,
        report.total
    );
    if !failed.is_empty() {
        eprintln!("criteria failed: {failed:?}");
        std::process::exit(1);
    }
}
