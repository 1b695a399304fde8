//! Acceptance suite: every criterion at full size, one status line each.
//!
//! The determinism criterion is checked literally here: two fast-suite runs
//! are written to separate directories and their `data.csv` files compared.

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use extlab_core::verify::{run_criterion, run_suite, Goldens, Suite, CRITERIA};

fn determinism(goldens: &Goldens) -> Result<(bool, String), String> {
    let start = Instant::now();
    let mut bytes = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let report = run_suite(Suite::Fast, goldens, |_| {}).map_err(|e| e.to_string())?;
        report.write_to(dir.path()).map_err(|e| e.to_string())?;
        bytes.push(fs::read(dir.path().join("data.csv")).map_err(|e| e.to_string())?);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let budget = goldens.determinism.budget_secs;
    let identical = bytes[0] == bytes[1];
    let passed = identical && elapsed <= budget;
    let mut line = format!(
        "[{}] {:>2} {:<22} {:>8.2}s",
        if passed { "PASS" } else { "FAIL" },
        CRITERIA.len(),
        "determinism",
        elapsed
    );
    if !identical {
        line.push_str("  failed: data.csv differs between runs");
    }
    if elapsed > budget {
        line.push_str(&format!("  over budget ({budget:.0}s)"));
    }
    Ok((passed, line))
}

fn main() -> ExitCode {
    let goldens = Goldens::embedded();
    let mut failures = 0;
    for id in 1..CRITERIA.len() as u8 {
        match run_criterion(id, Suite::Full, &goldens) {
            Ok(outcome) => {
                failures += usize::from(!outcome.passed());
                println!("{}", outcome.line());
            }
            Err(e) => {
                failures += 1;
                println!("[FAIL] {id:>2} {:<22} error: {e}", CRITERIA[usize::from(id) - 1].0);
            }
        }
    }
    match determinism(&goldens) {
        Ok((passed, line)) => {
            failures += usize::from(!passed);
            println!("{line}");
        }
        Err(e) => {
            failures += 1;
            println!("[FAIL] {:>2} {:<22} error: {e}", CRITERIA.len(), "determinism");
        }
    }
    println!("acceptance: {} of {} criteria passed", CRITERIA.len() - failures, CRITERIA.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
