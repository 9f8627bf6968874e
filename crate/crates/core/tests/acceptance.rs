//! Runs every acceptance criterion and prints one PASS/FAIL line each,
//! followed by the measured values.
//!
//! Criteria listed in `KNOWN_FAILURES` are evaluated at their stated bounds
//! like every other criterion and still print FAIL; they only stop counting
//! against the exit status. Any other failure, or a known failure that
//! starts passing, exits nonzero.

use std::process::ExitCode;
use std::time::Instant;

use oscex_core::acceptance::evaluate_all;

const KNOWN_FAILURES: &[(usize, &str)] = &[(
    10,
    "the trapezoid rule on the smooth periodic integrand m r²/L converges \
     geometrically in the step count, so the fitted period-error slope is far \
     above 2 and the O(Δφ²) slope check cannot hold",
)];

fn known(id: usize) -> Option<&'static str> {
    KNOWN_FAILURES.iter().find(|k| k.0 == id).map(|k| k.1)
}

fn main() -> ExitCode {
    let started = Instant::now();
    let reports = evaluate_all();
    for r in &reports {
        let mark = if !r.passed() && known(r.id).is_some() {
            "  (known)"
        } else {
            ""
        };
        println!("{}{mark}", r.status_line());
    }
    println!();
    for r in &reports {
        print!("{r}");
        if let (false, Some(why)) = (r.passed(), known(r.id)) {
            println!("       known failure: {why}");
        }
    }
    let failed: Vec<usize> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.id)
        .collect();
    let unexpected: Vec<usize> = failed
        .iter()
        .copied()
        .filter(|&id| known(id).is_none())
        .collect();
    let fixed: Vec<usize> = reports
        .iter()
        .filter(|r| r.passed() && known(r.id).is_some())
        .map(|r| r.id)
        .collect();
    println!(
        "\nacceptance: {} passed, {} failed ({} known) in {:.2}s",
        reports.len() - failed.len(),
        failed.len(),
        failed.len() - unexpected.len(),
        started.elapsed().as_secs_f64()
    );
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
    }
    if !fixed.is_empty() {
        println!("known failures now passing, update KNOWN_FAILURES: {fixed:?}");
    }
    if unexpected.is_empty() && fixed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
