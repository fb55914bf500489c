//! Runs every acceptance criterion at its stated tolerance and instance
//! count. One PASS/FAIL line per criterion; exits nonzero on any failure.

use std::process::ExitCode;

use growing_experts::harness::verify::{run_suite, Suite};

fn main() -> ExitCode {
    let results = run_suite(Suite::All, None);
    let mut failed = 0;
    for r in &results {
        println!("{r}");
        if !r.passed {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
