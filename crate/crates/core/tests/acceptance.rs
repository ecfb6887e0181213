//! Runs every acceptance criterion and prints one verdict line for each.
//!
//! Pass criterion numbers as arguments to run a subset.

use std::process::ExitCode;

use causal_avc::acceptance::{run_criterion, CRITERIA};

fn main() -> ExitCode {
    let ids: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .filter(|id| (1..=CRITERIA).contains(id))
        .collect();
    let ids = if ids.is_empty() {
        (1..=CRITERIA).collect()
    } else {
        ids
    };
    let mut failed = 0;
    for id in ids {
        let r = run_criterion(id);
        println!("{r}");
        failed += usize::from(!r.passed);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
