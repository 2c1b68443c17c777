//! All acceptance criteria at their stated tolerances, one line each.

use anisotetra_cli::config::{DEFAULT_SEED, SEED_ENV};
use anisotetra_cli::selftest::{run_criterion, ALL};

#[test]
fn acceptance_criteria() {
    let seed = std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_SEED);
    let mut failed = Vec::new();
    for id in ALL {
        let line = match run_criterion(id, seed) {
            Ok(o) => {
                if !o.passed {
                    failed.push(id);
                }
                o.line()
            }
            Err(e) => {
                failed.push(id);
                format!("FAIL {id:>2} error: {}", e.message)
            }
        };
        println!("{line}");
    }
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
