//! Runs every reproduction criterion and prints one PASS/FAIL line each.
//!
//! The process exits nonzero when an outcome differs from the recorded
//! expectation. Criterion 10 is recorded as failing: its coupling check
//! `‖p_L p_I‖ < 1/2` cannot hold for 12×12×12 rank-one tensors at this
//! corruption level (two support entries sharing a fiber already push the
//! norm to about 0.55). Its construction-exact parts must still hold, and an
//! unexpected PASS is also reported so the record gets revisited.

use tnn_core::reproduce::{run_criterion, CRITERIA, FROZEN_FIVE_CONDITION_PASSES};

const EXPECTED_FAILURES: [u8; 1] = [10];

fn main() {
    let mut mismatches = Vec::new();
    for (id, _) in CRITERIA {
        let out = match run_criterion(id) {
            Ok(o) => o,
            Err(e) => {
                println!("FAIL criterion {id}: error: {e}");
                mismatches.push(format!("criterion {id} errored: {e}"));
                continue;
            }
        };
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id} ({}) [{:.2}s]: {}", out.name, out.seconds, out.summary);
        let expect_pass = !EXPECTED_FAILURES.contains(&id);
        if out.pass != expect_pass {
            mismatches.push(format!("criterion {id}: expected {}, got {tag}", if expect_pass { "PASS" } else { "FAIL" }));
        }
        if id == 10 {
            let m = |k: &str| out.metrics.get(k).copied().unwrap_or(f64::NAN);
            for (k, want) in [
                ("construction_exact", 10.0),
                ("golfing_decreasing", 10.0),
                ("five_condition_passes", FROZEN_FIVE_CONDITION_PASSES as f64),
            ] {
                if m(k) != want {
                    mismatches.push(format!("criterion 10 {k}: expected {want}, got {}", m(k)));
                }
            }
        }
    }
    if mismatches.is_empty() {
        println!("acceptance: outcomes match the recorded expectations");
    } else {
        for m in &mismatches {
            println!("mismatch: {m}");
        }
        std::process::exit(1);
    }
}
