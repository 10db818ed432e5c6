//! Run the self-check suite and print one line per criterion.
//!
//! `cargo run --release --example checks -- full`

use dwell::harness::{run_checks, CheckLevel};

fn main() {
    let level = match std::env::args().nth(1).as_deref() {
        Some("full") => CheckLevel::Full,
        _ => CheckLevel::Fast,
    };
    let report = run_checks(level, None);
    print!("{}", report.render());
    std::process::exit(if report.passed() { 0 } else { 1 });
}
