//! Run the λ = 0.1 scenario: deep wells, where the packet should follow the
//! bare classical trajectory. Writes to the first argument (default `out/fig2`).

use dwell::classical::Mode;
use dwell::harness::{preset_in, run_scenario, ScenarioName};

fn main() -> dwell::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "out/fig2".into());
    let run = run_scenario(&preset_in(ScenarioName::Fig2, &dir))?;
    if let Some(bare) = run.curve(Mode::Bare) {
        println!(
            "max |<x> - x_cl| / amplitude = {:.4}   periods: packet {:.4}, classical {:.4}",
            bare.max_dev_ratio(),
            run.wp_period.unwrap_or(f64::NAN),
            bare.period.unwrap_or(f64::NAN)
        );
    }
    println!("# wrote {dir}");
    Ok(())
}
