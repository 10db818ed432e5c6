//! Run the λ = 6 scenario and write its curves to a directory
//! (first argument, default `out/fig1`).

use dwell::harness::{preset_in, run_scenario, ScenarioName};

fn main() -> dwell::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "out/fig1".into());
    let run = run_scenario(&preset_in(ScenarioName::Fig1, &dir))?;
    print!("{}", run.summary().render());
    println!("# wrote {dir}");
    Ok(())
}
