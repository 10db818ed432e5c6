//! Flow the λ = 6 double well from k = 100 to k = 1e-3 and compare the IR
//! potential with the spectral effective potential.

use std::time::Instant;

use dwell::effective::build_effective_table;
use dwell::rgflow::{compare_to_spectral, integrate_flow, rg_effective_potential, Calibration, FlowOptions};
use dwell::{make_grid, Potential};

fn main() -> dwell::Result<()> {
    let pot = Potential::double_well(6.0)?;
    let flow_grid = make_grid(-3.0, 3.0, 1201)?;

    let start = Instant::now();
    let ir = integrate_flow(&pot, &flow_grid, 100.0, 1e-3, &FlowOptions::default())?;
    println!("flow: {:.2?}, floor hits {}", start.elapsed(), ir.floor_hits);
    let rg = rg_effective_potential(&ir, Calibration::None)?;

    let spectral = build_effective_table(&pot, &make_grid(-8.0, 8.0, 4001)?, -1.2, 1.2, 121)?;
    let report = compare_to_spectral(&rg, &spectral, Some(1.0))?;
    print!("{}", report.to_key_values());
    Ok(())
}
