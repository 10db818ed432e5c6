//! Build the effective-potential table on [-1.2, 1.2] and print a few probes.
//! Pass a coupling as the first argument to change λ (default 6).

use dwell::effective::{build_effective_table, solve_tilt_for_mean, Curve};
use dwell::{make_grid, Potential};

fn main() -> dwell::Result<()> {
    let lambda = match std::env::args().nth(1) {
        Some(s) => s
            .parse()
            .map_err(|_| dwell::Error::InvalidArgument(format!("lambda {s:?} is not a number")))?,
        None => 6.0,
    };
    let pot = Potential::double_well(lambda)?;
    let grid = make_grid(-8.0, 8.0, 4001)?;

    let r = solve_tilt_for_mean(&pot, &grid, 0.7)?;
    println!(
        "<x> = 0.7 needs J = {:.8} (V_eff'' = 1/chi = {:.6})",
        r.tilt,
        r.curvature()
    );

    let table = build_effective_table(&pot, &grid, -1.2, 1.2, 121)?;
    println!("{:>6} {:>14} {:>14} {:>14}", "x", "V_eff", "V_eff''", "Z_eff");
    for x in [0.0, 0.3, 0.7, 1.0, 1.2] {
        println!(
            "{x:>6.2} {:>14.8} {:>14.8} {:>14.8}",
            table.eval(x, Curve::Veff, 0)?,
            table.eval(x, Curve::Veff, 2)?,
            table.eval(x, Curve::Zeff, 0)?
        );
    }
    let (xm, vm) = table.min_veff();
    println!("minimum V_eff = {vm:.10} at x = {xm}");
    Ok(())
}
