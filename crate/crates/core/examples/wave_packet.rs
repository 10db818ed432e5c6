//! Release a Gaussian packet at x = 0.7 in the λ = 6 well and track its
//! oscillation, norm and energy.

use dwell::tdse::{dominant_period, gaussian_packet, propagate};
use dwell::{make_grid, Potential};

fn main() -> dwell::Result<()> {
    let pot = Potential::double_well(6.0)?;
    let grid = make_grid(-8.0, 8.0, 4001)?;
    let mut state = gaussian_packet(&grid, 0.7, 1.027165, 0.0)?;

    let series = propagate(&mut state, &pot, 1e-3, 30_000, 10)?;
    for i in (0..series.len()).step_by(250) {
        println!(
            "t = {:6.2}  <x> = {:+.6}  <p> = {:+.6}",
            series.times[i], series.x_mean[i], series.p_mean[i]
        );
    }
    let (dn, de) = series.drifts();
    println!("norm drift {dn:.2e}, relative energy drift {de:.2e}");
    println!("period {:.5}", dominant_period(&series)?);
    Ok(())
}
