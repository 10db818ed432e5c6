//! Classical motion from x = 0.7 at rest: bare potential, V_eff with Z = 1,
//! and V_eff with the field-dependent Z_eff.

use dwell::classical::{euler_lagrange_residual, integrate_trajectory, EAModel, Mode};
use dwell::effective::build_effective_table;
use dwell::tdse::period_of;
use dwell::{make_grid, Potential};

fn main() -> dwell::Result<()> {
    let pot = Potential::double_well(6.0)?;
    let table = build_effective_table(&pot, &make_grid(-8.0, 8.0, 4001)?, -1.2, 1.2, 121)?;

    let models = [
        EAModel::bare(pot.clone()),
        EAModel::effective(Mode::EaZ1, table.clone(), pot.clone())?,
        EAModel::effective(Mode::EaZ, table, pot)?,
    ];
    for model in &models {
        let traj = integrate_trajectory(model, 0.7, 0.0, 1e-3, 30.0)?;
        println!(
            "{:>6}: period {:.5}  energy drift {:.1e}  EL residual {:.1e}",
            model.mode.label(),
            period_of(&traj.times, &traj.x)?,
            traj.energy_drift(),
            euler_lagrange_residual(model, &traj)?
        );
    }
    Ok(())
}
