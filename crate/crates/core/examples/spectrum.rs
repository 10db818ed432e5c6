//! Lowest levels of the λ = 6 double well and the susceptibility sums at J = 0.

use dwell::spectral::{assemble_hamiltonian, converged_susceptibility, lowest_eigenpairs};
use dwell::{make_grid, Potential};

fn main() -> dwell::Result<()> {
    let pot = Potential::double_well(6.0)?;
    let grid = make_grid(-8.0, 8.0, 4001)?;
    let h = assemble_hamiltonian(&grid, &pot, 0.0)?;

    let sol = lowest_eigenpairs(&h, 6)?;
    for (n, e) in sol.energies.iter().enumerate() {
        println!("E{n} = {e:.10}");
    }
    println!("gap = {:.10}", sol.energies[1] - sol.energies[0]);

    let (_, sus) = converged_susceptibility(&h)?;
    println!("chi = {:.8}  chi3 = {:.8}  states = {}", sus.chi, sus.chi3, sus.states);
    println!("Z(0) = chi3/chi^2 = {:.8}", sus.chi3 / (sus.chi * sus.chi));
    Ok(())
}
