//! Stationary Schrödinger problem on a uniform grid (hbar = m = 1).
//!
//! `H - J x` is discretized with the 3-point kinetic stencil and Dirichlet
//! boundaries, giving a symmetric tridiagonal matrix. Grid states are
//! normalized with weight `dx`, so `sum |psi_i|^2 dx = 1`.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{self, SymTridiagonal};
use crate::potential::Potential;

/// Largest allowed `|psi|` at the two box edges.
pub const BOUNDARY_LIMIT: f64 = 1e-8;
/// First truncation tried for the spectral sums.
pub const TRUNCATION_START: usize = 16;
/// Largest truncation tried for the spectral sums.
pub const TRUNCATION_CAP: usize = 128;
/// Relative change below which a spectral sum counts as converged.
pub const TRUNCATION_RTOL: f64 = 1e-8;

/// Discretized `H - J x` together with the grid it lives on.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub matrix: SymTridiagonal,
    pub grid: Grid,
    pub tilt: f64,
}

pub fn assemble_hamiltonian(grid: &Grid, pot: &Potential, tilt: f64) -> Result<Hamiltonian> {
    if !tilt.is_finite() {
        return Err(Error::InvalidArgument(format!("tilt must be finite, got {tilt}")));
    }
    let v = pot.sample(grid)?;
    let dx = grid.dx();
    let kin = 1.0 / (dx * dx);
    let diag = v
        .iter()
        .enumerate()
        .map(|(i, vi)| kin + vi - tilt * grid.x(i))
        .collect();
    let off = vec![-0.5 * kin; grid.len() - 1];
    Ok(Hamiltonian {
        matrix: SymTridiagonal::new(diag, off)?,
        grid: *grid,
        tilt,
    })
}

#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub energies: Vec<f64>,
    /// Grid vectors with `sum psi_i^2 dx = 1`.
    pub states: Vec<Vec<f64>>,
    pub tilt: f64,
    pub grid: Grid,
    /// Smallest energy difference the solver resolves (a few ulps of `|H|`).
    pub resolution: f64,
}

impl EigenSolution {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn ground_state(&self) -> &[f64] {
        &self.states[0]
    }

    /// Append eigenpairs until `m` are present.
    pub fn extend_to(&mut self, h: &Hamiltonian, m: usize) -> Result<()> {
        let have = self.len();
        if m <= have {
            return Ok(());
        }
        let scale = self.grid.dx().sqrt();
        // Back to unit Euclidean norm for the orthogonalization inside the solver.
        let unit: Vec<Vec<f64>> = self
            .states
            .iter()
            .map(|s| s.iter().map(|v| v * scale).collect())
            .collect();
        let prev: Vec<(f64, &[f64])> = self
            .energies
            .iter()
            .copied()
            .zip(unit.iter().map(|v| v.as_slice()))
            .collect();
        let (vals, vecs) = linalg::eigen::eigenpairs_range(&h.matrix, have, m - have, &prev)?;
        self.push_checked(vals, vecs, have)
    }

    fn push_checked(&mut self, vals: Vec<f64>, vecs: Vec<Vec<f64>>, offset: usize) -> Result<()> {
        let inv = 1.0 / self.grid.dx().sqrt();
        for (k, (e, mut v)) in vals.into_iter().zip(vecs).enumerate() {
            v.iter_mut().for_each(|x| *x *= inv);
            let edge = v[0].abs().max(v[v.len() - 1].abs());
            if !(edge < BOUNDARY_LIMIT) {
                return Err(Error::GridClipping {
                    state: offset + k,
                    amplitude: edge,
                    limit: BOUNDARY_LIMIT,
                });
            }
            self.energies.push(e);
            self.states.push(v);
        }
        Ok(())
    }
}

/// The `m` lowest eigenpairs of `h`, checked against the boundary bound.
pub fn lowest_eigenpairs(h: &Hamiltonian, m: usize) -> Result<EigenSolution> {
    if m == 0 || m >= h.grid.len() {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= m < n, got m = {m}, n = {}",
            h.grid.len()
        )));
    }
    let (vals, vecs) = linalg::lowest_eigenpairs_sym(&h.matrix, m)?;
    let mut sol = EigenSolution {
        energies: Vec::with_capacity(m),
        states: Vec::with_capacity(m),
        tilt: h.tilt,
        grid: h.grid,
        resolution: 64.0 * f64::EPSILON * h.matrix.norm(),
    };
    sol.push_checked(vals, vecs, 0)?;
    Ok(sol)
}

/// `sum_i x_i^p |psi_i|^2 dx`.
pub fn position_moment(state: &[f64], grid: &Grid, power: i32) -> Result<f64> {
    check_shape(state.len(), grid)?;
    let dx = grid.dx();
    Ok(state
        .iter()
        .enumerate()
        .map(|(i, v)| grid.x(i).powi(power) * v * v)
        .sum::<f64>()
        * dx)
}

fn check_shape(len: usize, grid: &Grid) -> Result<()> {
    if len != grid.len() {
        return Err(Error::InvalidArgument(format!(
            "state has {len} entries but the grid has {} nodes",
            grid.len()
        )));
    }
    Ok(())
}

/// Dipole elements `<0|x|n>` for `n = 1..m`.
pub fn transition_elements_x(sol: &EigenSolution) -> Result<Vec<f64>> {
    if sol.len() < 2 {
        return Err(Error::InvalidArgument(
            "transition elements need at least two states".into(),
        ));
    }
    let g = &sol.grid;
    let dx = g.dx();
    let ground = sol.ground_state();
    Ok(sol.states[1..]
        .iter()
        .map(|s| {
            ground
                .iter()
                .zip(s)
                .enumerate()
                .map(|(i, (a, b))| a * g.x(i) * b)
                .sum::<f64>()
                * dx
        })
        .collect())
}

/// `(chi, chi3)` with `chi = sum 2|x_0n|^2/dE_n` and `chi3 = sum 2|x_0n|^2/dE_n^3`
/// over the states present in `sol`.
pub fn static_susceptibility(sol: &EigenSolution) -> Result<(f64, f64)> {
    let elements = transition_elements_x(sol)?;
    let e0 = sol.ground_energy();
    let gap = sol.energies[1] - e0;
    if !(gap >= 1e-12_f64.max(sol.resolution)) {
        return Err(Error::NumericalFailure(format!(
            "ground state is degenerate (E1 - E0 = {gap:.3e})"
        )));
    }
    let mut chi = 0.0;
    let mut chi3 = 0.0;
    for (x0n, en) in elements.iter().zip(&sol.energies[1..]) {
        let de = en - e0;
        let w = 2.0 * x0n * x0n;
        chi += w / de;
        chi3 += w / (de * de * de);
    }
    Ok((chi, chi3))
}

/// Spectral sums with adaptive truncation.
#[derive(Debug, Clone)]
pub struct Susceptibility {
    pub chi: f64,
    pub chi3: f64,
    /// Number of eigenpairs used in the converged sums.
    pub states: usize,
}

/// Solve for enough eigenpairs that `chi` and `chi3` are converged: start at
/// [`TRUNCATION_START`] states and double until both change by less than
/// [`TRUNCATION_RTOL`], up to [`TRUNCATION_CAP`].
pub fn converged_susceptibility(h: &Hamiltonian) -> Result<(EigenSolution, Susceptibility)> {
    let cap = TRUNCATION_CAP.min(h.grid.len() - 1);
    let mut m = TRUNCATION_START.min(cap);
    let mut sol = lowest_eigenpairs(h, m)?;
    let (mut chi, mut chi3) = static_susceptibility(&sol)?;
    while m < cap {
        m = (2 * m).min(cap);
        sol.extend_to(h, m)?;
        let (c, c3) = static_susceptibility(&sol)?;
        let done = (c - chi).abs() <= TRUNCATION_RTOL * c.abs() && (c3 - chi3).abs() <= TRUNCATION_RTOL * c3.abs();
        chi = c;
        chi3 = c3;
        if done {
            return Ok((sol, Susceptibility { chi, chi3, states: m }));
        }
    }
    Err(Error::NumericalFailure(format!(
        "spectral sums not converged at the cap of {cap} states (chi = {chi}, chi3 = {chi3})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(omega: f64, l: f64, n: usize) -> (Grid, Potential) {
        (Grid::new(-l, l, n).unwrap(), Potential::harmonic(omega).unwrap())
    }

    #[test]
    fn stencil_entries() {
        let g = Grid::new(-10.0, 10.0, 2001).unwrap();
        let h = assemble_hamiltonian(&g, &Potential::harmonic(1.0).unwrap(), 0.0).unwrap();
        assert!(h.matrix.off.iter().all(|&e| (e + 5000.0).abs() < 1e-8));

        let g = Grid::new(-5.0, 5.0, 101).unwrap();
        let h = assemble_hamiltonian(&g, &Potential::harmonic(1.0).unwrap(), 0.0).unwrap();
        let i = 70; // x = 2
        assert!((g.x(i) - 2.0).abs() < 1e-12);
        assert!((h.matrix.diag[i] - 102.0).abs() < 1e-9);

        let g = Grid::new(-8.0, 8.0, 1601).unwrap();
        let h = assemble_hamiltonian(&g, &Potential::double_well(6.0).unwrap(), 0.3).unwrap();
        let i = 900; // x = 1
        assert!((g.x(i) - 1.0).abs() < 1e-12);
        assert!((h.matrix.diag[i] - 9999.45).abs() < 1e-8);
    }

    #[test]
    fn harmonic_levels() {
        let (g, p) = harmonic(1.0, 10.0, 4001);
        let h = assemble_hamiltonian(&g, &p, 0.0).unwrap();
        let sol = lowest_eigenpairs(&h, 4).unwrap();
        for (k, e) in sol.energies.iter().enumerate() {
            assert!((e - (k as f64 + 0.5)).abs() < 1e-4, "E_{k} = {e}");
        }
        for s in &sol.states {
            assert!((position_moment(s, &g, 0).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn harmonic_selection_rules_and_susceptibility() {
        for &(omega, chi_exact, chi3_exact) in &[(1.0, 1.0, 1.0), (2.0, 0.25, 0.0625)] {
            let (g, p) = harmonic(omega, 10.0, 4001);
            let h = assemble_hamiltonian(&g, &p, 0.0).unwrap();
            let sol = lowest_eigenpairs(&h, 4).unwrap();
            let x = transition_elements_x(&sol).unwrap();
            assert!((x[0].abs() - (0.5 / omega).sqrt()).abs() < 1e-4);
            assert!(x[1].abs() < 1e-6);
            let (chi, chi3) = static_susceptibility(&sol).unwrap();
            assert!((chi - chi_exact).abs() < 1e-4, "omega {omega}: chi {chi}");
            assert!((chi3 - chi3_exact).abs() < 1e-4, "omega {omega}: chi3 {chi3}");
        }
    }

    #[test]
    fn symmetric_moment_vanishes() {
        let (g, p) = harmonic(1.0, 8.0, 1601);
        let h = assemble_hamiltonian(&g, &p, 0.0).unwrap();
        let sol = lowest_eigenpairs(&h, 2).unwrap();
        assert!(position_moment(sol.ground_state(), &g, 1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn small_box_is_a_clipping_error() {
        let (g, p) = harmonic(1.0, 3.0, 601);
        let h = assemble_hamiltonian(&g, &p, 0.0).unwrap();
        assert!(matches!(lowest_eigenpairs(&h, 6), Err(Error::GridClipping { .. })));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let g = Grid::new(-1.0, 1.0, 5).unwrap();
        assert!(position_moment(&[1.0; 4], &g, 1).is_err());
    }

    #[test]
    fn degenerate_ground_state_is_a_failure() {
        let g = Grid::new(-16.0, 16.0, 4001).unwrap();
        let h = assemble_hamiltonian(&g, &Potential::double_well(0.1).unwrap(), 0.0).unwrap();
        let sol = lowest_eigenpairs(&h, 3).unwrap();
        assert!(matches!(static_susceptibility(&sol), Err(Error::NumericalFailure(_))));
    }
}
