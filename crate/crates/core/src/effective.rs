//! Zero-temperature effective potential and wave-function renormalization.
//!
//! `V_eff(x)` is the minimum of `<psi|H|psi>` over states with `<x> = x`. With
//! a Lagrange tilt `J` this is the ground state of `H - J x`: if that state has
//! energy `E0(J)` and mean position `x(J)`, then `V_eff(x(J)) = E0(J) + J x(J)`
//! and `V_eff'(x) = J`. The curvature is the inverse static susceptibility,
//! `V_eff'' = 1 / chi`, and the coefficient of the `xdot^2 / 2` term in the
//! derivative expansion of the effective action is `Z_eff = chi3 / chi^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::potential::Potential;
use crate::spectral::{self, assemble_hamiltonian, position_moment};
use crate::spline::{CubicSpline, EndCondition};

/// Tolerance on `|<x> - x_target|` reached by [`solve_tilt_for_mean`].
pub const MEAN_TOL: f64 = 1e-10;
/// Contractual bound on `|<x> - x_target|`.
pub const MEAN_TOL_CONTRACT: f64 = 1e-8;
pub const MAX_NEWTON_ITERATIONS: usize = 100;
/// States used for the approximate slope inside the Newton loop.
const NEWTON_STATES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltedGroundResult {
    /// Lagrange tilt (source) `J`.
    pub tilt: f64,
    /// Ground energy of `H - J x`.
    pub e0: f64,
    pub x_mean: f64,
    /// `d<x>/dJ`.
    pub chi: f64,
    pub chi3: f64,
    /// Eigenpairs in the converged spectral sums.
    pub states: usize,
}

impl TiltedGroundResult {
    /// `V_eff(x_mean) = E0 + J x_mean`.
    pub fn veff(&self) -> f64 {
        self.e0 + self.tilt * self.x_mean
    }

    pub fn curvature(&self) -> f64 {
        1.0 / self.chi
    }

    pub fn zeff(&self) -> f64 {
        self.chi3 / (self.chi * self.chi)
    }
}

pub fn tilted_ground(pot: &Potential, grid: &Grid, tilt: f64) -> Result<TiltedGroundResult> {
    let h = assemble_hamiltonian(grid, pot, tilt)?;
    let (sol, sus) = spectral::converged_susceptibility(&h)?;
    Ok(TiltedGroundResult {
        tilt,
        e0: sol.ground_energy(),
        x_mean: position_moment(sol.ground_state(), grid, 1)?,
        chi: sus.chi,
        chi3: sus.chi3,
        states: sus.states,
    })
}

/// `<x>` and an approximate `d<x>/dJ` from a few low states.
fn mean_and_slope(pot: &Potential, grid: &Grid, tilt: f64) -> Result<(f64, f64)> {
    let h = assemble_hamiltonian(grid, pot, tilt)?;
    let m = NEWTON_STATES.min(grid.len() - 1);
    let sol = spectral::lowest_eigenpairs(&h, m)?;
    let (chi, _) = spectral::static_susceptibility(&sol)?;
    Ok((position_moment(sol.ground_state(), grid, 1)?, chi))
}

fn ground_width(pot: &Potential, grid: &Grid) -> Result<f64> {
    let h = assemble_hamiltonian(grid, pot, 0.0)?;
    let sol = spectral::lowest_eigenpairs(&h, 1)?;
    let g = sol.ground_state();
    let m1 = position_moment(g, grid, 1)?;
    let m2 = position_moment(g, grid, 2)?;
    let spread = (m2 - m1 * m1).max(0.0).sqrt();
    // In a double well the spread measures the well separation; the width of
    // a localized state is that of one well.
    match pot.well_minimum() {
        Some(m) if m > 0.0 && pot.curvature(m) > 0.0 => Ok(spread.min(1.0 / (2.0 * pot.curvature(m).sqrt()).sqrt())),
        _ => Ok(spread),
    }
}

/// Find the tilt whose ground state has `<x> = x_target`.
///
/// `x(J)` is strictly increasing (`chi > 0`), so Newton steps with slope `chi`
/// are safeguarded by bisection once a bracket is known.
pub fn solve_tilt_for_mean(pot: &Potential, grid: &Grid, x_target: f64) -> Result<TiltedGroundResult> {
    let width = ground_width(pot, grid)?;
    let margin = 5.0 * width;
    if !(x_target > grid.xmin() + margin && x_target < grid.xmax() - margin) {
        return Err(Error::Range {
            target: x_target,
            reason: format!(
                "must lie inside [{}, {}] (box less five local widths)",
                grid.xmin() + margin,
                grid.xmax() - margin
            ),
        });
    }
    solve_tilt_from(pot, grid, x_target, 0.0)
}

fn solve_tilt_from(pot: &Potential, grid: &Grid, x_target: f64, guess: f64) -> Result<TiltedGroundResult> {
    // Bracket: x(lo) < target < x(hi).
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut tilt = guess;
    let mut last_step = f64::INFINITY;
    for _ in 0..MAX_NEWTON_ITERATIONS {
        let (x, chi) = match mean_and_slope(pot, grid, tilt) {
            Ok(v) => v,
            Err(Error::GridClipping { .. }) => {
                // Too strong a tilt for the box: treat as overshoot.
                if tilt > 0.0 {
                    hi = hi.min(tilt);
                } else {
                    lo = lo.max(tilt);
                }
                tilt = next_in_bracket(lo, hi, tilt);
                continue;
            }
            Err(e) => return Err(e),
        };
        let resid = x - x_target;
        if resid.abs() < MEAN_TOL
            || (resid.abs() < MEAN_TOL_CONTRACT && last_step.abs() <= 4.0 * f64::EPSILON * tilt.abs().max(1.0))
        {
            return finish(pot, grid, tilt, x_target);
        }
        if resid < 0.0 {
            lo = lo.max(tilt);
        } else {
            hi = hi.min(tilt);
        }
        let newton = tilt - resid / chi;
        let next = if chi > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            next_in_bracket(lo, hi, tilt)
        };
        last_step = next - tilt;
        tilt = next;
    }
    Err(Error::NumericalFailure(format!(
        "tilt search for <x> = {x_target} did not converge in {MAX_NEWTON_ITERATIONS} iterations (bracket [{lo}, {hi}])"
    )))
}

fn next_in_bracket(lo: f64, hi: f64, current: f64) -> f64 {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo + 2.0 * (current - lo).abs().max(0.1),
        (false, true) => hi - 2.0 * (hi - current).abs().max(0.1),
        (false, false) => current,
    }
}

fn finish(pot: &Potential, grid: &Grid, tilt: f64, x_target: f64) -> Result<TiltedGroundResult> {
    let r = tilted_ground(pot, grid, tilt)?;
    if (r.x_mean - x_target).abs() >= MEAN_TOL_CONTRACT {
        return Err(Error::NumericalFailure(format!(
            "tilt {tilt} gives <x> = {} for target {x_target}",
            r.x_mean
        )));
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Spectral,
    Rgflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    Veff,
    Zeff,
}

/// Sampled `V_eff` and `Z_eff` with C2 cubic-spline interpolants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectiveTable {
    pub nodes: Vec<f64>,
    pub veff: Vec<f64>,
    pub zeff: Vec<f64>,
    /// Tilt `J = V_eff'` at each node, when known.
    pub tilts: Option<Vec<f64>>,
    /// Static susceptibility at each node, when known.
    pub chi: Option<Vec<f64>>,
    pub provenance: Provenance,
    veff_spline: CubicSpline,
    zeff_spline: CubicSpline,
}

/// Convexity tolerance on second divided differences.
pub const CONVEXITY_TOL: f64 = 1e-8;

impl EffectiveTable {
    /// Assemble a table. With known end slopes the `V_eff` spline is clamped to
    /// them, otherwise natural; `Z_eff` uses a natural spline.
    pub fn new(
        nodes: Vec<f64>,
        veff: Vec<f64>,
        zeff: Vec<f64>,
        tilts: Option<Vec<f64>>,
        chi: Option<Vec<f64>>,
        provenance: Provenance,
    ) -> Result<Self> {
        let n = nodes.len();
        if veff.len() != n || zeff.len() != n {
            return Err(Error::InvalidArgument("table columns differ in length".into()));
        }
        let end = match &tilts {
            Some(j) if j.len() == n => EndCondition::Clamped {
                left: j[0],
                right: j[n - 1],
            },
            Some(_) => return Err(Error::InvalidArgument("tilt column has wrong length".into())),
            None => EndCondition::Natural,
        };
        let veff_spline = CubicSpline::new(&nodes, &veff, end)?;
        let zeff_spline = CubicSpline::new(&nodes, &zeff, EndCondition::Natural)?;
        Ok(EffectiveTable {
            nodes,
            veff,
            zeff,
            tilts,
            chi,
            provenance,
            veff_spline,
            zeff_spline,
        })
    }

    pub fn lo(&self) -> f64 {
        self.nodes[0]
    }

    pub fn hi(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo() && x <= self.hi()
    }

    pub fn eval(&self, x: f64, curve: Curve, deriv: u8) -> Result<f64> {
        if deriv > 2 {
            return Err(Error::InvalidArgument(format!(
                "derivative order must be 0, 1 or 2, got {deriv}"
            )));
        }
        match curve {
            Curve::Veff => self.veff_spline.eval(x, deriv),
            Curve::Zeff => self.zeff_spline.eval(x, deriv),
        }
    }

    /// Second divided differences of `veff` (non-uniform nodes allowed).
    pub fn second_differences(&self) -> Vec<f64> {
        let (x, v) = (&self.nodes, &self.veff);
        (1..x.len() - 1)
            .map(|i| {
                let s1 = (v[i + 1] - v[i]) / (x[i + 1] - x[i]);
                let s0 = (v[i] - v[i - 1]) / (x[i] - x[i - 1]);
                2.0 * (s1 - s0) / (x[i + 1] - x[i - 1])
            })
            .collect()
    }

    /// Curvature column for export: `1/chi` where known, else the spline's.
    pub fn curvature_column(&self) -> Vec<f64> {
        match &self.chi {
            Some(chi) => chi.iter().map(|c| 1.0 / c).collect(),
            None => self
                .nodes
                .iter()
                .map(|&x| self.veff_spline.eval(x, 2).unwrap_or(f64::NAN))
                .collect(),
        }
    }

    /// Check convexity, positivity of `Z_eff` and, if requested, parity.
    pub fn check_invariants(&self, even: bool) -> Result<()> {
        if let Some((i, d)) = self
            .second_differences()
            .into_iter()
            .enumerate()
            .find(|(_, d)| *d < -CONVEXITY_TOL)
        {
            return Err(Error::NumericalFailure(format!(
                "V_eff is not convex near x = {} (second difference {d:.3e})",
                self.nodes[i + 1]
            )));
        }
        if let Some(z) = self.zeff.iter().find(|z| !(**z > 0.0)) {
            return Err(Error::NumericalFailure(format!("Z_eff = {z} is not positive")));
        }
        if even {
            let n = self.nodes.len();
            for i in 0..n / 2 {
                let j = n - 1 - i;
                if (self.nodes[i] + self.nodes[j]).abs() > 1e-12 {
                    break;
                }
                let dv = (self.veff[i] - self.veff[j]).abs();
                let dz = (self.zeff[i] - self.zeff[j]).abs();
                if dv > 1e-6 || dz > 1e-6 {
                    return Err(Error::NumericalFailure(format!(
                        "effective table not even at |x| = {}: dV = {dv:.3e}, dZ = {dz:.3e}",
                        self.nodes[j]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn min_veff(&self) -> (f64, f64) {
        self.nodes.iter().zip(&self.veff).fold(
            (f64::NAN, f64::INFINITY),
            |(bx, bv), (&x, &v)| {
                if v < bv {
                    (x, v)
                } else {
                    (bx, bv)
                }
            },
        )
    }
}

/// Tabulate `V_eff` and `Z_eff` on `n_nodes` uniform nodes over `[x_lo, x_hi]`.
///
/// Each node is solved for its own tilt, warm-started from the previous node
/// with `J_next ~ J + dx / chi`, so node values are exact Legendre pairs.
pub fn build_effective_table(
    pot: &Potential,
    grid: &Grid,
    x_lo: f64,
    x_hi: f64,
    n_nodes: usize,
) -> Result<EffectiveTable> {
    if n_nodes < 5 {
        return Err(Error::InvalidArgument(format!(
            "effective table needs at least 5 nodes, got {n_nodes}"
        )));
    }
    if !(x_lo < x_hi) {
        return Err(Error::InvalidArgument(format!("table range [{x_lo}, {x_hi}] is empty")));
    }
    let margin = 5.0 * ground_width(pot, grid)?;
    for &x in &[x_lo, x_hi] {
        if !(x > grid.xmin() + margin && x < grid.xmax() - margin) {
            return Err(Error::Range {
                target: x,
                reason: format!(
                    "table end must lie inside [{}, {}]",
                    grid.xmin() + margin,
                    grid.xmax() - margin
                ),
            });
        }
    }
    let step = (x_hi - x_lo) / (n_nodes - 1) as f64;
    let nodes: Vec<f64> = (0..n_nodes)
        .map(|k| if k + 1 == n_nodes { x_hi } else { x_lo + k as f64 * step })
        .collect();
    // Start from the node nearest the origin, where J = 0 is a good guess for
    // symmetric wells, and sweep outwards in both directions.
    let start = nodes
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut results: Vec<Option<TiltedGroundResult>> = vec![None; n_nodes];
    let first = solve_tilt_from(pot, grid, nodes[start], 0.0)?;
    results[start] = Some(first);
    for order in [
        (start + 1..n_nodes).collect::<Vec<_>>(),
        (0..start).rev().collect::<Vec<_>>(),
    ] {
        let mut prev = first;
        let mut prev_x = nodes[start];
        for k in order {
            let guess = prev.tilt + (nodes[k] - prev_x) / prev.chi;
            let r = solve_tilt_from(pot, grid, nodes[k], guess)
                .map_err(|e| e.context(format!("effective table node x = {}", nodes[k])))?;
            results[k] = Some(r);
            prev = r;
            prev_x = nodes[k];
        }
    }
    let results: Vec<TiltedGroundResult> = results.into_iter().map(|r| r.expect("all nodes solved")).collect();

    // First-order Legendre correction for the residual offset x_mean - x_k.
    let veff = results.iter().zip(&nodes).map(|(r, &x)| r.e0 + r.tilt * x).collect();
    let zeff = results.iter().map(|r| r.zeff()).collect();
    let tilts = results.iter().map(|r| r.tilt).collect();
    let chi = results.iter().map(|r| r.chi).collect();
    let table = EffectiveTable::new(nodes, veff, zeff, Some(tilts), Some(chi), Provenance::Spectral)?;
    let symmetric_nodes = (x_lo + x_hi).abs() <= 1e-12 * x_hi.abs().max(1.0);
    table.check_invariants(pot.is_even() && symmetric_nodes)?;
    Ok(table)
}

pub fn eval_effective(table: &EffectiveTable, x: f64, curve: Curve, deriv: u8) -> Result<f64> {
    table.eval(x, curve, deriv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic_setup(omega: f64) -> (Potential, Grid) {
        (
            Potential::harmonic(omega).unwrap(),
            // Wide enough for the 32 states of the converged spectral sums.
            Grid::new(-14.0, 14.0, 5601).unwrap(),
        )
    }

    #[test]
    fn shifted_oscillator() {
        let (p, g) = harmonic_setup(1.0);
        let r = tilted_ground(&p, &g, 0.3).unwrap();
        assert!((r.e0 - 0.455).abs() < 1e-4);
        assert!((r.x_mean - 0.3).abs() < 1e-4);
        assert!((r.veff() - (0.5 + 0.045)).abs() < 1e-4);
        assert!(r.chi > 0.0 && r.chi3 > 0.0);
    }

    #[test]
    fn symmetric_potential_has_zero_mean_without_tilt() {
        let p = Potential::double_well(6.0).unwrap();
        let g = Grid::new(-8.0, 8.0, 2001).unwrap();
        let r = tilted_ground(&p, &g, 0.0).unwrap();
        assert!(r.x_mean.abs() < 1e-10);
        let s = solve_tilt_for_mean(&p, &g, 0.0).unwrap();
        assert!(s.tilt.abs() < 1e-10);
    }

    #[test]
    fn harmonic_inversion() {
        let (p, g) = harmonic_setup(1.0);
        let r = solve_tilt_for_mean(&p, &g, 0.7).unwrap();
        assert!((r.tilt - 0.7).abs() < 1e-6, "J = {}", r.tilt);
        assert!((r.x_mean - 0.7).abs() < MEAN_TOL_CONTRACT);
    }

    #[test]
    fn unreachable_target() {
        let (p, g) = harmonic_setup(1.0);
        assert!(matches!(solve_tilt_for_mean(&p, &g, 13.0), Err(Error::Range { .. })));
    }

    #[test]
    fn strong_tilt_clips() {
        let p = Potential::harmonic(1.0).unwrap();
        let g = Grid::new(-4.0, 4.0, 801).unwrap();
        assert!(matches!(tilted_ground(&p, &g, 3.5), Err(Error::GridClipping { .. })));
    }

    #[test]
    fn harmonic_table_is_gaussian() {
        let (p, g) = harmonic_setup(1.0);
        let t = build_effective_table(&p, &g, -1.0, 1.0, 21).unwrap();
        for (i, &x) in t.nodes.iter().enumerate() {
            assert!((t.veff[i] - (0.5 * x * x + 0.5)).abs() < 1e-4);
            assert!((t.zeff[i] - 1.0).abs() < 1e-4);
        }
        assert!((eval_effective(&t, 0.5, Curve::Veff, 1).unwrap() - 0.5).abs() < 1e-3);
        assert_eq!(eval_effective(&t, t.nodes[3], Curve::Veff, 0).unwrap(), t.veff[3]);
        assert!(matches!(
            eval_effective(&t, 1.01, Curve::Veff, 0),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn convexity_violation_is_reported() {
        let nodes: Vec<f64> = (0..7).map(|i| i as f64 * 0.1).collect();
        let veff: Vec<f64> = nodes.iter().map(|x| -x * x).collect();
        let t = EffectiveTable::new(nodes, veff, vec![1.0; 7], None, None, Provenance::Rgflow).unwrap();
        assert!(t.check_invariants(false).is_err());
    }
}
