//! Sharp-cutoff Wilsonian flow of the blocked potential in the local
//! potential approximation, in 0+1 dimensions:
//!
//! `dU_k/dk = -(1/2pi) ln(max(1 + U_k''/k^2, eps_floor))`
//!
//! integrated by the method of lines in `s = ln k` from `k_uv` down to `k_ir`.
//! The IR potential is an independent estimate of `V_eff`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::effective::{Curve, EffectiveTable, Provenance};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::ode::{self, IntegrateError, OdeSystem, StepControl, StepStats, Stepper};
use crate::potential::Potential;

pub const DEFAULT_K_UV: f64 = 100.0;
pub const DEFAULT_K_IR: f64 = 1e-3;
pub const DEFAULT_EPS_FLOOR: f64 = 1e-12;
/// Discrete convexity tolerance for the IR potential.
pub const IR_CONVEXITY_TOL: f64 = 1e-6;

/// Running potential `U_k` on a fixed coordinate grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowState {
    pub k: f64,
    pub u: Vec<f64>,
    pub grid: Grid,
    /// Number of node evaluations where the logarithm's argument was clamped.
    pub floor_hits: u64,
}

impl FlowState {
    /// UV initial condition `U_{k_uv} = V` on `grid`.
    pub fn initial(pot: &Potential, grid: &Grid, k_uv: f64) -> Result<Self> {
        if !(k_uv > 0.0 && k_uv.is_finite()) {
            return Err(Error::InvalidArgument(format!("k must be positive, got {k_uv}")));
        }
        if grid.len() < 5 {
            return Err(Error::InvalidArgument("flow grid needs at least 5 nodes".into()));
        }
        Ok(FlowState {
            k: k_uv,
            u: pot.sample(grid)?,
            grid: *grid,
            floor_hits: 0,
        })
    }

    /// Discrete `U''`, centred inside and one-sided second order at the ends.
    pub fn curvature(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.u.len()];
        curvature_into(&self.u, self.grid.dx(), &mut out);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    pub stepper: Stepper,
    pub control: StepControl,
    pub eps_floor: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            stepper: Stepper::Rosenbrock,
            control: StepControl::default(),
            eps_floor: DEFAULT_EPS_FLOOR,
        }
    }
}

// One-sided second-order stencil for the two end nodes.
const EDGE: [f64; 4] = [2.0, -5.0, 4.0, -1.0];

fn curvature_into(u: &[f64], dx: f64, out: &mut [f64]) {
    let n = u.len();
    let inv = 1.0 / (dx * dx);
    for i in 1..n - 1 {
        out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv;
    }
    out[0] = EDGE.iter().zip(u).map(|(c, v)| c * v).sum::<f64>() * inv;
    out[n - 1] = EDGE.iter().zip(u.iter().rev()).map(|(c, v)| c * v).sum::<f64>() * inv;
}

fn check_finite(u: &[f64], k: f64) -> Result<()> {
    match u.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NumericalFailure(format!(
            "U_k is not finite at node {i} (k = {k:.6e})"
        ))),
        None => Ok(()),
    }
}

/// `dU/dk` at every node; counts floor activations into `state.floor_hits`.
pub fn flow_rhs(state: &mut FlowState, eps_floor: f64) -> Result<Vec<f64>> {
    if !(eps_floor > 0.0 && eps_floor < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "eps_floor must lie in (0, 1), got {eps_floor}"
        )));
    }
    check_finite(&state.u, state.k)?;
    let mut d2 = state.curvature();
    let k2 = state.k * state.k;
    for v in d2.iter_mut() {
        let arg = 1.0 + *v / k2;
        if arg < eps_floor {
            state.floor_hits += 1;
        }
        *v = -arg.max(eps_floor).ln() / (2.0 * PI);
    }
    Ok(d2)
}

/// The flow in `s = ln k` as an ODE system.
struct LnkFlow {
    dx: f64,
    eps: f64,
    d2: Vec<f64>,
    floor_hits: u64,
}

impl OdeSystem for LnkFlow {
    fn dim(&self) -> usize {
        self.d2.len()
    }

    fn rhs(&mut self, s: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let k = s.exp();
        check_finite(y, k)?;
        curvature_into(y, self.dx, &mut self.d2);
        let k2 = k * k;
        for (out, c) in dy.iter_mut().zip(&self.d2) {
            let arg = 1.0 + c / k2;
            if arg < self.eps {
                self.floor_hits += 1;
            }
            *out = -k * arg.max(self.eps).ln() / (2.0 * PI);
        }
        Ok(())
    }

    fn bandwidth(&self) -> (usize, usize) {
        (3, 3)
    }

    fn jacobian(&mut self, s: f64, y: &[f64], set: &mut dyn FnMut(usize, usize, f64), dfdt: &mut [f64]) -> Result<()> {
        let n = y.len();
        let k = s.exp();
        let k2 = k * k;
        let inv = 1.0 / (self.dx * self.dx);
        curvature_into(y, self.dx, &mut self.d2);
        for i in 0..n {
            let c = self.d2[i];
            let arg = 1.0 + c / k2;
            // d f_i / d U''_i, and d f_i / ds at fixed U.
            let (g, ds) = if arg < self.eps {
                (0.0, -k * self.eps.ln() / (2.0 * PI))
            } else {
                (
                    -1.0 / (2.0 * PI * k * arg),
                    k * (-arg.ln() / (2.0 * PI) + c / (PI * k2 * arg)),
                )
            };
            dfdt[i] = ds;
            let g = g * inv;
            if i == 0 {
                for (j, w) in EDGE.iter().enumerate() {
                    set(0, j, g * w);
                }
            } else if i == n - 1 {
                for (j, w) in EDGE.iter().enumerate() {
                    set(i, i - j, g * w);
                }
            } else {
                set(i, i - 1, g);
                set(i, i, -2.0 * g);
                set(i, i + 1, g);
            }
        }
        Ok(())
    }
}

/// Integrate from `k_uv` down to `k_ir`.
pub fn integrate_flow(
    pot: &Potential,
    flow_grid: &Grid,
    k_uv: f64,
    k_ir: f64,
    opts: &FlowOptions,
) -> Result<FlowState> {
    integrate_flow_recorded(pot, flow_grid, k_uv, k_ir, opts, &[]).map(|(s, _, _)| s)
}

/// As [`integrate_flow`], also returning snapshots at the requested scales
/// (in descending order, ending with `k_ir`) and step statistics.
pub fn integrate_flow_recorded(
    pot: &Potential,
    flow_grid: &Grid,
    k_uv: f64,
    k_ir: f64,
    opts: &FlowOptions,
    record_k: &[f64],
) -> Result<(FlowState, Vec<FlowState>, StepStats)> {
    if !(k_uv > k_ir && k_ir > 0.0 && k_uv.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need k_uv > k_ir > 0, got k_uv = {k_uv}, k_ir = {k_ir}"
        )));
    }
    if !(opts.eps_floor > 0.0 && opts.eps_floor < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "eps_floor must lie in (0, 1), got {}",
            opts.eps_floor
        )));
    }
    let mut state = FlowState::initial(pot, flow_grid, k_uv)?;
    let mut sys = LnkFlow {
        dx: flow_grid.dx(),
        eps: opts.eps_floor,
        d2: vec![0.0; flow_grid.len()],
        floor_hits: 0,
    };
    let stops: Vec<f64> = record_k.iter().filter(|k| **k > 0.0).map(|k| k.ln()).collect();
    let mut snapshots = Vec::new();
    let mut y = state.u.clone();
    let result = ode::integrate(
        &mut sys,
        opts.stepper,
        k_uv.ln(),
        k_ir.ln(),
        &mut y,
        &opts.control,
        &stops,
        &mut |s, u| {
            snapshots.push((s.exp(), u.to_vec()));
            Ok(())
        },
    );
    let stats = match result {
        Ok(stats) => stats,
        Err(IntegrateError::Collapse(c)) => {
            return Err(Error::Stiffness {
                k: c.t.exp(),
                step: c.h,
            });
        }
        Err(IntegrateError::Other(e)) => return Err(e),
    };
    let hits = sys.floor_hits;
    let snapshots = snapshots
        .into_iter()
        .map(|(k, u)| FlowState {
            k,
            u,
            grid: *flow_grid,
            floor_hits: hits,
        })
        .collect();
    state.k = k_ir;
    state.u = y;
    state.floor_hits = hits;
    Ok((state, snapshots, stats))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Calibration {
    None,
    /// Shift so the minimum equals the given ground-state energy.
    ZeroPoint {
        e0: f64,
    },
}

/// Read the IR potential as an effective-potential table (`Z_eff = 1`).
pub fn rg_effective_potential(final_state: &FlowState, calibrate: Calibration) -> Result<EffectiveTable> {
    if final_state.k > 1e-3 * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "flow stopped at k = {}, needs k_ir <= 1e-3",
            final_state.k
        )));
    }
    check_finite(&final_state.u, final_state.k)?;
    let nodes = final_state.grid.nodes();
    let mut veff = final_state.u.clone();
    if let Calibration::ZeroPoint { e0 } = calibrate {
        let min = veff.iter().copied().fold(f64::INFINITY, f64::min);
        veff.iter_mut().for_each(|v| *v += e0 - min);
    }
    let n = nodes.len();
    let table = EffectiveTable::new(nodes, veff, vec![1.0; n], None, None, Provenance::Rgflow)?;
    if let Some((i, d)) = table
        .second_differences()
        .into_iter()
        .enumerate()
        .find(|(_, d)| *d < -IR_CONVEXITY_TOL)
    {
        return Err(Error::FlowQuality(format!(
            "IR potential not convex at x = {} (second difference {d:.3e}); floor hits {}",
            table.nodes[i + 1],
            final_state.floor_hits
        )));
    }
    Ok(table)
}

/// Deviations between an RG table and a spectral table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub x_lo: f64,
    pub x_hi: f64,
    pub points: usize,
    pub max_rel_curvature: f64,
    pub rms_rel_curvature: f64,
    pub x_at_max_rel_curvature: f64,
    /// After shifting both curves so their minima coincide.
    pub max_abs_veff: f64,
    pub rg_min: f64,
    pub spectral_min: f64,
}

impl DiscrepancyReport {
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "x_lo = {:.16e}", self.x_lo);
        let _ = writeln!(s, "x_hi = {:.16e}", self.x_hi);
        let _ = writeln!(s, "points = {}", self.points);
        let _ = writeln!(s, "max_rel_curvature = {:.16e}", self.max_rel_curvature);
        let _ = writeln!(s, "rms_rel_curvature = {:.16e}", self.rms_rel_curvature);
        let _ = writeln!(s, "x_at_max_rel_curvature = {:.16e}", self.x_at_max_rel_curvature);
        let _ = writeln!(s, "max_abs_veff = {:.16e}", self.max_abs_veff);
        let _ = writeln!(s, "rg_min = {:.16e}", self.rg_min);
        let _ = writeln!(s, "spectral_min = {:.16e}", self.spectral_min);
        s
    }
}

/// Compare on the spectral nodes inside the overlap of both tables, further
/// restricted to `|x| <= window` if given.
pub fn compare_to_spectral(rg: &EffectiveTable, sp: &EffectiveTable, window: Option<f64>) -> Result<DiscrepancyReport> {
    let mut lo = rg.lo().max(sp.lo());
    let mut hi = rg.hi().min(sp.hi());
    if let Some(w) = window {
        lo = lo.max(-w.abs());
        hi = hi.min(w.abs());
    }
    if !(lo < hi) {
        return Err(Error::Domain {
            x: rg.lo(),
            lo: sp.lo(),
            hi: sp.hi(),
        });
    }
    let sp_curv = sp.curvature_column();
    let (_, rg_min) = rg.min_veff();
    let (_, sp_min) = sp.min_veff();
    let (mut max_rel, mut sum_sq, mut x_max, mut max_abs, mut count) = (0.0f64, 0.0, f64::NAN, 0.0f64, 0usize);
    for (i, &x) in sp.nodes.iter().enumerate() {
        if x < lo - 1e-12 || x > hi + 1e-12 {
            continue;
        }
        let x = x.clamp(rg.lo(), rg.hi());
        let c_sp = sp_curv[i];
        let c_rg = rg.eval(x, Curve::Veff, 2)?;
        let rel = if c_rg == c_sp {
            0.0
        } else {
            ((c_rg - c_sp) / c_sp).abs()
        };
        if rel > max_rel || x_max.is_nan() {
            max_rel = rel;
            x_max = x;
        }
        sum_sq += rel * rel;
        let dv = (rg.eval(x, Curve::Veff, 0)? - rg_min) - (sp.veff[i] - sp_min);
        max_abs = max_abs.max(dv.abs());
        count += 1;
    }
    if count == 0 {
        return Err(Error::InsufficientData("no spectral nodes inside the overlap".into()));
    }
    Ok(DiscrepancyReport {
        x_lo: lo,
        x_hi: hi,
        points: count,
        max_rel_curvature: max_rel,
        rms_rel_curvature: (sum_sq / count as f64).sqrt(),
        x_at_max_rel_curvature: x_max,
        max_abs_veff: max_abs,
        rg_min,
        spectral_min: sp_min,
    })
}

/// Exact constant shift of a harmonic potential between two sharp cutoffs.
pub fn harmonic_shift(omega: f64, k_uv: f64, k_ir: f64) -> f64 {
    let f = |k: f64| (k * (1.0 + omega * omega / (k * k)).ln() + 2.0 * omega * (k / omega).atan()) / (2.0 * PI);
    f(k_uv) - f(k_ir)
}
