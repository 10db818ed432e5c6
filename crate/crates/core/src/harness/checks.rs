use std::cell::OnceCell;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classical::{euler_lagrange_residual, integrate_trajectory, integrate_trajectory_with, EAModel, Mode};
use crate::effective::{build_effective_table, solve_tilt_for_mean, Curve, EffectiveTable};
use crate::error::{Error, Result};
use crate::grid::{make_grid, Grid};
use crate::potential::Potential;
use crate::rgflow::{
    compare_to_spectral, harmonic_shift, integrate_flow, rg_effective_potential, Calibration, FlowOptions,
};
use crate::spectral::{assemble_hamiltonian, lowest_eigenpairs};
use crate::tdse::{ehrenfest_residuals, gaussian_packet, propagate};

use super::config::{ScenarioConfig, ScenarioName};
use super::scenario::{compute_scenario, ScenarioRun};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckLevel {
    Fast,
    Full,
}

/// Deliberate defects for testing the checks themselves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Reverse the sign of the classical acceleration.
    FlipEomSign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub criterion: u8,
    pub name: String,
    pub passed: bool,
    pub runtime_s: f64,
    /// Measured values as `key=value` pairs.
    pub measured: Vec<(String, String)>,
    pub error: Option<String>,
}

impl CheckEntry {
    pub fn line(&self) -> String {
        let mut s = format!(
            "criterion={} name={} status={} runtime_s={:.3}",
            self.criterion,
            self.name,
            if self.passed { "pass" } else { "fail" },
            self.runtime_s
        );
        for (k, v) in &self.measured {
            let _ = write!(s, " {k}={v}");
        }
        if let Some(e) = &self.error {
            let _ = write!(s, " error={e:?}");
        }
        s
    }

    pub fn value(&self, key: &str) -> Option<f64> {
        self.measured
            .iter()
            .find(|(k, _)| k == key)
            .and_then(|(_, v)| v.parse().ok())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub level: CheckLevel,
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn render(&self) -> String {
        let mut s: String = self.entries.iter().map(|e| e.line() + "\n").collect();
        let _ = writeln!(
            s,
            "overall={} passed={} total={}",
            if self.passed() { "pass" } else { "fail" },
            self.entries.iter().filter(|e| e.passed).count(),
            self.entries.len()
        );
        s
    }
}

/// Collected measurements of one criterion.
#[derive(Default)]
struct Outcome {
    ok: bool,
    measured: Vec<(String, String)>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            ok: true,
            measured: Vec::new(),
        }
    }

    fn put(&mut self, key: &str, v: f64) -> &mut Self {
        self.measured.push((key.to_string(), format!("{v:.6e}")));
        self
    }

    fn put_text(&mut self, key: &str, v: impl ToString) -> &mut Self {
        self.measured.push((key.to_string(), v.to_string()));
        self
    }

    /// Record `v` and require `v < limit`.
    fn below(&mut self, key: &str, v: f64, limit: f64) -> &mut Self {
        self.put(key, v);
        self.ok &= v < limit;
        self
    }

    fn require(&mut self, key: &str, ok: bool) -> &mut Self {
        self.put_text(key, if ok { "yes" } else { "no" });
        self.ok &= ok;
        self
    }
}

pub const NAMES: [&str; 9] = [
    "harmonic_oracles",
    "legendre_consistency",
    "convexity_symmetry",
    "gap_identity",
    "figure1_ordering",
    "figure2_agreement",
    "conservation",
    "rg_cross_validation",
    "convergence",
];

/// Lazily built inputs shared between criteria.
pub struct CheckContext {
    fault: Option<Fault>,
    table: OnceCell<std::result::Result<EffectiveTable, String>>,
    fig1: OnceCell<std::result::Result<ScenarioRun, String>>,
    fig2: OnceCell<std::result::Result<ScenarioRun, String>>,
}

impl CheckContext {
    pub fn new(fault: Option<Fault>) -> Self {
        CheckContext {
            fault,
            table: OnceCell::new(),
            fig1: OnceCell::new(),
            fig2: OnceCell::new(),
        }
    }

    fn fig1(&self) -> Result<&ScenarioRun> {
        self.fig1
            .get_or_init(|| compute_scenario(&ScenarioConfig::preset(ScenarioName::Fig1)).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::NumericalFailure(e.clone()))
    }

    fn fig2(&self) -> Result<&ScenarioRun> {
        self.fig2
            .get_or_init(|| compute_scenario(&ScenarioConfig::preset(ScenarioName::Fig2)).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::NumericalFailure(e.clone()))
    }

    /// The fig1 effective table (shared with the scenario when it ran).
    fn table(&self) -> Result<&EffectiveTable> {
        if let Some(Ok(run)) = self.fig1.get() {
            if let Some(t) = &run.table {
                return Ok(t);
            }
        }
        self.table
            .get_or_init(|| {
                let cfg = ScenarioConfig::preset(ScenarioName::Fig1);
                let pot = cfg.potential().map_err(|e| e.to_string())?;
                let tab = cfg.grids.table;
                build_effective_table(&pot, &cfg.grids.spectral, -tab.half_width, tab.half_width, tab.nodes)
                    .map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| Error::NumericalFailure(e.clone()))
    }

    /// Run one criterion by number.
    pub fn run(&self, criterion: u8, level: CheckLevel) -> CheckEntry {
        let start = Instant::now();
        let result = match criterion {
            1 => harmonic_oracles(),
            2 => legendre_consistency(self),
            3 => convexity_symmetry(self),
            4 => gap_identity(self),
            5 => figure1_ordering(self),
            6 => figure2_agreement(self),
            7 => conservation(self, level),
            8 => rg_cross_validation(self),
            9 => convergence(),
            _ => Err(Error::InvalidArgument(format!("no criterion {criterion}"))),
        };
        let runtime_s = start.elapsed().as_secs_f64();
        let name = NAMES
            .get(criterion as usize - 1)
            .copied()
            .unwrap_or("unknown")
            .to_string();
        let mut entry = match result {
            Ok(o) => CheckEntry {
                criterion,
                name,
                passed: o.ok,
                runtime_s,
                measured: o.measured,
                error: None,
            },
            Err(e) => CheckEntry {
                criterion,
                name,
                passed: false,
                runtime_s,
                measured: Vec::new(),
                error: Some(e.to_string()),
            },
        };
        // Runtime budgets, where the criterion states one.
        let budget = match criterion {
            1 => Some(30.0),
            2 => Some(60.0),
            5 => Some(300.0),
            _ => None,
        };
        if let Some(b) = budget {
            entry.measured.push(("runtime_budget_s".into(), format!("{b}")));
            entry.passed &= runtime_s <= b;
        }
        entry
    }
}

/// Criteria run at each level.
pub fn criteria(level: CheckLevel) -> Vec<u8> {
    match level {
        CheckLevel::Fast => vec![1, 7, 9],
        CheckLevel::Full => (1..=9).collect(),
    }
}

pub fn run_checks(level: CheckLevel, fault: Option<Fault>) -> CheckReport {
    let ctx = CheckContext::new(fault);
    CheckReport {
        level,
        entries: criteria(level).into_iter().map(|c| ctx.run(c, level)).collect(),
    }
}

fn harmonic_oracles() -> Result<Outcome> {
    let mut o = Outcome::new();
    for omega in [0.5, 1.0, 2.0] {
        let pot = Potential::harmonic(omega)?;
        let half = (14.0 / omega.sqrt()).max(10.0);
        let n = (2.0 * half / 0.005).round() as usize + 1;
        let grid = make_grid(-half, half, n)?;
        let table = build_effective_table(&pot, &grid, -1.0, 1.0, 11)?;
        let verr = table.nodes.iter().zip(&table.veff).fold(0.0f64, |m, (x, v)| {
            m.max((v - (0.5 * omega * omega * x * x + 0.5 * omega)).abs())
        });
        let zerr = table.zeff.iter().fold(0.0f64, |m, z| m.max((z - 1.0).abs()));
        o.below(&format!("w{omega}.veff_err"), verr, 1e-4);
        o.below(&format!("w{omega}.zeff_err"), zerr, 1e-4);

        let flow_grid = make_grid(-4.0, 4.0, 401)?;
        let ir = integrate_flow(&pot, &flow_grid, 100.0, 1e-3, &FlowOptions::default())?;
        let mid = ir.u[200];
        let shape = flow_grid
            .nodes()
            .iter()
            .zip(&ir.u)
            .filter(|(x, _)| x.abs() <= 2.0)
            .fold(0.0f64, |m, (x, u)| m.max((u - mid - 0.5 * omega * omega * x * x).abs()));
        let exact = harmonic_shift(omega, 100.0, 1e-3);
        o.below(&format!("w{omega}.rg_shape_err"), shape, 1e-6);
        o.put(&format!("w{omega}.rg_shift"), mid);
        o.put(&format!("w{omega}.rg_shift_minus_half_omega"), mid - 0.5 * omega);
        o.below(
            &format!("w{omega}.rg_shift_vs_cutoff_oracle"),
            (mid - exact).abs(),
            1e-5,
        );
    }
    Ok(o)
}

/// Probe points strictly between table nodes.
fn probes(t: &EffectiveTable, count: usize) -> Vec<f64> {
    let (lo, hi) = (t.lo(), t.hi());
    (0..count)
        .map(|i| lo + (i as f64 + 0.5) * (hi - lo) / count as f64)
        .collect()
}

fn legendre_consistency(ctx: &CheckContext) -> Result<Outcome> {
    let t = ctx.table()?;
    let cfg = ScenarioConfig::preset(ScenarioName::Fig1);
    let pot = cfg.potential()?;
    let mut o = Outcome::new();
    // Node slopes against the solved tilts (the J = 0 node has no relative scale).
    let tilts = t
        .tilts
        .as_ref()
        .ok_or_else(|| Error::InsufficientData("table has no tilts".into()))?;
    let mut node_rel = 0.0f64;
    for (x, j) in t.nodes.iter().zip(tilts) {
        if j.abs() > 1e-6 {
            node_rel = node_rel.max(((t.eval(*x, Curve::Veff, 1)? - j) / j).abs());
        }
    }
    o.below("node_slope_rel_err", node_rel, 1e-5);
    let (mut slope_rel, mut curv_rel) = (0.0f64, 0.0f64);
    for x in probes(t, 20) {
        let r = solve_tilt_for_mean(&pot, &cfg.grids.spectral, x)?;
        slope_rel = slope_rel.max(((t.eval(x, Curve::Veff, 1)? - r.tilt) / r.tilt).abs());
        curv_rel = curv_rel.max(((t.eval(x, Curve::Veff, 2)? - r.curvature()) / r.curvature()).abs());
    }
    o.below("probe_slope_rel_err", slope_rel, 1e-5);
    o.below("probe_curvature_rel_err", curv_rel, 1e-3);
    o.put_text("probes", 20);
    Ok(o)
}

fn untilted_levels(grid: &Grid, pot: &Potential) -> Result<(f64, f64)> {
    let sol = lowest_eigenpairs(&assemble_hamiltonian(grid, pot, 0.0)?, 2)?;
    Ok((sol.energies[0], sol.energies[1]))
}

fn convexity_symmetry(ctx: &CheckContext) -> Result<Outcome> {
    let t = ctx.table()?;
    let cfg = ScenarioConfig::preset(ScenarioName::Fig1);
    let mut o = Outcome::new();
    let min_d2 = t.second_differences().into_iter().fold(f64::INFINITY, f64::min);
    o.put("min_second_difference", min_d2);
    o.require("invariants_hold", t.check_invariants(true).is_ok());
    let (e0, _) = untilted_levels(&cfg.grids.spectral, &cfg.potential()?)?;
    let (xmin, vmin) = t.min_veff();
    o.put("argmin", xmin).put("e0", e0);
    o.below("min_veff_minus_e0", (vmin - e0).abs(), 1e-8);
    Ok(o)
}

fn gap_identity(ctx: &CheckContext) -> Result<Outcome> {
    let t = ctx.table()?;
    let cfg = ScenarioConfig::preset(ScenarioName::Fig1);
    let (e0, e1) = untilted_levels(&cfg.grids.spectral, &cfg.potential()?)?;
    let gap = e1 - e0;
    let i0 = t
        .nodes
        .iter()
        .position(|x| x.abs() < 1e-12)
        .ok_or_else(|| Error::InsufficientData("table has no node at x = 0".into()))?;
    let curv = t.curvature_column()[i0];
    let z = t.zeff[i0];
    let with_z = ((curv / z).sqrt() / gap - 1.0).abs();
    let without = (curv.sqrt() / gap - 1.0).abs();
    let mut o = Outcome::new();
    o.put("gap", gap).put("veff_curvature_0", curv).put("zeff_0", z);
    o.below("rel_err_with_z", with_z, 0.05);
    o.put("rel_err_without_z", without);
    o.require("z_improves", with_z < without);
    Ok(o)
}

fn figure1_ordering(ctx: &CheckContext) -> Result<Outcome> {
    let run = ctx.fig1()?;
    let z = run
        .curve(Mode::EaZ)
        .ok_or_else(|| Error::InsufficientData("no ea_z curve".into()))?;
    let z1 = run
        .curve(Mode::EaZ1)
        .ok_or_else(|| Error::InsufficientData("no ea_z1 curve".into()))?;
    let tw = run
        .wp_period
        .ok_or_else(|| Error::InsufficientData("no packet period".into()))?;
    let (pz, pz1) = match (z.period, z1.period) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InsufficientData("classical periods unavailable".into())),
    };
    let mut o = Outcome::new();
    o.put("omega_w", run.omega_w)
        .put("t_wp", tw)
        .put("t_ea_z", pz)
        .put("t_ea_z1", pz1)
        .put("d_ea_z", z.d)
        .put("d_ea_z1", z1.d)
        .put("window_t1", run.window.1);
    o.require("window_covers_3_periods", (run.window.1 - 3.0 * tw).abs() < 1e-9);
    o.require("d_ordering", z.d < z1.d);
    o.require("period_ordering", (pz - tw).abs() < (pz1 - tw).abs());
    Ok(o)
}

fn figure2_agreement(ctx: &CheckContext) -> Result<Outcome> {
    let run = ctx.fig2()?;
    let bare = run
        .curve(Mode::Bare)
        .ok_or_else(|| Error::InsufficientData("no bare curve".into()))?;
    let mut o = Outcome::new();
    o.put("x0", run.config.packet.x0)
        .put("omega_w", run.omega_w)
        .put("max_dev", bare.max_dev)
        .put("amplitude", bare.amplitude);
    if let Some(p) = run.wp_period {
        o.put("t_wp", p);
    }
    if let Some(p) = bare.period {
        o.put("t_bare", p);
    }
    o.below("max_dev_ratio", bare.max_dev_ratio(), 0.05);
    Ok(o)
}

fn conservation(ctx: &CheckContext, level: CheckLevel) -> Result<Outcome> {
    let mut o = Outcome::new();
    let pot = Potential::double_well(6.0)?;

    // Packet run on a fine grid for the Ehrenfest identities.
    let grid = make_grid(-8.0, 8.0, 8001)?;
    let mut state = gaussian_packet(&grid, 0.7, 1.0272, 0.0)?;
    let steps = 10_000;
    let series = propagate(&mut state, &pot, 1e-3, steps, 10)?;
    let (dn, de) = series.drifts();
    o.below("tdse_norm_drift_per_1e4_steps", dn * 1e4 / steps as f64, 1e-10);
    o.below("tdse_energy_drift", de, 1e-8);
    let (rx, rp) = ehrenfest_residuals(&series)?;
    o.below("ehrenfest_dx_dt", rx, 1e-5);
    o.below("ehrenfest_dp_dt", rp, 1e-5);
    if level == CheckLevel::Full {
        let run = ctx.fig1()?;
        let (dn, de) = run.series.drifts();
        o.below("fig1_norm_drift_per_1e4_steps", dn * 1e4 / run.steps as f64, 1e-10);
        o.below("fig1_energy_drift", de, 1e-8);
    }

    // Classical energy and the Euler–Lagrange residual of the Z-corrected EOM.
    let table = match level {
        CheckLevel::Full => ctx.table()?.clone(),
        CheckLevel::Fast => build_effective_table(&pot, &make_grid(-8.0, 8.0, 4001)?, -1.2, 1.2, 25)?,
    };
    let bare = EAModel::bare(pot.clone());
    let ea = EAModel::effective(Mode::EaZ, table, pot.clone())?;
    let (bare_run, ea_run) = match ctx.fault {
        Some(Fault::FlipEomSign) => (bare.clone().with_flipped_force(), ea.clone().with_flipped_force()),
        None => (bare.clone(), ea.clone()),
    };
    let tb = integrate_trajectory_with(&bare_run, 0.7, 0.0, 1e-3, 30.0, 1, f64::INFINITY)?;
    o.below("bare_energy_drift", tb.energy_drift(), 1e-7);
    match integrate_trajectory_with(&ea_run, 0.7, 0.0, 1e-3, 30.0, 1, f64::INFINITY) {
        Ok(te) => {
            o.below("ea_z_energy_drift", te.energy_drift(), 1e-7);
            o.below("ea_z_euler_lagrange_residual", euler_lagrange_residual(&ea, &te)?, 1e-5);
            o.below(
                "bare_euler_lagrange_residual",
                euler_lagrange_residual(&bare, &tb)?,
                1e-5,
            );
        }
        Err(e) => {
            o.put_text("ea_z_trajectory", format!("{:?}", e.to_string()));
            o.ok = false;
        }
    }
    if let Some(f) = ctx.fault {
        o.put_text("fault", format!("{f:?}"));
    }
    Ok(o)
}

fn rg_cross_validation(ctx: &CheckContext) -> Result<Outcome> {
    let cfg = ScenarioConfig::preset(ScenarioName::Fig1);
    let pot = cfg.potential()?;
    let ir = integrate_flow(
        &pot,
        &cfg.grids.flow,
        cfg.flow.k_uv,
        cfg.flow.k_ir,
        &FlowOptions::default(),
    )?;
    let rg = rg_effective_potential(&ir, Calibration::None)?;
    let report = compare_to_spectral(&rg, ctx.table()?, Some(1.0))?;
    let mut o = Outcome::new();
    o.put("rms_rel_curvature", report.rms_rel_curvature)
        .put("max_abs_veff_aligned", report.max_abs_veff)
        .put("rg_min", report.rg_min)
        .put("spectral_min", report.spectral_min)
        .put_text("floor_hits", ir.floor_hits);
    o.below("max_rel_curvature", report.max_rel_curvature, 0.2);
    Ok(o)
}

fn convergence() -> Result<Outcome> {
    let mut o = Outcome::new();

    // Spatial order of the spectral ground energy.
    let h = Potential::harmonic(1.0)?;
    let e = |n: usize| -> Result<f64> { Ok(untilted_levels(&make_grid(-10.0, 10.0, n)?, &h)?.0 - 0.5) };
    let ratio = e(401)? / e(801)?;
    o.put("spectral_ratio", ratio);
    o.require("spectral_ratio_in_3.5_4.5", (3.5..=4.5).contains(&ratio));

    // RK4 on the harmonic table.
    let nodes: Vec<f64> = (0..401).map(|i| -2.0 + 0.01 * i as f64).collect();
    let table = EffectiveTable::new(
        nodes.clone(),
        nodes.iter().map(|x| 0.5 * x * x).collect(),
        vec![1.0; nodes.len()],
        Some(nodes.clone()),
        None,
        crate::effective::Provenance::Spectral,
    )?;
    let model = EAModel::effective(Mode::EaZ1, table, h.clone())?;
    let err = |dt: f64| -> Result<f64> {
        Ok((integrate_trajectory(&model, 1.0, 0.0, dt, 5.0)?
            .x
            .last()
            .copied()
            .unwrap_or(f64::NAN)
            - 5f64.cos())
        .abs())
    };
    let ratio = err(0.05)? / err(0.025)?;
    o.put("rk4_ratio", ratio);
    o.require("rk4_ratio_near_16", (ratio - 16.0).abs() < 1.5);

    // Crank–Nicolson in time, by successive halvings on a fixed grid.
    let dw = Potential::double_well(6.0)?;
    let grid = make_grid(-8.0, 8.0, 2001)?;
    let x_at = |dt: f64| -> Result<f64> {
        let mut s = gaussian_packet(&grid, 0.7, 1.0272, 0.0)?;
        let n = (2.0 / dt).round() as usize;
        Ok(*propagate(&mut s, &dw, dt, n, n)?.x_mean.last().expect("final sample"))
    };
    let (a, b, c) = (x_at(0.02)?, x_at(0.01)?, x_at(0.005)?);
    let ratio = (a - b) / (b - c);
    o.put("cn_ratio", ratio);
    o.require("cn_ratio_in_3.5_4.5", (3.5..=4.5).contains(&ratio));

    // RG grid doubling on the interior 80 %.
    let coarse_grid = make_grid(-3.0, 3.0, 1201)?;
    let fine_grid = make_grid(-3.0, 3.0, 2401)?;
    let coarse = integrate_flow(&dw, &coarse_grid, 100.0, 1e-3, &FlowOptions::default())?;
    let fine = integrate_flow(&dw, &fine_grid, 100.0, 1e-3, &FlowOptions::default())?;
    let change = coarse_grid
        .nodes()
        .iter()
        .enumerate()
        .filter(|(_, x)| x.abs() <= 0.8 * 3.0)
        .fold(0.0f64, |m, (i, _)| m.max((coarse.u[i] - fine.u[2 * i]).abs()));
    o.below("rg_grid_doubling_change", change, 1e-5);
    Ok(o)
}
