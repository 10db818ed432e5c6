use std::f64::consts::PI;
use std::path::Path;

use crate::classical::{integrate_trajectory_strided, EAModel, Mode, Trajectory};
use crate::effective::{build_effective_table, Curve, EffectiveTable, Provenance};
use crate::error::{Error, Result};
use crate::export::{Manifest, OutputDir, Summary, Table};
use crate::potential::Potential;
use crate::rgflow::{integrate_flow, rg_effective_potential, Calibration, FlowOptions};
use crate::spectral::{assemble_hamiltonian, lowest_eigenpairs};
use crate::tdse::{dominant_period, gaussian_packet, period_of, propagate, ObservableSeries};

use super::compare::{compare_phase_space, max_deviation_ratio, PhaseCurve};
use super::config::{Backend, ScenarioConfig, ScenarioName, Width, WidthRule};

/// One classical curve and its comparison against the packet.
#[derive(Debug, Clone)]
pub struct CurveRun {
    pub mode: Mode,
    pub trajectory: Trajectory,
    pub period: Option<f64>,
    pub d: f64,
    pub d_normalized: f64,
    pub max_dev: f64,
    pub amplitude: f64,
}

impl CurveRun {
    pub fn file_name(&self) -> &'static str {
        match self.mode {
            Mode::Bare => "ehrenfest.csv",
            Mode::EaZ1 => "ea_z1.csv",
            Mode::EaZ => "ea_z.csv",
        }
    }

    pub fn max_dev_ratio(&self) -> f64 {
        self.max_dev / self.amplitude
    }
}

/// Everything a scenario computes, before anything is written.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub config: ScenarioConfig,
    pub table: Option<EffectiveTable>,
    pub omega_w: f64,
    pub series: ObservableSeries,
    pub wp_period: Option<f64>,
    pub window: (f64, f64),
    pub curves: Vec<CurveRun>,
    /// `(E_0, E_1)` of the untilted Hamiltonian, when a table was built.
    pub levels: Option<(f64, f64)>,
    pub steps: usize,
}

impl ScenarioRun {
    pub fn curve(&self, mode: Mode) -> Option<&CurveRun> {
        self.curves.iter().find(|c| c.mode == mode)
    }

    pub fn summary(&self) -> Summary {
        let cfg = &self.config;
        let mut s = Summary::new();
        s.text("scenario", cfg.name.label());
        match &cfg.potential {
            Some(p) => s.text("potential", serde_json::to_string(p).unwrap_or_default()),
            None => s.number("lambda", cfg.lambda),
        };
        s.number("x0", cfg.packet.x0)
            .number("p0", cfg.packet.p0)
            .number("omega_w", self.omega_w)
            .text(
                "backend",
                match cfg.backend {
                    Backend::Spectral => "spectral",
                    Backend::Rgflow => "rgflow",
                },
            )
            .number("dt", cfg.times.dt)
            .number("t_end", cfg.times.t_end)
            .text("tdse_steps", self.steps);
        let (dn, de) = self.series.drifts();
        s.number("wp.norm_drift", dn)
            .number("wp.norm_drift_per_1e4_steps", dn * 1e4 / self.steps.max(1) as f64)
            .number("wp.energy_drift", de)
            .number("wp.energy", self.series.energy[0]);
        if let Some(p) = self.wp_period {
            s.number("wp.period", p);
        }
        s.number("window.t0", self.window.0).number("window.t1", self.window.1);
        if let Some((e0, e1)) = self.levels {
            s.number("spectrum.e0", e0)
                .number("spectrum.e1", e1)
                .number("spectrum.gap", e1 - e0)
                .number("spectrum.gap_period", 2.0 * PI / (e1 - e0));
        }
        if let Some(t) = &self.table {
            s.number("table.veff_min", t.min_veff().1)
                .number("table.lo", t.lo())
                .number("table.hi", t.hi())
                .text("table.nodes", t.nodes.len());
        }
        for c in &self.curves {
            let l = c.mode.label();
            if let Some(p) = c.period {
                s.number(&format!("{l}.period"), p);
            }
            s.number(&format!("{l}.d"), c.d)
                .number(&format!("{l}.d_normalized"), c.d_normalized)
                .number(&format!("{l}.max_dev"), c.max_dev)
                .number(&format!("{l}.amplitude"), c.amplitude)
                .number(&format!("{l}.max_dev_ratio"), c.max_dev_ratio())
                .number(&format!("{l}.energy_drift"), c.trajectory.energy_drift());
        }
        if let (Some(z), Some(z1)) = (self.curve(Mode::EaZ), self.curve(Mode::EaZ1)) {
            s.text("ordering.d", pass(z.d < z1.d));
            if let (Some(pz), Some(pz1), Some(pw)) = (z.period, z1.period, self.wp_period) {
                s.text("ordering.period", pass((pz - pw).abs() < (pz1 - pw).abs()));
            }
        }
        s
    }

    /// Write every curve, the summary and the manifest into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Manifest> {
        let mut out = OutputDir::create(dir)?;
        let s = &self.series;
        out.write_csv(
            "wp.csv",
            &Table::new()
                .with("t", &s.times)
                .with("x_mean", &s.x_mean)
                .with("p_mean", &s.p_mean)
                .with("energy", &s.energy)
                .with("norm", &s.norm),
        )?;
        for c in &self.curves {
            out.write_csv(c.file_name(), &trajectory_table(&c.trajectory))?;
        }
        if let Some(t) = &self.table {
            out.write_csv("veff.csv", &effective_table_columns(t))?;
        }
        out.write_summary("summary.txt", &self.summary())?;
        out.finish()?;
        Ok(out.manifest().clone())
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

pub fn trajectory_table(t: &Trajectory) -> Table {
    Table::new()
        .with("t", &t.times)
        .with("x", &t.x)
        .with("v", &t.v)
        .with("energy", &t.energy)
}

pub fn effective_table_columns(t: &EffectiveTable) -> Table {
    let mut table = Table::new()
        .with("x", &t.nodes)
        .with("veff", &t.veff)
        .with("zeff", &t.zeff)
        .with("veff_curvature", &t.curvature_column());
    if let Some(j) = &t.tilts {
        table = table.with("tilt", j);
    }
    table
}

/// Effective table for the configured backend. Z_eff always comes from the
/// spectral route.
pub fn effective_table_for(cfg: &ScenarioConfig, pot: &Potential) -> Result<EffectiveTable> {
    let tab = cfg.grids.table;
    let spectral = build_effective_table(pot, &cfg.grids.spectral, -tab.half_width, tab.half_width, tab.nodes)?;
    match cfg.backend {
        Backend::Spectral => Ok(spectral),
        Backend::Rgflow => {
            let opts = FlowOptions {
                stepper: cfg.flow.stepper,
                ..FlowOptions::default()
            };
            let ir = integrate_flow(pot, &cfg.grids.flow, cfg.flow.k_uv, cfg.flow.k_ir, &opts)?;
            let e0 = spectral.min_veff().1;
            let rg = rg_effective_potential(&ir, Calibration::ZeroPoint { e0 })?;
            let veff = spectral
                .nodes
                .iter()
                .map(|&x| rg.eval(x, Curve::Veff, 0))
                .collect::<Result<Vec<_>>>()?;
            let tilts = spectral
                .nodes
                .iter()
                .map(|&x| rg.eval(x, Curve::Veff, 1))
                .collect::<Result<Vec<_>>>()?;
            EffectiveTable::new(
                spectral.nodes.clone(),
                veff,
                spectral.zeff.clone(),
                Some(tilts),
                None,
                Provenance::Rgflow,
            )
        }
    }
}

/// Resolve the packet width for `x0`.
pub fn resolve_width(width: Width, x0: f64, pot: &Potential, table: Option<&EffectiveTable>) -> Result<f64> {
    let curvature = match width {
        Width::Fixed(w) => return Ok(w),
        Width::Rule(WidthRule::FromVeffCurvature) => table
            .ok_or_else(|| Error::InvalidArgument("width from V_eff needs an effective table".into()))?
            .eval(x0, Curve::Veff, 2)?,
        Width::Rule(WidthRule::FromBareCurvature) => {
            let at = match pot.well_minimum() {
                Some(m) if m > 0.0 => m.copysign(x0),
                Some(m) => m,
                None => x0,
            };
            pot.curvature(at)
        }
    };
    if curvature > 0.0 {
        Ok(curvature.sqrt())
    } else {
        Err(Error::InvalidArgument(format!(
            "curvature {curvature} at the packet centre is not positive"
        )))
    }
}

/// Run all computations of a scenario.
pub fn compute_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    let label = cfg.name.label();
    compute(cfg).map_err(|e| e.context(format!("scenario {label}")))
}

fn compute(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    cfg.validate()?;
    let pot = cfg.potential()?;
    let needs_table =
        cfg.curves.iter().any(|m| *m != Mode::Bare) || cfg.packet.omega_w == Width::Rule(WidthRule::FromVeffCurvature);
    let table = if needs_table {
        Some(effective_table_for(cfg, &pot).map_err(|e| e.context("effective table"))?)
    } else {
        None
    };
    let levels = if needs_table {
        let h = assemble_hamiltonian(&cfg.grids.spectral, &pot, 0.0)?;
        let sol = lowest_eigenpairs(&h, 2)?;
        Some((sol.energies[0], sol.energies[1]))
    } else {
        None
    };

    let x0 = cfg.packet.x0;
    let omega_w = resolve_width(cfg.packet.omega_w, x0, &pot, table.as_ref())?;
    let t = cfg.times;
    let steps = (t.t_end / t.dt).round().max(1.0) as usize;
    let mut state = gaussian_packet(&cfg.grids.tdse, x0, omega_w, cfg.packet.p0)?;
    let series = propagate(&mut state, &pot, t.dt, steps, t.record_every).map_err(|e| e.context("wave packet"))?;
    let wp_period = dominant_period(&series).ok();
    let t_last = *series.times.last().expect("series has samples");
    let window = (0.0, wp_period.map_or(t_last, |p| (cfg.window_periods * p).min(t_last)));
    let step = t.dt * t.record_every as f64;
    let wp = PhaseCurve::from_series(&series)?;

    let mut curves = Vec::new();
    for &mode in &cfg.curves {
        let model = match mode {
            Mode::Bare => EAModel::bare(pot.clone()),
            _ => EAModel::effective(mode, table.clone().expect("table built for EA curves"), pot.clone())?,
        };
        let trajectory = integrate_trajectory_strided(&model, x0, cfg.packet.p0, t.dt, t_last, t.record_every)
            .map_err(|e| e.context(format!("{} trajectory", mode.label())))?;
        let curve = PhaseCurve::from_trajectory(&trajectory)?;
        let cmp = compare_phase_space(&wp, &curve, window, step)?;
        let (max_dev, amplitude) = max_deviation_ratio(&wp, &curve, window, step)?;
        curves.push(CurveRun {
            mode,
            period: period_of(&trajectory.times, &trajectory.x).ok(),
            trajectory,
            d: cmp.d,
            d_normalized: cmp.d_normalized,
            max_dev,
            amplitude,
        });
    }
    Ok(ScenarioRun {
        config: cfg.clone(),
        table,
        omega_w,
        series,
        wp_period,
        window,
        curves,
        levels,
        steps,
    })
}

/// Compute a scenario and write its artifacts to the configured directory.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    let run = compute_scenario(cfg)?;
    run.write(&cfg.output_dir)
        .map_err(|e| e.context(format!("writing scenario {}", cfg.name.label())))?;
    Ok(run)
}

/// Preset scenario with its output directory replaced.
pub fn preset_in(name: ScenarioName, dir: impl AsRef<Path>) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::preset(name);
    cfg.output_dir = dir.as_ref().to_path_buf();
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::harness::config::TableConfig;

    /// Harmonic well dressed as a custom scenario: V_eff is V shifted by
    /// omega/2 and Z = 1, so every classical curve follows the packet mean.
    fn harmonic_custom() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::preset(ScenarioName::Custom);
        cfg.potential = Some(Potential::harmonic(1.0).unwrap());
        let g = Grid::new(-14.0, 14.0, 2801).unwrap();
        cfg.grids.spectral = g;
        cfg.grids.tdse = g;
        cfg.grids.table = TableConfig {
            half_width: 1.2,
            nodes: 21,
        };
        cfg.packet.x0 = 0.5;
        cfg.packet.omega_w = Width::Fixed(1.0);
        cfg.times.t_end = 13.0;
        cfg.window_periods = 2.0;
        cfg.curves = vec![Mode::Bare, Mode::EaZ1, Mode::EaZ];
        cfg
    }

    #[test]
    fn harmonic_curves_coincide() {
        let run = compute_scenario(&harmonic_custom()).unwrap();
        assert!((run.wp_period.unwrap() - 2.0 * PI).abs() < 1e-3);
        for c in &run.curves {
            assert!(c.d < 1e-3, "{}: D = {}", c.mode.label(), c.d);
        }
    }

    #[test]
    fn written_files_match_the_manifest() {
        let run = compute_scenario(&harmonic_custom()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = run.write(dir.path()).unwrap();
        let mut names: Vec<&str> = manifest.files.iter().map(|f| f.file.as_str()).collect();
        names.sort();
        assert_eq!(
            names,
            ["ea_z.csv", "ea_z1.csv", "ehrenfest.csv", "summary.txt", "veff.csv", "wp.csv"]
        );
        let wp = manifest.files.iter().find(|f| f.file == "wp.csv").unwrap();
        assert_eq!(wp.rows, run.series.len());
        assert!(dir.path().join(crate::export::MANIFEST_NAME).exists());
        let summary = Summary::parse(&std::fs::read_to_string(dir.path().join("summary.txt")).unwrap());
        assert_eq!(summary.get("scenario"), Some("custom"));
        assert!(summary.get("ea_z.d").is_some());
    }

    #[test]
    fn errors_carry_the_scenario_name() {
        let mut cfg = harmonic_custom();
        cfg.packet.x0 = 13.5;
        cfg.grids.table.half_width = 13.8;
        let err = compute_scenario(&cfg).unwrap_err();
        assert!(err.to_string().starts_with("scenario custom"), "{err}");
    }
}
