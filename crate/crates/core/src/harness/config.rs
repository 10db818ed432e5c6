use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classical::Mode;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::ode::Stepper;
use crate::potential::Potential;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    Fig1,
    Fig2,
    Custom,
}

impl ScenarioName {
    pub fn label(self) -> &'static str {
        match self {
            ScenarioName::Fig1 => "fig1",
            ScenarioName::Fig2 => "fig2",
            ScenarioName::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthRule {
    /// `omega_w = sqrt(V_eff''(x0))`.
    FromVeffCurvature,
    /// `omega_w = sqrt(V''(x_min))` at the well minimum nearest `x0`.
    FromBareCurvature,
}

/// Packet width: a fixed `omega_w` or a rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Width {
    Fixed(f64),
    Rule(WidthRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketConfig {
    pub x0: f64,
    pub omega_w: Width,
    pub p0: f64,
}

/// Uniform nodes of the effective-potential table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableConfig {
    pub half_width: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grids {
    pub spectral: Grid,
    pub tdse: Grid,
    pub flow: Grid,
    pub table: TableConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Times {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Spectral,
    Rgflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub k_uv: f64,
    pub k_ir: f64,
    pub stepper: Stepper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: ScenarioName,
    pub lambda: f64,
    /// Overrides the double well built from `lambda` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Potential>,
    pub packet: PacketConfig,
    pub grids: Grids,
    pub times: Times,
    pub backend: Backend,
    pub flow: FlowConfig,
    /// Classical curves to integrate alongside the packet.
    pub curves: Vec<Mode>,
    /// Number of packet periods in the comparison window.
    pub window_periods: f64,
    pub output_dir: PathBuf,
}

fn grid(xmin: f64, xmax: f64, n: usize) -> Grid {
    Grid::new(xmin, xmax, n).expect("preset grids are valid")
}

impl ScenarioConfig {
    /// Built-in defaults for each scenario.
    pub fn preset(name: ScenarioName) -> Self {
        let flow = FlowConfig {
            k_uv: crate::rgflow::DEFAULT_K_UV,
            k_ir: crate::rgflow::DEFAULT_K_IR,
            stepper: Stepper::Rosenbrock,
        };
        match name {
            ScenarioName::Fig1 | ScenarioName::Custom => ScenarioConfig {
                name,
                lambda: 6.0,
                potential: None,
                packet: PacketConfig {
                    x0: 0.7,
                    omega_w: Width::Rule(WidthRule::FromVeffCurvature),
                    p0: 0.0,
                },
                grids: Grids {
                    spectral: grid(-8.0, 8.0, 4001),
                    tdse: grid(-8.0, 8.0, 4001),
                    flow: grid(-3.0, 3.0, 1201),
                    table: TableConfig {
                        half_width: 1.2,
                        nodes: 121,
                    },
                },
                times: Times {
                    dt: 1e-3,
                    t_end: 30.0,
                    record_every: 10,
                },
                backend: Backend::Spectral,
                flow,
                curves: vec![Mode::EaZ1, Mode::EaZ],
                window_periods: 3.0,
                output_dir: PathBuf::from(format!("out/{}", name.label())),
            },
            ScenarioName::Fig2 => ScenarioConfig {
                name,
                lambda: 0.1,
                potential: None,
                packet: PacketConfig {
                    x0: 60f64.sqrt() - 1.0,
                    omega_w: Width::Rule(WidthRule::FromBareCurvature),
                    p0: 0.0,
                },
                grids: Grids {
                    spectral: grid(-16.0, 16.0, 8001),
                    tdse: grid(-16.0, 16.0, 8001),
                    flow: grid(-16.0, 16.0, 1601),
                    table: TableConfig {
                        half_width: 1.2,
                        nodes: 121,
                    },
                },
                times: Times {
                    dt: 1e-3,
                    t_end: 16.0,
                    record_every: 10,
                },
                backend: Backend::Spectral,
                flow,
                curves: vec![Mode::Bare],
                window_periods: 3.0,
                output_dir: PathBuf::from("out/fig2"),
            },
        }
    }

    /// Resolve a JSON document over the preset named in it (`fig1` if none).
    pub fn from_json(text: &str) -> Result<Self> {
        let overlay: Value = serde_json::from_str(text)?;
        let name = match overlay.get("name") {
            Some(v) => serde_json::from_value(v.clone())?,
            None => ScenarioName::Fig1,
        };
        let mut base = serde_json::to_value(ScenarioConfig::preset(name))?;
        merge(&mut base, overlay);
        let cfg: ScenarioConfig = serde_json::from_value(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn potential(&self) -> Result<Potential> {
        match &self.potential {
            Some(p) => {
                p.validate()?;
                Ok(p.clone())
            }
            None => Potential::double_well(self.lambda),
        }
    }

    /// Cross-field consistency.
    pub fn validate(&self) -> Result<()> {
        self.potential()?;
        let t = &self.times;
        if !(t.dt > 0.0 && t.t_end > 0.0 && t.dt.is_finite() && t.t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need dt > 0 and t_end > 0, got dt = {}, t_end = {}",
                t.dt, t.t_end
            )));
        }
        if t.record_every == 0 {
            return Err(Error::InvalidArgument("record_every must be at least 1".into()));
        }
        let x0 = self.packet.x0;
        if !self.grids.tdse.contains(x0) {
            return Err(Error::Domain {
                x: x0,
                lo: self.grids.tdse.xmin(),
                hi: self.grids.tdse.xmax(),
            });
        }
        if let Width::Fixed(w) = self.packet.omega_w {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidArgument(format!("omega_w must be positive, got {w}")));
            }
        }
        let needs_table = self.curves.iter().any(|m| *m != Mode::Bare)
            || self.packet.omega_w == Width::Rule(WidthRule::FromVeffCurvature);
        if needs_table {
            let tab = &self.grids.table;
            if !(tab.half_width > x0.abs()) || tab.nodes < 4 {
                return Err(Error::InvalidArgument(format!(
                    "effective table [-{0}, {0}] with {1} nodes must contain x0 = {x0}",
                    tab.half_width, tab.nodes
                )));
            }
        }
        if !(self.window_periods > 0.0) {
            return Err(Error::InvalidArgument("window_periods must be positive".into()));
        }
        if !(self.flow.k_uv > self.flow.k_ir && self.flow.k_ir > 0.0) {
            return Err(Error::InvalidArgument("need k_uv > k_ir > 0".into()));
        }
        Ok(())
    }
}

/// Recursive object merge; non-object values replace.
fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip_and_validate() {
        for name in [ScenarioName::Fig1, ScenarioName::Fig2, ScenarioName::Custom] {
            let cfg = ScenarioConfig::preset(name);
            cfg.validate().unwrap();
            assert_eq!(ScenarioConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        }
    }

    #[test]
    fn partial_documents_overlay_the_preset() {
        let cfg = ScenarioConfig::from_json(r#"{"name": "fig2", "times": {"t_end": 9.0}, "packet": {"omega_w": 1.5}}"#)
            .unwrap();
        assert_eq!(cfg.lambda, 0.1);
        assert_eq!(cfg.times.t_end, 9.0);
        assert_eq!(cfg.times.dt, 1e-3);
        assert_eq!(cfg.packet.omega_w, Width::Fixed(1.5));
        let cfg = ScenarioConfig::from_json(r#"{"packet": {"omega_w": "from_bare_curvature"}}"#).unwrap();
        assert_eq!(cfg.name, ScenarioName::Fig1);
        assert_eq!(cfg.packet.omega_w, Width::Rule(WidthRule::FromBareCurvature));
    }

    #[test]
    fn inconsistent_settings_rejected() {
        assert!(ScenarioConfig::from_json(r#"{"times": {"t_end": -1.0}}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"packet": {"x0": 20.0}}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"packet": {"x0": 1.5}}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"lambda": 0.0}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"grids": {"tdse": {"xmin": 1.0, "xmax": -1.0, "n": 10}}}"#).is_err());
    }
}
