//! Scenario orchestration: configuration, the two figure scenarios, phase
//! space comparison and the self-check suite.

mod checks;
mod compare;
mod config;
mod scenario;

pub use checks::{criteria, run_checks, CheckContext, CheckEntry, CheckLevel, CheckReport, Fault, NAMES};
pub use compare::{compare_phase_space, max_deviation_ratio, PhaseCurve, PhaseDiscrepancy};
pub use config::{
    Backend, FlowConfig, Grids, PacketConfig, ScenarioConfig, ScenarioName, TableConfig, Times, Width, WidthRule,
};
pub use scenario::{
    compute_scenario, effective_table_columns, effective_table_for, preset_in, resolve_width, run_scenario,
    trajectory_table, CurveRun, ScenarioRun,
};

/// The resolved configuration as pretty JSON.
pub fn describe(cfg: &ScenarioConfig) -> String {
    cfg.to_json()
}
