use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dwell::classical::{integrate_trajectory_strided, EAModel, Mode};
use dwell::export::{format_csv, OutputDir, Summary, Table};
use dwell::harness::{
    describe, effective_table_columns, effective_table_for, resolve_width, run_checks, run_scenario, trajectory_table,
    Backend, CheckLevel, Fault, ScenarioConfig, ScenarioName, Width, WidthRule,
};
use dwell::ode::Stepper;
use dwell::rgflow::{compare_to_spectral, integrate_flow, rg_effective_potential, Calibration, FlowOptions};
use dwell::tdse::{gaussian_packet, propagate};
use dwell::Error;

#[derive(Parser)]
#[command(
    name = "dwell",
    version,
    about = "Double-well effective potential and wave-packet dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate V_eff, Z_eff and the tilt on the configured table nodes.
    #[command(allow_negative_numbers = true)]
    Veff {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Integrate the RG flow and compare its IR potential to V_eff.
    #[command(allow_negative_numbers = true)]
    Rgflow {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum)]
        stepper: Option<StepperArg>,
        /// Skip the spectral comparison.
        #[arg(long)]
        no_compare: bool,
    },
    /// Evolve one Gaussian packet and write its observables.
    #[command(allow_negative_numbers = true)]
    Evolve {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Integrate one classical trajectory.
    #[command(allow_negative_numbers = true)]
    Trajectory {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value = "ea-z")]
        mode: ModeArg,
        /// Initial velocity; defaults to the packet momentum.
        #[arg(long)]
        v0: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Phase-space trajectories for lambda = 6.
    #[command(allow_negative_numbers = true)]
    Fig1 {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Phase-space trajectories for lambda = 0.1.
    #[command(allow_negative_numbers = true)]
    Fig2 {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Run the self-check suite.
    Check {
        #[arg(long, value_enum, default_value = "fast")]
        level: LevelArg,
        /// Inject a deliberate defect to confirm the checks catch it.
        #[arg(long, value_enum)]
        fault: Option<FaultArg>,
    },
    /// Print the resolved scenario configuration as JSON.
    #[command(allow_negative_numbers = true)]
    Describe {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
}

#[derive(Args, Clone, Default)]
struct ScenarioArgs {
    /// JSON scenario file; its values overlay the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset to start from when no config file names one.
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    /// Packet frequency: a number, `from-veff-curvature` or `from-bare-curvature`.
    #[arg(long)]
    omega_w: Option<String>,
    #[arg(long)]
    p0: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    record_every: Option<usize>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy)]
enum PresetArg {
    Fig1,
    Fig2,
    Custom,
}

#[derive(ValueEnum, Clone, Copy)]
enum BackendArg {
    Spectral,
    Rgflow,
}

#[derive(ValueEnum, Clone, Copy)]
enum StepperArg {
    Rosenbrock,
    DormandPrince,
}

#[derive(ValueEnum, Clone, Copy)]
enum ModeArg {
    Bare,
    EaZ1,
    EaZ,
}

#[derive(ValueEnum, Clone, Copy)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(ValueEnum, Clone, Copy)]
enum FaultArg {
    FlipEomSign,
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            Error::InvalidArgument(_) | Error::Config(_) => 2,
            _ => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

impl ScenarioArgs {
    fn resolve(&self, default: ScenarioName) -> Result<ScenarioConfig, Failure> {
        let preset = match self.preset {
            Some(PresetArg::Fig1) => ScenarioName::Fig1,
            Some(PresetArg::Fig2) => ScenarioName::Fig2,
            Some(PresetArg::Custom) => ScenarioName::Custom,
            None => default,
        };
        let mut cfg = match &self.config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
                let mut doc: serde_json::Value =
                    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
                if doc.get("name").is_none() {
                    if let Some(obj) = doc.as_object_mut() {
                        obj.insert("name".into(), serde_json::json!(preset.label()));
                    }
                }
                ScenarioConfig::from_json(&doc.to_string())?
            }
            None => ScenarioConfig::preset(preset),
        };
        if let Some(v) = self.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = self.x0 {
            cfg.packet.x0 = v;
        }
        if let Some(w) = &self.omega_w {
            cfg.packet.omega_w = match w.as_str() {
                "from-veff-curvature" | "from_veff_curvature" => Width::Rule(WidthRule::FromVeffCurvature),
                "from-bare-curvature" | "from_bare_curvature" => Width::Rule(WidthRule::FromBareCurvature),
                other => Width::Fixed(
                    other
                        .parse()
                        .map_err(|_| usage(format!("bad --omega-w value {other:?}")))?,
                ),
            };
        }
        if let Some(v) = self.p0 {
            cfg.packet.p0 = v;
        }
        if let Some(v) = self.dt {
            cfg.times.dt = v;
        }
        if let Some(v) = self.t_end {
            cfg.times.t_end = v;
        }
        if let Some(v) = self.record_every {
            cfg.times.record_every = v;
        }
        if let Some(b) = self.backend {
            cfg.backend = match b {
                BackendArg::Spectral => Backend::Spectral,
                BackendArg::Rgflow => Backend::Rgflow,
            };
        }
        if let Some(d) = &self.output_dir {
            cfg.output_dir = d.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Write to stdout; a closed pipe downstream is not an error.
fn out(text: &str) -> Result<(), Failure> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::from(e).into()),
        _ => Ok(()),
    }
}

fn emit(table: &Table, output: Option<&PathBuf>) -> Result<(), Failure> {
    let text = format_csv(table)?;
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::from(Error::from(e))),
        None => out(&text),
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Veff { scenario, output } => {
            let cfg = scenario.resolve(ScenarioName::Fig1)?;
            let table = effective_table_for(&cfg, &cfg.potential()?)?;
            emit(&effective_table_columns(&table), output.as_ref())?;
        }
        Command::Rgflow {
            scenario,
            stepper,
            no_compare,
        } => {
            let mut cfg = scenario.resolve(ScenarioName::Fig1)?;
            if let Some(s) = stepper {
                cfg.flow.stepper = match s {
                    StepperArg::Rosenbrock => Stepper::Rosenbrock,
                    StepperArg::DormandPrince => Stepper::DormandPrince,
                };
            }
            let pot = cfg.potential()?;
            let opts = FlowOptions {
                stepper: cfg.flow.stepper,
                ..FlowOptions::default()
            };
            let ir = integrate_flow(&pot, &cfg.grids.flow, cfg.flow.k_uv, cfg.flow.k_ir, &opts)?;
            let rg = rg_effective_potential(&ir, Calibration::None)?;
            let mut dir = OutputDir::create(&cfg.output_dir)?;
            dir.write_csv("rg.csv", &Table::new().with("x", &rg.nodes).with("u_ir", &rg.veff))?;
            let mut summary = Summary::new();
            summary
                .number("k_uv", cfg.flow.k_uv)
                .number("k_ir", ir.k)
                .text("floor_hits", ir.floor_hits);
            if !no_compare {
                let tab = cfg.grids.table;
                let sp = dwell::effective::build_effective_table(
                    &pot,
                    &cfg.grids.spectral,
                    -tab.half_width,
                    tab.half_width,
                    tab.nodes,
                )?;
                let report = compare_to_spectral(&rg, &sp, Some(1.0))?;
                for line in report.to_key_values().lines() {
                    if let Some((k, v)) = line.split_once(" = ") {
                        summary.text(k, v);
                    }
                }
            }
            dir.write_summary("report.txt", &summary)?;
            dir.finish()?;
            out(&summary.render())?;
        }
        Command::Evolve { scenario, output } => {
            let cfg = scenario.resolve(ScenarioName::Fig1)?;
            let pot = cfg.potential()?;
            let table = match cfg.packet.omega_w {
                Width::Rule(WidthRule::FromVeffCurvature) => Some(effective_table_for(&cfg, &pot)?),
                _ => None,
            };
            let omega_w = resolve_width(cfg.packet.omega_w, cfg.packet.x0, &pot, table.as_ref())?;
            let mut state = gaussian_packet(&cfg.grids.tdse, cfg.packet.x0, omega_w, cfg.packet.p0)?;
            let steps = (cfg.times.t_end / cfg.times.dt).round().max(1.0) as usize;
            let s = propagate(&mut state, &pot, cfg.times.dt, steps, cfg.times.record_every)?;
            emit(
                &Table::new()
                    .with("t", &s.times)
                    .with("x_mean", &s.x_mean)
                    .with("p_mean", &s.p_mean)
                    .with("energy", &s.energy)
                    .with("norm", &s.norm),
                output.as_ref(),
            )?;
        }
        Command::Trajectory {
            scenario,
            mode,
            v0,
            output,
        } => {
            let cfg = scenario.resolve(ScenarioName::Fig1)?;
            let pot = cfg.potential()?;
            let model = match mode {
                ModeArg::Bare => EAModel::bare(pot.clone()),
                ModeArg::EaZ1 => EAModel::effective(Mode::EaZ1, effective_table_for(&cfg, &pot)?, pot.clone())?,
                ModeArg::EaZ => EAModel::effective(Mode::EaZ, effective_table_for(&cfg, &pot)?, pot.clone())?,
            };
            let t = cfg.times;
            let traj = integrate_trajectory_strided(
                &model,
                cfg.packet.x0,
                v0.unwrap_or(cfg.packet.p0),
                t.dt,
                t.t_end,
                t.record_every,
            )?;
            emit(&trajectory_table(&traj), output.as_ref())?;
        }
        Command::Fig1 { scenario } => scenario_command(scenario.resolve(ScenarioName::Fig1)?)?,
        Command::Fig2 { scenario } => scenario_command(scenario.resolve(ScenarioName::Fig2)?)?,
        Command::Check { level, fault } => {
            let level = match level {
                LevelArg::Fast => CheckLevel::Fast,
                LevelArg::Full => CheckLevel::Full,
            };
            let fault = fault.map(|FaultArg::FlipEomSign| Fault::FlipEomSign);
            let report = run_checks(level, fault);
            out(&report.render())?;
            return Ok(if report.passed() { 0 } else { 1 });
        }
        Command::Describe { scenario } => {
            let cfg = scenario.resolve(ScenarioName::Fig1)?;
            out(&format!("{}\n", describe(&cfg)))?;
        }
    }
    Ok(0)
}

fn scenario_command(cfg: ScenarioConfig) -> Result<(), Failure> {
    let run = run_scenario(&cfg)?;
    out(&run.summary().render())?;
    eprintln!("wrote {}", cfg.output_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
