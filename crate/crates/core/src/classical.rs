//! Classical trajectories for the bare potential and for the truncated
//! effective action `S = int dt (Z(x) xdot^2 / 2 - V_eff(x))`.

use serde::{Deserialize, Serialize};

use crate::effective::{Curve, EffectiveTable};
use crate::error::{Error, Result};
use crate::potential::Potential;

/// Largest allowed relative drift of the conserved energy.
pub const ENERGY_DRIFT_LIMIT: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `a = -V'(x)` in the bare potential.
    Bare,
    /// `a = -V_eff'(x)`.
    EaZ1,
    /// `a = -(V_eff'(x) + Z'(x) v^2 / 2) / Z(x)`.
    EaZ,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Bare => "bare",
            Mode::EaZ1 => "ea_z1",
            Mode::EaZ => "ea_z",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EAModel {
    pub mode: Mode,
    pub table: Option<EffectiveTable>,
    pub pot: Potential,
    force_sign: f64,
}

impl EAModel {
    pub fn bare(pot: Potential) -> Self {
        EAModel {
            mode: Mode::Bare,
            table: None,
            pot,
            force_sign: 1.0,
        }
    }

    /// An effective-action model; `Z_eff` must be positive over the table.
    pub fn effective(mode: Mode, table: EffectiveTable, pot: Potential) -> Result<Self> {
        if mode == Mode::Bare {
            return Err(Error::InvalidArgument("use EAModel::bare for the bare mode".into()));
        }
        if mode == Mode::EaZ {
            if let Some((x, z)) = table.nodes.iter().zip(&table.zeff).find(|(_, z)| !(**z > 0.0)) {
                return Err(Error::ModelInvariant(format!("Z_eff = {z} at x = {x} is not positive")));
            }
        }
        Ok(EAModel {
            mode,
            table: Some(table),
            pot,
            force_sign: 1.0,
        })
    }

    /// A deliberately wrong model whose acceleration has the opposite sign;
    /// used to confirm that the self-checks catch a broken equation of motion.
    pub fn with_flipped_force(mut self) -> Self {
        self.force_sign = -self.force_sign;
        self
    }

    fn table(&self) -> Result<&EffectiveTable> {
        self.table
            .as_ref()
            .ok_or_else(|| Error::ModelInvariant(format!("mode {} needs an effective table", self.mode.label())))
    }

    /// The range trajectories may explore.
    pub fn range(&self) -> (f64, f64) {
        match &self.table {
            Some(t) if self.mode != Mode::Bare => (t.lo(), t.hi()),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

fn z_positive(z: f64, x: f64) -> Result<f64> {
    if z > 0.0 {
        Ok(z)
    } else {
        Err(Error::ModelInvariant(format!("Z_eff = {z} at x = {x} is not positive")))
    }
}

pub fn acceleration(model: &EAModel, x: f64, v: f64) -> Result<f64> {
    Ok(model.force_sign * true_acceleration(model, x, v)?)
}

fn true_acceleration(model: &EAModel, x: f64, v: f64) -> Result<f64> {
    match model.mode {
        Mode::Bare => Ok(-model.pot.gradient(x)),
        Mode::EaZ1 => Ok(-model.table()?.eval(x, Curve::Veff, 1)?),
        Mode::EaZ => {
            let t = model.table()?;
            let z = z_positive(t.eval(x, Curve::Zeff, 0)?, x)?;
            let dz = t.eval(x, Curve::Zeff, 1)?;
            Ok(-(t.eval(x, Curve::Veff, 1)? + 0.5 * dz * v * v) / z)
        }
    }
}

/// The first integral of the model's equation of motion.
pub fn ea_energy(model: &EAModel, x: f64, v: f64) -> Result<f64> {
    match model.mode {
        Mode::Bare => Ok(0.5 * v * v + model.pot.value(x)),
        Mode::EaZ1 => Ok(0.5 * v * v + model.table()?.eval(x, Curve::Veff, 0)?),
        Mode::EaZ => {
            let t = model.table()?;
            let z = z_positive(t.eval(x, Curve::Zeff, 0)?, x)?;
            Ok(0.5 * z * v * v + t.eval(x, Curve::Veff, 0)?)
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub energy: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy.first().copied().unwrap_or(0.0);
        let scale = e0.abs().max(f64::MIN_POSITIVE);
        self.energy.iter().fold(0.0f64, |m, e| m.max((e - e0).abs() / scale))
    }
}

/// RK4 with fixed step `dt` (the last step is shortened to land on `t_end`),
/// recording every step.
pub fn integrate_trajectory(model: &EAModel, x0: f64, v0: f64, dt: f64, t_end: f64) -> Result<Trajectory> {
    integrate_trajectory_strided(model, x0, v0, dt, t_end, 1)
}

/// As [`integrate_trajectory`], recording every `stride` steps and the end.
pub fn integrate_trajectory_strided(
    model: &EAModel,
    x0: f64,
    v0: f64,
    dt: f64,
    t_end: f64,
    stride: usize,
) -> Result<Trajectory> {
    integrate_trajectory_with(model, x0, v0, dt, t_end, stride, ENERGY_DRIFT_LIMIT)
}

/// As [`integrate_trajectory_strided`] with a custom relative drift limit.
pub fn integrate_trajectory_with(
    model: &EAModel,
    x0: f64,
    v0: f64,
    dt: f64,
    t_end: f64,
    stride: usize,
    drift_limit: f64,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "t_end must be non-negative, got {t_end}"
        )));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be at least 1".into()));
    }
    let (lo, hi) = model.range();
    if !(x0 >= lo && x0 <= hi) {
        return Err(Error::Domain { x: x0, lo, hi });
    }

    let n_steps = ((t_end / dt) - 1e-9).ceil().max(0.0) as usize;
    let e0 = ea_energy(model, x0, v0)?;
    let scale = e0.abs().max(f64::MIN_POSITIVE);
    let mut traj = Trajectory::default();
    let (mut x, mut v, mut t) = (x0, v0, 0.0);
    let record = |traj: &mut Trajectory, t: f64, x: f64, v: f64, e: f64| {
        traj.times.push(t);
        traj.x.push(x);
        traj.v.push(v);
        traj.energy.push(e);
    };
    record(&mut traj, t, x, v, e0);

    let exit = |t: f64, x: f64, e: Error| match e.root() {
        Error::Domain { .. } => Error::TableExit { time: t, x, lo, hi },
        _ => e,
    };
    let accel = |t: f64, x: f64, v: f64| acceleration(model, x, v).map_err(|e| exit(t, x, e));

    for step in 1..=n_steps {
        let h = if step == n_steps { t_end - t } else { dt };
        let a1 = accel(t, x, v)?;
        let (x2, v2) = (x + 0.5 * h * v, v + 0.5 * h * a1);
        let a2 = accel(t, x2, v2)?;
        let (x3, v3) = (x + 0.5 * h * v2, v + 0.5 * h * a2);
        let a3 = accel(t, x3, v3)?;
        let (x4, v4) = (x + h * v3, v + h * a3);
        let a4 = accel(t, x4, v4)?;
        x += h / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4);
        v += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        t = if step == n_steps { t_end } else { step as f64 * dt };
        if !(x >= lo && x <= hi) {
            return Err(Error::TableExit { time: t, x, lo, hi });
        }
        let e = ea_energy(model, x, v).map_err(|e| exit(t, x, e))?;
        let drift = (e - e0).abs() / scale;
        if drift > drift_limit {
            return Err(Error::EnergyDrift {
                drift,
                limit: drift_limit,
                time: t,
            });
        }
        if step % stride == 0 || step == n_steps {
            record(&mut traj, t, x, v, e);
        }
    }
    Ok(traj)
}

/// Largest Euler–Lagrange residual `d/dt(Z v) - Z' v^2 / 2 + V_eff'` of the
/// true model along a trajectory recorded with uniform spacing, using 5-point
/// centred differences for the time derivative.
pub fn euler_lagrange_residual(model: &EAModel, traj: &Trajectory) -> Result<f64> {
    let n = traj.len();
    if n < 6 {
        return Err(Error::InsufficientData("need at least 6 samples".into()));
    }
    let h = traj.times[1] - traj.times[0];
    let table = model.table().ok();
    let z = |x: f64, d: u8| -> Result<f64> {
        match (model.mode, table) {
            (Mode::EaZ, Some(t)) => t.eval(x, Curve::Zeff, d),
            _ => Ok(if d == 0 { 1.0 } else { 0.0 }),
        }
    };
    let grad = |x: f64| -> Result<f64> {
        match (model.mode, table) {
            (Mode::Bare, _) | (_, None) => Ok(model.pot.gradient(x)),
            (_, Some(t)) => t.eval(x, Curve::Veff, 1),
        }
    };
    let zv = traj
        .x
        .iter()
        .zip(&traj.v)
        .map(|(&x, &v)| Ok(z(x, 0)? * v))
        .collect::<Result<Vec<f64>>>()?;
    // The last sample may be off the stride.
    let m = if ((traj.times[n - 1] - traj.times[n - 2]) - h).abs() <= 1e-9 * h.max(1.0) {
        n
    } else {
        n - 1
    };
    let mut worst = 0.0f64;
    for i in 2..m - 2 {
        let d = (zv[i - 2] - 8.0 * zv[i - 1] + 8.0 * zv[i + 1] - zv[i + 2]) / (12.0 * h);
        let (x, v) = (traj.x[i], traj.v[i]);
        worst = worst.max((d - 0.5 * z(x, 1)? * v * v + grad(x)?).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective::Provenance;
    use crate::tdse::period_of;
    use std::f64::consts::PI;

    /// `V = c2 x^2`, `Z = z0 + z2 x^2` tabulated on [-l, l].
    fn synthetic(c2: f64, z0: f64, z2: f64, l: f64) -> EffectiveTable {
        let n = 1201;
        let nodes: Vec<f64> = (0..n).map(|i| -l + 2.0 * l * i as f64 / (n - 1) as f64).collect();
        let v = nodes.iter().map(|x| c2 * x * x).collect();
        let z = nodes.iter().map(|x| z0 + z2 * x * x).collect();
        let j = nodes.iter().map(|x| 2.0 * c2 * x).collect();
        EffectiveTable::new(nodes, v, z, Some(j), None, Provenance::Spectral).unwrap()
    }

    fn dw(lambda: f64) -> Potential {
        Potential::double_well(lambda).unwrap()
    }

    #[test]
    fn acceleration_examples() {
        assert!(acceleration(&EAModel::bare(dw(6.0)), 1.0, 0.0).unwrap().abs() < 1e-15);
        let harmonic = EAModel::effective(Mode::EaZ, synthetic(0.5, 1.0, 0.0, 3.0), dw(6.0)).unwrap();
        assert!((acceleration(&harmonic, 0.3, 7.0).unwrap() + 0.3).abs() < 1e-12);
        let z = EAModel::effective(Mode::EaZ, synthetic(0.5, 1.0, 1.0, 3.0), dw(6.0)).unwrap();
        assert!((acceleration(&z, 1.0, 2.0).unwrap() + 2.5).abs() < 1e-9);
    }

    #[test]
    fn energy_examples() {
        assert!((ea_energy(&EAModel::bare(dw(6.0)), 1.0, 0.0).unwrap() + 0.25).abs() < 1e-15);
        let m = EAModel::effective(Mode::EaZ, synthetic(1.0, 2.0, 0.0, 3.0), dw(6.0)).unwrap();
        assert!((ea_energy(&m, 1.0, 1.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn non_positive_z_rejected() {
        let t = synthetic(0.5, -1.0, 1.0, 2.0);
        assert!(matches!(
            EAModel::effective(Mode::EaZ, t, dw(6.0)),
            Err(Error::ModelInvariant(_))
        ));
    }

    #[test]
    fn harmonic_periods() {
        let m = EAModel::effective(Mode::EaZ1, synthetic(0.5, 1.0, 0.0, 2.0), dw(6.0)).unwrap();
        let tr = integrate_trajectory(&m, 1.0, 0.0, 1e-3, 20.0).unwrap();
        let i = (2.0 * PI / 1e-3).round() as usize;
        assert!((tr.x[i] - (tr.times[i]).cos()).abs() < 1e-9);
        assert!((period_of(&tr.times, &tr.x).unwrap() - 2.0 * PI).abs() < 1e-6);

        let m = EAModel::effective(Mode::EaZ, synthetic(0.5, 4.0, 0.0, 2.0), dw(6.0)).unwrap();
        let tr = integrate_trajectory(&m, 1.0, 0.0, 1e-3, 40.0).unwrap();
        assert!((period_of(&tr.times, &tr.x).unwrap() - 4.0 * PI).abs() < 1e-5);

        let lambda = 0.1;
        let xm = (60.0f64).sqrt();
        let tr = integrate_trajectory(&EAModel::bare(dw(lambda)), xm - 0.1, 0.0, 1e-3, 30.0).unwrap();
        let p = period_of(&tr.times, &tr.x).unwrap();
        assert!((p / 4.44288 - 1.0).abs() < 0.01, "{p}");
    }

    #[test]
    fn euler_lagrange_residual_is_small() {
        let m = EAModel::effective(Mode::EaZ, synthetic(0.5, 1.0, 0.5, 2.0), dw(6.0)).unwrap();
        let tr = integrate_trajectory(&m, 1.0, 0.0, 1e-3, 10.0).unwrap();
        let r = euler_lagrange_residual(&m, &tr).unwrap();
        assert!(r < 1e-5, "{r}");
    }

    #[test]
    fn flipped_force_breaks_the_residual() {
        let m = EAModel::effective(Mode::EaZ, synthetic(0.5, 1.0, 0.5, 2.0), dw(6.0)).unwrap();
        let bad = m.clone().with_flipped_force();
        let tr = integrate_trajectory_with(&bad, 0.5, 0.0, 1e-3, 1.0, 1, f64::INFINITY).unwrap();
        assert!(euler_lagrange_residual(&m, &tr).unwrap() > 0.1);
    }

    #[test]
    fn time_reversal() {
        let m = EAModel::effective(Mode::EaZ, synthetic(0.5, 1.0, 0.5, 2.0), dw(6.0)).unwrap();
        let fwd = integrate_trajectory(&m, 0.8, 0.1, 1e-3, 5.0).unwrap();
        let (x1, v1) = (*fwd.x.last().unwrap(), *fwd.v.last().unwrap());
        let back = integrate_trajectory(&m, x1, -v1, 1e-3, 5.0).unwrap();
        assert!((back.x.last().unwrap() - 0.8).abs() < 1e-6);
        assert!((back.v.last().unwrap() + 0.1).abs() < 1e-6);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let m = EAModel::effective(Mode::EaZ1, synthetic(0.5, 1.0, 0.0, 2.0), dw(6.0)).unwrap();
        let err = |dt: f64| (integrate_trajectory(&m, 1.0, 0.0, dt, 5.0).unwrap().x.last().unwrap() - 5f64.cos()).abs();
        let ratio = err(0.05) / err(0.025);
        assert!((ratio - 16.0).abs() < 1.0, "{ratio}");
    }

    #[test]
    fn leaving_the_table_is_reported() {
        let m = EAModel::effective(Mode::EaZ1, synthetic(0.5, 1.0, 0.0, 1.0), dw(6.0)).unwrap();
        match integrate_trajectory(&m, 0.5, 2.0, 1e-3, 10.0) {
            Err(Error::TableExit { time, .. }) => assert!(time > 0.0 && time < 2.0),
            other => panic!("expected table exit, got {other:?}"),
        }
    }
}
