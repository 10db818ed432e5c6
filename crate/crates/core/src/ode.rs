//! Adaptive embedded Runge–Kutta integrators for large ODE systems.
//!
//! Two pairs are provided: the explicit Dormand–Prince 5(4) pair and the
//! linearly implicit, L-stable Rosenbrock 2(3) pair of Shampine and Reichelt,
//! whose stage equations are solved with a banded LU of `I - h d J`.
//! Integration may run forwards or backwards in the independent variable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::BandedLu;

/// `y' = f(t, y)` with an optional banded Jacobian.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;

    /// Sub- and super-diagonal bandwidth of `df/dy`.
    fn bandwidth(&self) -> (usize, usize) {
        (self.dim(), self.dim())
    }

    /// Fill `df/dy` through `set(i, j, value)` and return `df/dt`.
    fn jacobian(
        &mut self,
        _t: f64,
        _y: &[f64],
        _set: &mut dyn FnMut(usize, usize, f64),
        _dfdt: &mut [f64],
    ) -> Result<()> {
        Err(Error::InvalidArgument("system provides no Jacobian".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stepper {
    DormandPrince,
    Rosenbrock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest allowed `|h|`; going below it is a stiffness failure.
    pub h_min: f64,
    pub h_init: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-8,
            atol: 1e-10,
            h_min: 1e-12,
            h_init: 1e-3,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Returned when the step size collapses; `t` is where it happened.
#[derive(Debug, Clone, Copy)]
pub struct Collapse {
    pub t: f64,
    pub h: f64,
}

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], c: &StepControl) -> f64 {
    let n = err.len() as f64;
    (err.iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = c.atol + c.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum::<f64>()
        / n)
        .sqrt()
}

/// Integrate from `t0` to `t1`, stopping exactly at every `stops` value in
/// between (in integration order) and calling `visit(t, y)` there and at `t1`.
#[allow(clippy::too_many_arguments)]
pub fn integrate(
    sys: &mut dyn OdeSystem,
    stepper: Stepper,
    t0: f64,
    t1: f64,
    y: &mut [f64],
    control: &StepControl,
    stops: &[f64],
    visit: &mut dyn FnMut(f64, &[f64]) -> Result<()>,
) -> std::result::Result<StepStats, IntegrateError> {
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut targets: Vec<f64> = stops
        .iter()
        .copied()
        .filter(|s| (s - t0) * dir > 0.0 && (t1 - s) * dir > 0.0)
        .collect();
    targets.sort_by(|a, b| (a * dir).total_cmp(&(b * dir)));
    targets.push(t1);

    let mut stats = StepStats::default();
    let mut t = t0;
    let mut h = control.h_init.abs().min((t1 - t0).abs()) * dir;
    let mut engine = Engine::new(sys.dim(), stepper, *control);
    let order = match stepper {
        Stepper::DormandPrince => 5.0,
        Stepper::Rosenbrock => 3.0,
    };
    for target in targets {
        while (target - t) * dir > 0.0 {
            if stats.accepted + stats.rejected >= control.max_steps {
                return Err(IntegrateError::Other(Error::NumericalFailure(format!(
                    "step budget of {} exhausted at t = {t}",
                    control.max_steps
                ))));
            }
            let remaining = target - t;
            let last = h.abs() >= remaining.abs();
            let step = if last { remaining } else { h };
            let err = engine
                .attempt(sys, t, step, y, &mut stats)
                .map_err(IntegrateError::Other)?;
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-1.0 / order)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                t = if last { target } else { t + step };
                y.copy_from_slice(&engine.y_new);
                stats.accepted += 1;
                if !last || factor < 1.0 {
                    h = step * factor;
                }
            } else {
                stats.rejected += 1;
                h = step * factor.min(0.9);
                if h.abs() < control.h_min {
                    return Err(IntegrateError::Collapse(Collapse { t, h: h.abs() }));
                }
            }
        }
        visit(t, y).map_err(IntegrateError::Other)?;
    }
    Ok(stats)
}

#[derive(Debug)]
pub enum IntegrateError {
    Collapse(Collapse),
    Other(Error),
}

struct Engine {
    stepper: Stepper,
    control: StepControl,
    y_new: Vec<f64>,
    k: Vec<Vec<f64>>,
    tmp: Vec<f64>,
    err: Vec<f64>,
    dfdt: Vec<f64>,
}

// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

impl Engine {
    fn new(n: usize, stepper: Stepper, control: StepControl) -> Self {
        let stages = match stepper {
            Stepper::DormandPrince => 7,
            Stepper::Rosenbrock => 6,
        };
        Engine {
            stepper,
            control,
            y_new: vec![0.0; n],
            k: vec![vec![0.0; n]; stages],
            tmp: vec![0.0; n],
            err: vec![0.0; n],
            dfdt: vec![0.0; n],
        }
    }

    /// Take one trial step; returns the scaled error norm.
    fn attempt(&mut self, sys: &mut dyn OdeSystem, t: f64, h: f64, y: &[f64], stats: &mut StepStats) -> Result<f64> {
        match self.stepper {
            Stepper::DormandPrince => self.dormand_prince(sys, t, h, y, stats),
            Stepper::Rosenbrock => self.rosenbrock(sys, t, h, y, stats),
        }
    }

    fn dormand_prince(
        &mut self,
        sys: &mut dyn OdeSystem,
        t: f64,
        h: f64,
        y: &[f64],
        stats: &mut StepStats,
    ) -> Result<f64> {
        let n = y.len();
        for s in 0..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, a) in DP_A[s].iter().enumerate().take(s) {
                    acc += h * a * self.k[j][i];
                }
                self.tmp[i] = acc;
            }
            let (_, tail) = self.k.split_at_mut(s);
            sys.rhs(t + DP_C[s] * h, &self.tmp, &mut tail[0])?;
            stats.rhs_evals += 1;
        }
        // Stage 7 was evaluated at the fifth-order solution (FSAL).
        self.y_new.copy_from_slice(&self.tmp);
        for i in 0..n {
            self.err[i] = h * (0..7).map(|s| DP_E[s] * self.k[s][i]).sum::<f64>();
        }
        Ok(error_norm(&self.err, y, &self.y_new, &self.control))
    }

    fn rosenbrock(&mut self, sys: &mut dyn OdeSystem, t: f64, h: f64, y: &[f64], stats: &mut StepStats) -> Result<f64> {
        let n = y.len();
        let d = 1.0 / (2.0 + std::f64::consts::SQRT_2);
        let e32 = 6.0 + std::f64::consts::SQRT_2;
        let (kl, ku) = sys.bandwidth();

        // W = I - h d J, assembled densely within the band.
        let mut band: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        sys.jacobian(t, y, &mut |i, j, v| band[i].push((j, v)), &mut self.dfdt)?;
        let w = BandedLu::factor(n, kl, ku, |i, j| {
            let jv: f64 = band[i].iter().filter(|(c, _)| *c == j).map(|(_, v)| v).sum();
            (if i == j { 1.0 } else { 0.0 }) - h * d * jv
        })?;

        let [f0, f1, f2, k1, k2, k3] = &mut self.k[..] else {
            unreachable!("rosenbrock uses six work vectors")
        };
        sys.rhs(t, y, f0)?;
        for i in 0..n {
            k1[i] = f0[i] + h * d * self.dfdt[i];
        }
        w.solve_in_place(k1);

        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        sys.rhs(t + 0.5 * h, &self.tmp, f1)?;
        for i in 0..n {
            k2[i] = f1[i] - k1[i];
        }
        w.solve_in_place(k2);
        for i in 0..n {
            k2[i] += k1[i];
            self.y_new[i] = y[i] + h * k2[i];
        }

        sys.rhs(t + h, &self.y_new, f2)?;
        for i in 0..n {
            k3[i] = f2[i] - e32 * (k2[i] - f1[i]) - 2.0 * (k1[i] - f0[i]) + h * d * self.dfdt[i];
        }
        w.solve_in_place(k3);
        stats.rhs_evals += 3;
        for i in 0..n {
            self.err[i] = h / 6.0 * (k1[i] - 2.0 * k2[i] + k3[i]);
        }
        Ok(error_norm(&self.err, y, &self.y_new, &self.control))
    }
}
