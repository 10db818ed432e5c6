use serde::{Deserialize, Serialize};

use crate::classical::Trajectory;
use crate::error::{Error, Result};
use crate::tdse::ObservableSeries;

/// A sampled `(x(t), v(t))` curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCurve {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl PhaseCurve {
    pub fn new(times: Vec<f64>, x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if times.len() != x.len() || times.len() != v.len() || times.len() < 2 {
            return Err(Error::InvalidArgument(
                "phase curve columns must match and hold 2+ samples".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("phase curve times must ascend".into()));
        }
        Ok(PhaseCurve { times, x, v })
    }

    pub fn from_series(s: &ObservableSeries) -> Result<Self> {
        PhaseCurve::new(s.times.clone(), s.x_mean.clone(), s.v_mean().to_vec())
    }

    pub fn from_trajectory(t: &Trajectory) -> Result<Self> {
        PhaseCurve::new(t.times.clone(), t.x.clone(), t.v.clone())
    }

    fn span(&self) -> (f64, f64) {
        (self.times[0], self.times[self.times.len() - 1])
    }

    /// Linear interpolation of `(x, v)` at `t` inside the span.
    pub fn at(&self, t: f64) -> (f64, f64) {
        let ts = &self.times;
        let i = ts.partition_point(|&s| s <= t).clamp(1, ts.len() - 1);
        let w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
        (
            self.x[i - 1] + w * (self.x[i] - self.x[i - 1]),
            self.v[i - 1] + w * (self.v[i] - self.v[i - 1]),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiscrepancy {
    /// `sqrt(mean((x_a - x_b)^2 + (v_a - v_b)^2))` over the window.
    pub d: f64,
    /// `d` divided by the RMS phase-space radius of curve `a`.
    pub d_normalized: f64,
    pub samples: usize,
}

/// Compare two curves on `[t0, t1]`, resampled every `step`.
pub fn compare_phase_space(a: &PhaseCurve, b: &PhaseCurve, window: (f64, f64), step: f64) -> Result<PhaseDiscrepancy> {
    let (t0, t1) = window;
    if !(t1 > t0 && step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need t1 > t0 and step > 0, got [{t0}, {t1}] step {step}"
        )));
    }
    let tol = 1e-9 * t1.abs().max(1.0);
    for c in [a, b] {
        let (lo, hi) = c.span();
        if t0 < lo - tol || t1 > hi + tol {
            let x = if t0 < lo - tol { t0 } else { t1 };
            return Err(Error::Domain { x, lo, hi });
        }
    }
    let n = ((t1 - t0) / step - 1e-9).ceil() as usize + 1;
    let (mut sq, mut rad) = (0.0, 0.0);
    for i in 0..n {
        let t = (t0 + i as f64 * step).min(t1);
        let (xa, va) = a.at(t);
        let (xb, vb) = b.at(t);
        sq += (xa - xb).powi(2) + (va - vb).powi(2);
        rad += xa * xa + va * va;
    }
    let d = (sq / n as f64).sqrt();
    let r = (rad / n as f64).sqrt();
    Ok(PhaseDiscrepancy {
        d,
        d_normalized: if r > 0.0 { d / r } else { f64::NAN },
        samples: n,
    })
}

/// `max |x_a - x_b|` over the window, divided by half the peak-to-peak
/// excursion of `b`.
pub fn max_deviation_ratio(a: &PhaseCurve, b: &PhaseCurve, window: (f64, f64), step: f64) -> Result<(f64, f64)> {
    let n = ((window.1 - window.0) / step - 1e-9).ceil() as usize + 1;
    let (mut dev, mut lo, mut hi) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let t = (window.0 + i as f64 * step).min(window.1);
        let (xa, _) = a.at(t);
        let (xb, _) = b.at(t);
        dev = dev.max((xa - xb).abs());
        lo = lo.min(xb);
        hi = hi.max(xb);
    }
    let amplitude = 0.5 * (hi - lo);
    Ok((dev, amplitude))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circle() -> PhaseCurve {
        let t: Vec<f64> = (0..=2000).map(|i| i as f64 * PI / 1000.0).collect();
        PhaseCurve::new(
            t.clone(),
            t.iter().map(|t| t.cos()).collect(),
            t.iter().map(|t| -t.sin()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn identity_is_zero() {
        let c = circle();
        assert_eq!(compare_phase_space(&c, &c, (0.0, 2.0 * PI), 0.01).unwrap().d, 0.0);
    }

    #[test]
    fn unit_circle_against_origin() {
        let c = circle();
        let zero = PhaseCurve::new(c.times.clone(), vec![0.0; c.times.len()], vec![0.0; c.times.len()]).unwrap();
        let r = compare_phase_space(&c, &zero, (0.0, 2.0 * PI), 1e-3).unwrap();
        assert!((r.d - 1.0).abs() < 1e-6);
        assert!((r.d_normalized - 1.0).abs() < 1e-6);
    }

    #[test]
    fn window_outside_curve_is_domain_error() {
        let c = circle();
        assert!(matches!(
            compare_phase_space(&c, &c, (0.0, 10.0), 0.01),
            Err(Error::Domain { .. })
        ));
    }
}
