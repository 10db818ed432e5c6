//! Crank–Nicolson evolution of wave packets and their observables.
//!
//! The Hamiltonian is the same 3-point discretization used by the spectral
//! solver, so the recorded `<H>` is conserved to roundoff.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::ComplexTridiagonalLu;
use crate::potential::Potential;

/// Largest allowed `|psi|` at the box edges during evolution.
pub const EDGE_LIMIT: f64 = 1e-6;
/// Packet must keep this many standard deviations from the edges.
pub const PACKET_MARGIN: f64 = 5.0;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_RECORD_EVERY: usize = 10;

#[derive(Debug, Clone)]
pub struct WavePacketState {
    pub amplitudes: Vec<Complex64>,
    pub grid: Grid,
    pub time: f64,
}

impl WavePacketState {
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn mean_x(&self) -> f64 {
        let dx = self.grid.dx();
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * self.grid.x(i))
            .sum::<f64>()
            * dx
    }

    pub fn variance_x(&self) -> f64 {
        let dx = self.grid.dx();
        let m = self.mean_x();
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * (self.grid.x(i) - m).powi(2))
            .sum::<f64>()
            * dx
    }

    /// `<p> = Im sum psi_i^* (psi_{i+1} - psi_{i-1}) / (2 dx) * dx`, zero beyond the box.
    pub fn mean_p(&self) -> f64 {
        let a = &self.amplitudes;
        let n = a.len();
        (0..n)
            .map(|i| {
                let up = if i + 1 < n { a[i + 1] } else { Complex64::new(0.0, 0.0) };
                let down = if i > 0 { a[i - 1] } else { Complex64::new(0.0, 0.0) };
                (a[i].conj() * (up - down)).im
            })
            .sum::<f64>()
            * 0.5
    }

    /// `<V'(x)>` for the given sampled gradient.
    fn mean_of(&self, f: &[f64]) -> f64 {
        self.amplitudes
            .iter()
            .zip(f)
            .map(|(a, v)| a.norm_sqr() * v)
            .sum::<f64>()
            * self.grid.dx()
    }

    fn edge_amplitude(&self) -> f64 {
        let n = self.amplitudes.len();
        self.amplitudes[0].norm().max(self.amplitudes[n - 1].norm())
    }
}

/// `psi(x) ~ exp(-omega_w (x - x0)^2 / 2 + i p0 x)`, normalized on the grid.
pub fn gaussian_packet(grid: &Grid, x0: f64, omega_w: f64, p0: f64) -> Result<WavePacketState> {
    if !(omega_w > 0.0 && omega_w.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "omega_w must be positive, got {omega_w}"
        )));
    }
    if !(x0.is_finite() && p0.is_finite()) {
        return Err(Error::InvalidArgument(
            "packet centre and momentum must be finite".into(),
        ));
    }
    let sigma = (0.5 / omega_w).sqrt();
    for edge in [x0 - PACKET_MARGIN * sigma, x0 + PACKET_MARGIN * sigma] {
        if !grid.contains(edge) {
            return Err(Error::Domain {
                x: edge,
                lo: grid.xmin(),
                hi: grid.xmax(),
            });
        }
    }
    let mut amplitudes: Vec<Complex64> = grid
        .nodes()
        .iter()
        .map(|&x| Complex64::from_polar((-0.5 * omega_w * (x - x0).powi(2)).exp(), p0 * x))
        .collect();
    let scale = 1.0 / (amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.dx()).sqrt();
    amplitudes.iter_mut().for_each(|a| *a *= scale);
    Ok(WavePacketState {
        amplitudes,
        grid: *grid,
        time: 0.0,
    })
}

/// Observables sampled along one evolution.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub x_mean: Vec<f64>,
    pub p_mean: Vec<f64>,
    pub energy: Vec<f64>,
    pub norm: Vec<f64>,
    /// `<V'(x)>`, the exact Ehrenfest force with a minus sign.
    pub gradient_mean: Vec<f64>,
}

impl ObservableSeries {
    /// Velocity of the mean; equal to `p_mean` for unit mass.
    pub fn v_mean(&self) -> &[f64] {
        &self.p_mean
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, s: &WavePacketState, h: &Discrete) {
        let norm = s.norm();
        self.times.push(s.time);
        self.x_mean.push(s.mean_x() / norm);
        self.p_mean.push(s.mean_p() / norm);
        self.energy.push(h.expectation(&s.amplitudes, s.grid.dx()) / norm);
        self.norm.push(norm);
        self.gradient_mean.push(s.mean_of(&h.gradient) / norm);
    }

    /// Largest `|norm - 1|` and relative energy drift against the first sample.
    pub fn drifts(&self) -> (f64, f64) {
        let norm = self.norm.iter().fold(0.0f64, |m, n| m.max((n - 1.0).abs()));
        let e0 = self.energy.first().copied().unwrap_or(0.0);
        let scale = e0.abs().max(f64::MIN_POSITIVE);
        let energy = self.energy.iter().fold(0.0f64, |m, e| m.max((e - e0).abs() / scale));
        (norm, energy)
    }
}

/// Discrete Hamiltonian: diagonal plus the uniform off-diagonal.
struct Discrete {
    diag: Vec<f64>,
    off: f64,
    gradient: Vec<f64>,
}

impl Discrete {
    fn new(grid: &Grid, pot: &Potential) -> Result<Self> {
        let v = pot.sample(grid)?;
        let kin = 1.0 / (grid.dx() * grid.dx());
        Ok(Discrete {
            diag: v.iter().map(|v| kin + v).collect(),
            off: -0.5 * kin,
            gradient: grid.nodes().iter().map(|&x| pot.gradient(x)).collect(),
        })
    }

    fn apply(&self, psi: &[Complex64], i: usize) -> Complex64 {
        let n = psi.len();
        let mut s = psi[i] * self.diag[i];
        if i > 0 {
            s += psi[i - 1] * self.off;
        }
        if i + 1 < n {
            s += psi[i + 1] * self.off;
        }
        s
    }

    fn expectation(&self, psi: &[Complex64], dx: f64) -> f64 {
        (0..psi.len())
            .map(|i| (psi[i].conj() * self.apply(psi, i)).re)
            .sum::<f64>()
            * dx
    }
}

/// Advance `state` by `n_steps` Crank–Nicolson steps, recording observables
/// at t = 0, every `record_every` steps and at the final time.
pub fn propagate(
    state: &mut WavePacketState,
    pot: &Potential,
    dt: f64,
    n_steps: usize,
    record_every: usize,
) -> Result<ObservableSeries> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if record_every == 0 {
        return Err(Error::InvalidArgument("record_every must be at least 1".into()));
    }
    if state.amplitudes.len() != state.grid.len() {
        return Err(Error::InvalidArgument("state does not match its grid".into()));
    }
    let h = Discrete::new(&state.grid, pot)?;
    let half = Complex64::new(0.0, 0.5 * dt);
    let lhs: Vec<Complex64> = h.diag.iter().map(|d| 1.0 + half * d).collect();
    let lu = ComplexTridiagonalLu::new(&lhs, half * h.off)?;

    let t0 = state.time;
    let mut series = ObservableSeries::default();
    series.push(state, &h);
    let mut rhs = vec![Complex64::new(0.0, 0.0); state.amplitudes.len()];
    for step in 1..=n_steps {
        for (i, r) in rhs.iter_mut().enumerate() {
            *r = state.amplitudes[i] - half * h.apply(&state.amplitudes, i);
        }
        lu.solve_in_place(&mut rhs);
        std::mem::swap(&mut state.amplitudes, &mut rhs);
        state.time = t0 + step as f64 * dt;
        let edge = state.edge_amplitude();
        if edge > EDGE_LIMIT {
            return Err(Error::Reflection {
                time: state.time,
                amplitude: edge,
            });
        }
        if step % record_every == 0 || step == n_steps {
            series.push(state, &h);
        }
    }
    Ok(series)
}

/// Mean period from successive upward crossings of `x_mean` through its time
/// average, linearly interpolated.
pub fn dominant_period(series: &ObservableSeries) -> Result<f64> {
    period_of(&series.times, &series.x_mean)
}

/// [`dominant_period`] for an arbitrary sampled signal.
pub fn period_of(t: &[f64], y: &[f64]) -> Result<f64> {
    if t.len() != y.len() || t.len() < 3 {
        return Err(Error::InsufficientData("need at least 3 samples".into()));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let crossings: Vec<f64> = (1..y.len())
        .filter_map(|i| {
            let (a, b) = (y[i - 1] - mean, y[i] - mean);
            (a < 0.0 && b >= 0.0).then(|| t[i - 1] + (t[i] - t[i - 1]) * a / (a - b))
        })
        .collect();
    if crossings.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} upward crossing(s) of the mean; need at least 2",
            crossings.len()
        )));
    }
    Ok((crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}

/// Residuals of the two Ehrenfest identities along a uniformly recorded
/// series, by 5-point centred differences: `max |d<x>/dt - <p>|` and
/// `max |d<p>/dt + <V'>|`.
pub fn ehrenfest_residuals(series: &ObservableSeries) -> Result<(f64, f64)> {
    let n = series.len();
    if n < 5 {
        return Err(Error::InsufficientData("need at least 5 samples".into()));
    }
    let h = series.times[1] - series.times[0];
    let uniform = series
        .times
        .windows(2)
        .take(n - 2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1.0));
    if !uniform {
        return Err(Error::InvalidArgument("series is not uniformly sampled".into()));
    }
    // The final sample may sit off the stride; stop before it when it does.
    let last_ok = ((series.times[n - 1] - series.times[n - 2]) - h).abs() <= 1e-9 * h.abs().max(1.0);
    let m = if last_ok { n } else { n - 1 };
    let d5 = |y: &[f64], i: usize| (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]) / (12.0 * h);
    let (mut rx, mut rp) = (0.0f64, 0.0f64);
    for i in 2..m - 2 {
        rx = rx.max((d5(&series.x_mean, i) - series.p_mean[i]).abs());
        rp = rp.max((d5(&series.p_mean, i) + series.gradient_mean[i]).abs());
    }
    Ok((rx, rp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn free(half_width: f64) -> Potential {
        Potential::tabulated(vec![(-half_width, 0.0), (0.0, 0.0), (half_width, 0.0)]).unwrap()
    }

    #[test]
    fn gaussian_moments() {
        let g = make_grid(-10.0, 10.0, 20001).unwrap();
        let s = gaussian_packet(&g, 0.7, 1.0, 0.0).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-12);
        assert!((s.mean_x() - 0.7).abs() < 1e-10);
        assert!((s.variance_x() - 0.5).abs() < 1e-8);
        assert!(s.mean_p().abs() < 1e-12);

        let s = gaussian_packet(&g, 0.0, 2.0, 1.0).unwrap();
        assert!((s.variance_x() - 0.25).abs() < 1e-8);
        // Central differences carry an O(dx^2) bias.
        assert!((s.mean_p() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn packet_must_fit() {
        let g = make_grid(-2.0, 2.0, 401).unwrap();
        assert!(matches!(gaussian_packet(&g, 1.5, 1.0, 0.0), Err(Error::Domain { .. })));
        assert!(gaussian_packet(&g, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn coherent_state_follows_cosine() {
        let g = make_grid(-10.0, 10.0, 4001).unwrap();
        let pot = Potential::harmonic(1.0).unwrap();
        let mut s = gaussian_packet(&g, 1.0, 1.0, 0.0).unwrap();
        let n = (2.0 * std::f64::consts::PI / 1e-3).round() as usize;
        let series = propagate(&mut s, &pot, 1e-3, n, 100).unwrap();
        let t = *series.times.last().unwrap();
        assert!((series.x_mean.last().unwrap() - t.cos()).abs() < 2e-4);
        let (dn, de) = series.drifts();
        assert!(dn < 1e-10 && de < 1e-8, "{dn} {de}");
    }

    #[test]
    fn free_packet_spreads() {
        let g = make_grid(-15.0, 15.0, 6001).unwrap();
        let pot = free(20.0);
        let mut s = gaussian_packet(&g, 0.0, 1.0, 0.0).unwrap();
        propagate(&mut s, &pot, 1e-3, 1000, 1000).unwrap();
        assert!((s.variance_x() - 1.0).abs() < 1e-3, "{}", s.variance_x());
    }

    #[test]
    fn reflection_is_reported() {
        let g = make_grid(-3.0, 3.0, 601).unwrap();
        let pot = free(5.0);
        let mut s = gaussian_packet(&g, 0.0, 8.0, 4.0).unwrap();
        match propagate(&mut s, &pot, 1e-3, 5000, 10) {
            Err(Error::Reflection { time, .. }) => assert!(time > 0.0 && time < 5.0),
            other => panic!("expected reflection, got {other:?}"),
        }
    }

    #[test]
    fn synthetic_periods() {
        let t: Vec<f64> = (0..20000).map(|i| i as f64 * 1e-3).collect();
        let y: Vec<f64> = t.iter().map(|t| (2.0 * t).cos()).collect();
        assert!((period_of(&t, &y).unwrap() - std::f64::consts::PI).abs() < 1e-4);
        let flat = vec![1.0; t.len()];
        assert!(matches!(period_of(&t, &flat), Err(Error::InsufficientData(_))));
    }
}
