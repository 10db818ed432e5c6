//! Cubic interpolating splines on strictly ascending, possibly non-uniform nodes.
//!
//! The spline is stored by its node values and second derivatives `m_i`; on
//! each interval it is the usual cubic in the local coordinates
//! `a = (x_{i+1} - x) / h`, `b = 1 - a`. Queries outside the node range are
//! domain errors; there is no extrapolation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// End conditions for the spline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EndCondition {
    /// Zero second derivative at both ends.
    Natural,
    /// Prescribed first derivatives at the two ends.
    Clamped { left: f64, right: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: &[f64], y: &[f64], end: EndCondition) -> Result<Self> {
        let n = x.len();
        if n != y.len() {
            return Err(Error::InvalidArgument(format!(
                "spline needs matching lengths, got {} nodes and {} values",
                n,
                y.len()
            )));
        }
        if n < 3 {
            return Err(Error::InvalidArgument("spline needs at least 3 nodes".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("spline nodes must be strictly ascending".into()));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("spline data must be finite".into()));
        }

        // Tridiagonal system for the second derivatives.
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            sub[i] = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            sup[i] = h1 / 6.0;
            rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        }
        match end {
            EndCondition::Natural => {
                diag[0] = 1.0;
                diag[n - 1] = 1.0;
            }
            EndCondition::Clamped { left, right } => {
                let h0 = x[1] - x[0];
                diag[0] = h0 / 3.0;
                sup[0] = h0 / 6.0;
                rhs[0] = (y[1] - y[0]) / h0 - left;
                let hn = x[n - 1] - x[n - 2];
                sub[n - 1] = hn / 6.0;
                diag[n - 1] = hn / 3.0;
                rhs[n - 1] = right - (y[n - 1] - y[n - 2]) / hn;
            }
        }
        let m = crate::linalg::solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
        Ok(CubicSpline {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn second_derivatives(&self) -> &[f64] {
        &self.m
    }

    pub fn lo(&self) -> f64 {
        self.x[0]
    }

    pub fn hi(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    fn interval(&self, x: f64) -> Result<usize> {
        if !(x >= self.lo() && x <= self.hi()) {
            return Err(Error::Domain {
                x,
                lo: self.lo(),
                hi: self.hi(),
            });
        }
        // Index of the last node <= x, capped to the last interval.
        let i = self.x.partition_point(|&xi| xi <= x);
        Ok(i.saturating_sub(1).min(self.x.len() - 2))
    }

    /// Value (`deriv = 0`), slope (1) or curvature (2) at `x`.
    pub fn eval(&self, x: f64, deriv: u8) -> Result<f64> {
        let i = self.interval(x)?;
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - x) / h;
        let b = (x - self.x[i]) / h;
        let (y0, y1, m0, m1) = (self.y[i], self.y[i + 1], self.m[i], self.m[i + 1]);
        let v = match deriv {
            0 => {
                if b == 0.0 {
                    return Ok(y0);
                }
                if a == 0.0 {
                    return Ok(y1);
                }
                a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0
            }
            1 => (y1 - y0) / h - (3.0 * a * a - 1.0) * h / 6.0 * m0 + (3.0 * b * b - 1.0) * h / 6.0 * m1,
            2 => a * m0 + b * m1,
            3 => (m1 - m0) / h,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "derivative order {deriv} not supported"
                )))
            }
        };
        Ok(v)
    }
}
