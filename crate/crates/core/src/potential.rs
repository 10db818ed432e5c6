use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::spline::{CubicSpline, EndCondition};

/// One-dimensional external potential `V(x)` (units hbar = m = 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// `V(x) = -x^2/2 + lambda x^4/24`.
    QuarticDoubleWell { lambda: f64 },
    /// `V(x) = omega^2 x^2 / 2`.
    Harmonic { omega: f64 },
    /// Natural-spline interpolation of `(x, V)` samples.
    Tabulated(TabulatedPotential),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableSpec", into = "TableSpec")]
pub struct TabulatedPotential {
    table: Vec<(f64, f64)>,
    spline: CubicSpline,
}

#[derive(Serialize, Deserialize)]
struct TableSpec {
    table: Vec<(f64, f64)>,
}

impl TryFrom<TableSpec> for TabulatedPotential {
    type Error = Error;

    fn try_from(spec: TableSpec) -> Result<Self> {
        let (x, v): (Vec<f64>, Vec<f64>) = spec.table.iter().copied().unzip();
        let spline = CubicSpline::new(&x, &v, EndCondition::Natural)?;
        Ok(TabulatedPotential {
            table: spec.table,
            spline,
        })
    }
}

impl From<TabulatedPotential> for TableSpec {
    fn from(t: TabulatedPotential) -> Self {
        TableSpec { table: t.table }
    }
}

impl TabulatedPotential {
    pub fn table(&self) -> &[(f64, f64)] {
        &self.table
    }

    pub fn spline(&self) -> &CubicSpline {
        &self.spline
    }
}

impl Potential {
    pub fn double_well(lambda: f64) -> Result<Self> {
        let p = Potential::QuarticDoubleWell { lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn harmonic(omega: f64) -> Result<Self> {
        let p = Potential::Harmonic { omega };
        p.validate()?;
        Ok(p)
    }

    pub fn tabulated(table: Vec<(f64, f64)>) -> Result<Self> {
        Ok(Potential::Tabulated(TabulatedPotential::try_from(TableSpec { table })?))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Potential::QuarticDoubleWell { lambda } if !(lambda.is_finite() && *lambda > 0.0) => Err(
                Error::InvalidArgument(format!("quartic coupling must be positive, got {lambda}")),
            ),
            Potential::Harmonic { omega } if !(omega.is_finite() && *omega > 0.0) => Err(Error::InvalidArgument(
                format!("oscillator frequency must be positive, got {omega}"),
            )),
            _ => Ok(()),
        }
    }

    /// Whether `V(-x) = V(x)` holds by construction.
    pub fn is_even(&self) -> bool {
        !matches!(self, Potential::Tabulated(_))
    }

    /// Values at every grid node; tabulated potentials must cover the grid.
    pub fn sample(&self, grid: &Grid) -> Result<Vec<f64>> {
        match self {
            Potential::Tabulated(t) => {
                let s = t.spline();
                if s.lo() > grid.xmin() || s.hi() < grid.xmax() {
                    return Err(Error::Coverage {
                        need_lo: grid.xmin(),
                        need_hi: grid.xmax(),
                        have_lo: s.lo(),
                        have_hi: s.hi(),
                    });
                }
                (0..grid.len()).map(|i| s.eval(grid.x(i), 0)).collect()
            }
            _ => Ok((0..grid.len()).map(|i| self.value(grid.x(i))).collect()),
        }
    }

    /// `V(x)`. Tabulated potentials return NaN outside their table.
    pub fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    /// `V'(x)`.
    pub fn gradient(&self, x: f64) -> f64 {
        self.derivative(x, 1)
    }

    /// `V''(x)`.
    pub fn curvature(&self, x: f64) -> f64 {
        self.derivative(x, 2)
    }

    fn derivative(&self, x: f64, order: u8) -> f64 {
        match *self {
            Potential::QuarticDoubleWell { lambda } => match order {
                0 => -0.5 * x * x + lambda * x.powi(4) / 24.0,
                1 => -x + lambda * x.powi(3) / 6.0,
                _ => -1.0 + 0.5 * lambda * x * x,
            },
            Potential::Harmonic { omega } => {
                let w2 = omega * omega;
                match order {
                    0 => 0.5 * w2 * x * x,
                    1 => w2 * x,
                    _ => w2,
                }
            }
            Potential::Tabulated(ref t) => t.spline.eval(x, order).unwrap_or(f64::NAN),
        }
    }

    /// Positive minimum of the double well, `sqrt(6 / lambda)`.
    pub fn well_minimum(&self) -> Option<f64> {
        match *self {
            Potential::QuarticDoubleWell { lambda } => Some((6.0 / lambda).sqrt()),
            Potential::Harmonic { .. } => Some(0.0),
            Potential::Tabulated(_) => None,
        }
    }
}
