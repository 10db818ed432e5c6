use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform coordinate grid `x_i = xmin + i * dx`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    xmin: f64,
    xmax: f64,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct GridSpec {
    xmin: f64,
    xmax: f64,
    n: usize,
}

impl TryFrom<GridSpec> for Grid {
    type Error = Error;

    fn try_from(s: GridSpec) -> Result<Self> {
        Grid::new(s.xmin, s.xmax, s.n)
    }
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> Self {
        GridSpec {
            xmin: g.xmin,
            xmax: g.xmax,
            n: g.n,
        }
    }
}

impl Grid {
    pub fn new(xmin: f64, xmax: f64, n: usize) -> Result<Self> {
        if !xmin.is_finite() || !xmax.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid bounds must be finite, got [{xmin}, {xmax}]"
            )));
        }
        if xmin >= xmax {
            return Err(Error::InvalidArgument(format!(
                "grid requires xmin < xmax, got [{xmin}, {xmax}]"
            )));
        }
        if n < 3 {
            return Err(Error::InvalidArgument(format!("grid needs at least 3 nodes, got {n}")));
        }
        Ok(Grid { xmin, xmax, n })
    }

    pub fn xmin(&self) -> f64 {
        self.xmin
    }

    pub fn xmax(&self) -> f64 {
        self.xmax
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        (self.xmax - self.xmin) / (self.n - 1) as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        // Pin the last node to xmax exactly.
        if i + 1 == self.n {
            self.xmax
        } else {
            self.xmin + i as f64 * self.dx()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Same box with `2n - 1` nodes (spacing halved).
    pub fn refined(&self) -> Grid {
        Grid {
            n: 2 * self.n - 1,
            ..*self
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.xmin && x <= self.xmax
    }
}

/// Convenience wrapper matching the `make_grid` operation.
pub fn make_grid(xmin: f64, xmax: f64, n: usize) -> Result<Grid> {
    Grid::new(xmin, xmax, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_center_node() {
        let g = make_grid(-10.0, 10.0, 2001).unwrap();
        assert!((g.dx() - 0.01).abs() < 1e-15);
        assert!(g.x(1000).abs() < 1e-12);
        let g = make_grid(-8.0, 8.0, 4001).unwrap();
        assert!((g.dx() - 0.004).abs() < 1e-15);
        assert_eq!(g.nodes().len(), 4001);
        assert_eq!(g.x(4000), 8.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(make_grid(0.0, -1.0, 100), Err(Error::InvalidArgument(_))));
        assert!(make_grid(0.0, 1.0, 2).is_err());
        assert!(make_grid(f64::NAN, 1.0, 10).is_err());
        assert!(make_grid(0.0, f64::INFINITY, 10).is_err());
    }

    #[test]
    fn refinement_halves_spacing() {
        let g = make_grid(-3.0, 3.0, 601).unwrap();
        let r = g.refined();
        assert_eq!(r.len(), 1201);
        assert!((r.dx() - g.dx() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn json_validates() {
        let g: Grid = serde_json::from_str(r#"{"xmin":-1,"xmax":1,"n":5}"#).unwrap();
        assert_eq!(g.len(), 5);
        assert!(serde_json::from_str::<Grid>(r#"{"xmin":1,"xmax":-1,"n":5}"#).is_err());
    }
}
