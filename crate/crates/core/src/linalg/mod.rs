//! Small dense-band linear algebra kernels used by the solvers.

mod banded;
pub(crate) mod eigen;

pub use banded::BandedLu;
pub use eigen::{lowest_eigenpairs_sym, SymTridiagonal};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Solve a general tridiagonal system by the Thomas algorithm.
///
/// `sub[0]` and `sup[n-1]` are ignored. No pivoting: callers pass diagonally
/// dominant systems.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut piv = diag[0];
    if piv == 0.0 {
        return Err(Error::NumericalFailure("zero pivot in tridiagonal solve".into()));
    }
    c[0] = sup[0] / piv;
    x[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - sub[i] * c[i - 1];
        if piv == 0.0 {
            return Err(Error::NumericalFailure("zero pivot in tridiagonal solve".into()));
        }
        if i + 1 < n {
            c[i] = sup[i] / piv;
        }
        x[i] = (rhs[i] - sub[i] * x[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

/// LU factors of a constant complex symmetric tridiagonal matrix with
/// uniform off-diagonal, reused across many right-hand sides.
#[derive(Debug, Clone)]
pub struct ComplexTridiagonalLu {
    off: Complex64,
    // Inverse pivots and the eliminated super-diagonal ratios.
    inv_piv: Vec<Complex64>,
    ratio: Vec<Complex64>,
}

impl ComplexTridiagonalLu {
    pub fn new(diag: &[Complex64], off: Complex64) -> Result<Self> {
        let n = diag.len();
        let mut inv_piv = vec![Complex64::new(0.0, 0.0); n];
        let mut ratio = vec![Complex64::new(0.0, 0.0); n];
        let mut piv = diag[0];
        for i in 0..n {
            if i > 0 {
                piv = diag[i] - off * ratio[i - 1];
            }
            if piv.norm() == 0.0 {
                return Err(Error::NumericalFailure(
                    "zero pivot in complex tridiagonal factorization".into(),
                ));
            }
            inv_piv[i] = piv.inv();
            ratio[i] = off * inv_piv[i];
        }
        Ok(ComplexTridiagonalLu { off, inv_piv, ratio })
    }

    /// Overwrite `b` with the solution of `A x = b`.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = b.len();
        b[0] *= self.inv_piv[0];
        for i in 1..n {
            b[i] = (b[i] - self.off * b[i - 1]) * self.inv_piv[i];
        }
        for i in (0..n - 1).rev() {
            let next = b[i + 1];
            b[i] -= self.ratio[i] * next;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_matches_direct_product() {
        let sub = [0.0, 1.0, -0.5, 0.25];
        let diag = [4.0, 5.0, 3.0, 6.0];
        let sup = [1.0, 0.5, -1.0, 0.0];
        let x_true = [1.0, -2.0, 0.5, 3.0];
        let mut rhs = [0.0; 4];
        for i in 0..4 {
            rhs[i] = diag[i] * x_true[i];
            if i > 0 {
                rhs[i] += sub[i] * x_true[i - 1];
            }
            if i < 3 {
                rhs[i] += sup[i] * x_true[i + 1];
            }
        }
        let x = solve_tridiagonal(&sub, &diag, &sup, &rhs).unwrap();
        for i in 0..4 {
            assert!((x[i] - x_true[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn complex_lu_solves() {
        let n = 6;
        let diag: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0, 2.0 + i as f64 * 0.3)).collect();
        let off = Complex64::new(0.0, -0.7);
        let lu = ComplexTridiagonalLu::new(&diag, off).unwrap();
        let x_true: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let mut b: Vec<Complex64> = (0..n)
            .map(|i| {
                let mut s = diag[i] * x_true[i];
                if i > 0 {
                    s += off * x_true[i - 1];
                }
                if i + 1 < n {
                    s += off * x_true[i + 1];
                }
                s
            })
            .collect();
        lu.solve_in_place(&mut b);
        for i in 0..n {
            assert!((b[i] - x_true[i]).norm() < 1e-13);
        }
    }
}
