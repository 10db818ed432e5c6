use crate::error::{Error, Result};

/// LU factorization with partial pivoting of a banded matrix with `kl`
/// sub-diagonals and `ku` super-diagonals.
///
/// Row `i` is stored as the column window `[i - kl, i + ku + kl]`; the extra
/// `kl` columns hold fill-in produced by row interchanges.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    rows: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    /// Factor the matrix given by `entry(i, j)` for `|i - j|` within the band.
    pub fn factor(n: usize, kl: usize, ku: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let width = 2 * kl + ku + 1;
        let mut lu = BandedLu {
            n,
            kl,
            ku,
            width,
            rows: vec![0.0; n * width],
            pivots: vec![0; n],
        };
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let hi = (i + ku).min(n - 1);
            for j in lo..=hi {
                *lu.at_mut(i, j) = entry(i, j);
            }
        }
        lu.eliminate()?;
        Ok(lu)
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        // Column j sits at offset j + kl - i within row i.
        debug_assert!(j + self.kl >= i && j + self.kl - i < self.width);
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.rows[self.slot(i, j)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let s = self.slot(i, j);
        &mut self.rows[s]
    }

    fn last_col(&self, i: usize) -> usize {
        (i + self.ku + self.kl).min(self.n - 1)
    }

    fn eliminate(&mut self) -> Result<()> {
        let n = self.n;
        for k in 0..n {
            let rmax = (k + self.kl).min(n - 1);
            let mut p = k;
            let mut best = self.at(k, k).abs();
            for r in k + 1..=rmax {
                let v = self.at(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 {
                return Err(Error::NumericalFailure(format!("singular banded matrix at column {k}")));
            }
            self.pivots[k] = p;
            let cmax = self.last_col(k);
            if p != k {
                for j in k..=cmax {
                    let a = self.slot(k, j);
                    // Row p can reach every column row k reaches after fill.
                    let b = self.slot(p, j);
                    self.rows.swap(a, b);
                }
            }
            let pivot = self.at(k, k);
            for r in k + 1..=rmax {
                let f = self.at(r, k) / pivot;
                *self.at_mut(r, k) = f;
                if f != 0.0 {
                    for j in k + 1..=cmax {
                        let u = self.at(k, j);
                        *self.at_mut(r, j) -= f * u;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let rmax = (k + self.kl).min(n - 1);
            for r in k + 1..=rmax {
                b[r] -= self.at(r, k) * b[k];
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=self.last_col(k) {
                s -= self.at(k, j) * b[j];
            }
            b[k] = s / self.at(k, k);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(n: usize, kl: usize, ku: usize) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                // Weak diagonal forces row interchanges.
                a[i][j] = ((i * 7 + j * 3) % 11) as f64 - 5.0 + if i == j { 0.1 } else { 0.0 };
            }
        }
        a
    }

    #[test]
    fn pivoted_solve_matches_product() {
        for &(n, kl, ku) in &[(9, 1, 1), (12, 3, 3), (7, 2, 1)] {
            let a = dense(n, kl, ku);
            let lu = BandedLu::factor(n, kl, ku, |i, j| a[i][j]).unwrap();
            let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() + 0.5).collect();
            let mut b: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i][j] * x_true[j]).sum()).collect();
            lu.solve_in_place(&mut b);
            for i in 0..n {
                assert!((b[i] - x_true[i]).abs() < 1e-10, "n={n} kl={kl} ku={ku} i={i}");
            }
        }
    }
}
