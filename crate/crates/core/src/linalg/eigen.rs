//! Lowest eigenpairs of a real symmetric tridiagonal matrix.
//!
//! Eigenvalues come from Sturm-sequence bisection; eigenvectors from inverse
//! iteration with a pivoted tridiagonal LU, re-orthogonalized against earlier
//! vectors of the same cluster.

use crate::error::{Error, Result};

/// Relative width at which a bisection interval is considered converged.
pub const BISECTION_RTOL: f64 = 1e-12;
/// Inverse-iteration residual target, relative to the matrix scale.
pub const RESIDUAL_RTOL: f64 = 1e-10;
const MAX_BISECTION_STEPS: usize = 200;
const MAX_INVERSE_ITERATIONS: usize = 8;
/// The residual test alone admits contamination of order `residual / gap`;
/// extra passes drive it to roundoff.
const MIN_INVERSE_ITERATIONS: usize = 3;
/// Eigenvalues closer than this fraction of the matrix norm share a cluster.
const CLUSTER_RTOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// Off-diagonal, `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::InvalidArgument(format!(
                "tridiagonal shape mismatch: {} diagonal, {} off-diagonal",
                diag.len(),
                off.len()
            )));
        }
        Ok(SymTridiagonal { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.off[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.off[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut s = self.diag[i] * v[i];
            if i > 0 {
                s += self.off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * v[i + 1];
            }
            out[i] = s;
        }
    }

    /// Number of eigenvalues strictly below `sigma`.
    pub fn sturm_count(&self, sigma: f64) -> usize {
        let pivmin = f64::MIN_POSITIVE * self.off.iter().fold(1.0_f64, |m, e| m.max(e * e));
        let mut count = 0;
        let mut q = self.diag[0] - sigma;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.len() {
            let e = self.off[i - 1];
            q = (self.diag[i] - sigma) - e * e / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }
}

/// Bisection for eigenvalues with indices `first..first + count`.
fn bisect_range(t: &SymTridiagonal, first: usize, count: usize) -> Result<Vec<f64>> {
    let (glo, ghi) = t.gershgorin();
    let pad = f64::EPSILON * t.norm().max(1.0) * 4.0;
    let mut lower = vec![glo - pad; count];
    let mut upper = vec![ghi + pad; count];
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let target = first + k;
        let (mut lo, mut hi) = (lower[k], upper[k]);
        if k > 0 {
            lo = lo.max(out[k - 1] - pad);
        }
        let mut steps = 0;
        loop {
            let mid = 0.5 * (lo + hi);
            let width = hi - lo;
            if width <= BISECTION_RTOL * mid.abs().max(1.0) || mid <= lo || mid >= hi {
                break;
            }
            steps += 1;
            if steps > MAX_BISECTION_STEPS {
                return Err(Error::NumericalFailure(format!(
                    "bisection for eigenvalue {target} did not converge in {MAX_BISECTION_STEPS} steps (interval [{lo}, {hi}])"
                )));
            }
            let c = t.sturm_count(mid);
            // Share the count with the later indices of this batch.
            for j in k + 1..count {
                if first + j < c {
                    upper[j] = upper[j].min(mid);
                } else {
                    lower[j] = lower[j].max(mid);
                }
            }
            if c > target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    Ok(out)
}

/// Pivoted LU of `T - shift I` for inverse iteration.
struct ShiftedLu {
    l: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swap: Vec<bool>,
}

impl ShiftedLu {
    fn new(t: &SymTridiagonal, shift: f64, tiny: f64) -> Self {
        let n = t.len();
        let mut l = t.off.clone();
        let mut d: Vec<f64> = t.diag.iter().map(|v| v - shift).collect();
        let mut du = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swap = vec![false; n.saturating_sub(1)];
        for i in 0..n - 1 {
            if d[i].abs() >= l[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let f = l[i] / d[i];
                l[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                let f = d[i] / l[i];
                d[i] = l[i];
                l[i] = f;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -f;
                }
                swap[i] = true;
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        for v in d.iter_mut() {
            if v.abs() < tiny {
                *v = tiny.copysign(*v);
            }
        }
        ShiftedLu { l, d, du, du2, swap }
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n - 1 {
            if self.swap[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.l[i] * b[i];
        }
        b[n - 1] /= self.d[n - 1];
        if n >= 2 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let nrm = dot(v, v).sqrt();
    if nrm > 0.0 {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    nrm
}

/// Deterministic, non-degenerate start vector.
fn start_vector(n: usize, salt: usize) -> Vec<f64> {
    let mut state = 0x9E37_79B9_7F4A_7C15_u64 ^ (salt as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            0.5 + (state >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

/// The `m` algebraically smallest eigenpairs, ascending. Vectors have unit
/// Euclidean norm and a positive component sum where that sum is
/// significant (sign convention only).
pub fn lowest_eigenpairs_sym(t: &SymTridiagonal, m: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    eigenpairs_range(t, 0, m, &[])
}

/// Eigenpairs `first..first + count`, orthogonalized against `previous`
/// (eigenpairs already computed for indices below `first`).
pub(crate) fn eigenpairs_range(
    t: &SymTridiagonal,
    first: usize,
    count: usize,
    previous: &[(f64, &[f64])],
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = t.len();
    if count == 0 || first + count > n {
        return Err(Error::InvalidArgument(format!(
            "requested eigenpairs {first}..{} of a {n}x{n} matrix",
            first + count
        )));
    }
    let values = bisect_range(t, first, count)?;
    let scale = t.norm().max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * scale;
    let cluster = CLUSTER_RTOL * scale;

    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut work = vec![0.0; n];
    for (k, &lambda) in values.iter().enumerate() {
        let lu = ShiftedLu::new(t, lambda, tiny);
        let mut v = start_vector(n, first + k);
        normalize(&mut v);
        let mut converged = false;
        let mut residual = f64::INFINITY;
        for iter in 0..MAX_INVERSE_ITERATIONS {
            lu.solve_in_place(&mut v);
            // Orthogonalize against earlier members of the cluster.
            for (mu, u) in previous
                .iter()
                .map(|(m, u)| (*m, *u))
                .chain(values[..k].iter().copied().zip(vectors.iter().map(|v| v.as_slice())))
            {
                if (mu - lambda).abs() <= cluster {
                    let c = dot(&v, u);
                    v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
                }
            }
            if normalize(&mut v) == 0.0 {
                v = start_vector(n, first + k + 7919);
                normalize(&mut v);
                continue;
            }
            t.apply(&v, &mut work);
            residual = work
                .iter()
                .zip(&v)
                .map(|(hv, x)| (hv - lambda * x).powi(2))
                .sum::<f64>()
                .sqrt();
            if residual <= RESIDUAL_RTOL * scale && iter + 1 >= MIN_INVERSE_ITERATIONS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NumericalFailure(format!(
                "inverse iteration for eigenvalue {} (= {lambda}) stalled at residual {residual:.3e} after {MAX_INVERSE_ITERATIONS} iterations (target {:.3e})",
                first + k,
                RESIDUAL_RTOL * scale
            )));
        }
        let s: f64 = v.iter().sum();
        let first_big = v.iter().copied().find(|x| x.abs() > 1e-3).unwrap_or(1.0);
        if s < -1e-8 || (s.abs() <= 1e-8 && first_big < 0.0) {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        vectors.push(v);
    }
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1D Laplacian: eigenvalues 2 - 2 cos(k pi / (n + 1)).
    fn laplacian(n: usize) -> SymTridiagonal {
        SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap()
    }

    #[test]
    fn sturm_count_brackets_known_spectrum() {
        let n = 50;
        let t = laplacian(n);
        for k in 1..=n {
            let lam = 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert_eq!(t.sturm_count(lam - 1e-9), k - 1);
            assert_eq!(t.sturm_count(lam + 1e-9), k);
        }
    }

    #[test]
    fn laplacian_pairs() {
        let n = 200;
        let t = laplacian(n);
        let (vals, vecs) = lowest_eigenpairs_sym(&t, 6).unwrap();
        for (k, (lam, v)) in vals.iter().zip(&vecs).enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((lam - exact).abs() < 2e-12, "k={k}");
            assert!((dot(v, v) - 1.0).abs() < 1e-13);
        }
        for i in 0..6 {
            for j in 0..i {
                assert!(dot(&vecs[i], &vecs[j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn degenerate_block_gives_orthogonal_vectors() {
        // Two decoupled identical blocks: every eigenvalue is doubled.
        let n = 40;
        let mut off = vec![-1.0; 2 * n - 1];
        off[n - 1] = 0.0;
        let t = SymTridiagonal::new(vec![2.0; 2 * n], off).unwrap();
        let (vals, vecs) = lowest_eigenpairs_sym(&t, 4).unwrap();
        assert!((vals[0] - vals[1]).abs() < 1e-12);
        for i in 0..4 {
            for j in 0..i {
                assert!(dot(&vecs[i], &vecs[j]).abs() < 1e-10, "{i} {j}");
            }
        }
    }

    #[test]
    fn range_continuation_matches_single_call() {
        let t = SymTridiagonal::new(
            (0..300).map(|i| 2.0 + (i as f64 * 0.01).powi(2)).collect(),
            vec![-1.0; 299],
        )
        .unwrap();
        let (all_v, all_x) = lowest_eigenpairs_sym(&t, 8).unwrap();
        let (head_v, head_x) = eigenpairs_range(&t, 0, 4, &[]).unwrap();
        let prev: Vec<(f64, &[f64])> = head_v
            .iter()
            .copied()
            .zip(head_x.iter().map(|v| v.as_slice()))
            .collect();
        let (tail_v, tail_x) = eigenpairs_range(&t, 4, 4, &prev).unwrap();
        for k in 0..4 {
            assert!((all_v[k + 4] - tail_v[k]).abs() < 1e-12);
            assert!((dot(&all_x[k + 4], &tail_x[k]).abs() - 1.0).abs() < 1e-10);
        }
    }
}
