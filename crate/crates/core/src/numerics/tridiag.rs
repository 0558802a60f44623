//! Symmetric tridiagonal eigensolvers.
//!
//! Two routes are provided. [`tridiag_eigh`] is the implicit-shift QL iteration
//! with accumulated rotations and returns the complete decomposition. For the
//! long 1D Hamiltonians only a low window of the spectrum is needed, and
//! [`tridiag_lowest`] gets it in `O(n k)` by Sturm-sequence bisection followed by
//! inverse iteration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::{axpy, dot, norm2, DenseMatrix};
use super::{EigenDecomposition, SolverConfig};
use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiag {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::invalid("tridiagonal matrix must have n >= 1"));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::invalid(format!(
                "off-diagonal length {} does not match n - 1 = {}",
                offdiag.len(),
                diag.len() - 1
            )));
        }
        if diag.iter().chain(&offdiag).any(|x| !x.is_finite()) {
            return Err(Error::invalid("tridiagonal entries must be finite"));
        }
        Ok(Self { diag, offdiag })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for i in 0..n - 1 {
            let e = self.offdiag[i];
            y[i] += e * x[i + 1];
            y[i + 1] += e * x[i];
        }
        y
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.n();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.offdiag[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    pub fn norm(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE)
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = f64::MIN_POSITIVE.max(f64::EPSILON * self.norm() * 1e-3);
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.n() {
            let e = self.offdiag[i - 1];
            q = self.diag[i] - x - e * e / q;
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

/// Full eigendecomposition by implicit-shift QL with Wilkinson shifts.
pub fn tridiag_eigh(t: &SymTridiag, cfg: &SolverConfig) -> Result<EigenDecomposition> {
    let n = t.n();
    let mut d = t.diag.clone();
    let mut e = vec![0.0; n];
    e[1..].copy_from_slice(&t.offdiag);
    let mut z = DenseMatrix::identity(n);
    tql2(&mut d, &mut e, Some(&mut z), cfg.ql_iteration_cap)?;
    let dec = sort_pairs(d, z);
    check_residuals(&dec, |v| t.mul_vec(v), t.norm(), cfg.residual_tol)?;
    Ok(dec)
}

/// Eigenvalues only, by the same QL iteration.
pub fn tridiag_eigvals(t: &SymTridiag, cfg: &SolverConfig) -> Result<Vec<f64>> {
    let n = t.n();
    let mut d = t.diag.clone();
    let mut e = vec![0.0; n];
    e[1..].copy_from_slice(&t.offdiag);
    tql2(&mut d, &mut e, None, cfg.ql_iteration_cap)?;
    d.sort_by(|a, b| a.total_cmp(b));
    Ok(d)
}

/// EISPACK-style QL iteration on `d` (diagonal) and `e` (subdiagonal stored in
/// `e[1..]`). Rotations are accumulated into the columns of `z` when given.
pub(crate) fn tql2(d: &mut [f64], e: &mut [f64], mut z: Option<&mut DenseMatrix>, iteration_cap: usize) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > iteration_cap {
                    return Err(Error::NoConvergence {
                        index: l,
                        iterations: iteration_cap,
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        rotate_columns(z, i, c, s);
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[inline]
fn rotate_columns(z: &mut DenseMatrix, i: usize, c: f64, s: f64) {
    let (left, right) = z.adjacent_columns_mut(i);
    for (l, r) in left.iter_mut().zip(right.iter_mut()) {
        let h = *r;
        *r = s * *l + c * h;
        *l = c * *l - s * h;
    }
}

pub(crate) fn sort_pairs(d: Vec<f64>, z: DenseMatrix) -> EigenDecomposition {
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = DenseMatrix::from_fn(z.nrows(), order.len(), |i, j| z.get(i, order[j]));
    EigenDecomposition { values, vectors }
}

pub(crate) fn check_residuals(
    dec: &EigenDecomposition,
    apply: impl Fn(&[f64]) -> Vec<f64>,
    norm: f64,
    tol: f64,
) -> Result<()> {
    for (k, (&lambda, v)) in dec.values.iter().zip(dec.vectors.columns()).enumerate() {
        let mut r = apply(v);
        axpy(-lambda, v, &mut r);
        let res = norm2(&r);
        let bound = tol * norm.max(1.0) * norm2(v).max(f64::MIN_POSITIVE);
        if !(res <= bound) {
            return Err(Error::ResidualTooLarge {
                index: k,
                residual: res,
                tolerance: bound,
            });
        }
    }
    Ok(())
}

/// Eigenvalue with index `k` (0-based, ascending) by Sturm bisection.
pub fn tridiag_bisect(t: &SymTridiag, k: usize) -> f64 {
    let (mut lo, mut hi) = t.gershgorin();
    let width = (hi - lo).abs().max(t.norm());
    lo -= 1e-12 * width;
    hi += 1e-12 * width;
    for _ in 0..256 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            break;
        }
        if t.count_below(mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All eigenpairs with eigenvalue `<= upper`, by bisection and inverse
/// iteration. Vectors are Euclidean-orthonormal.
pub fn tridiag_lowest(t: &SymTridiag, upper: f64, cfg: &SolverConfig) -> Result<EigenDecomposition> {
    // count_below is strict; nudge so that eigenvalues equal to `upper` count
    let nudge = upper.abs().max(1.0) * 4.0 * f64::EPSILON;
    let count = t.count_below(upper + nudge);
    tridiag_smallest(t, count, cfg)
}

/// The `k` smallest eigenpairs, by bisection and inverse iteration.
pub fn tridiag_smallest(t: &SymTridiag, k: usize, cfg: &SolverConfig) -> Result<EigenDecomposition> {
    let n = t.n();
    if k > n {
        return Err(Error::invalid(format!(
            "requested {k} eigenpairs of an order-{n} matrix"
        )));
    }
    let values: Vec<f64> = (0..k).map(|i| tridiag_bisect(t, i)).collect();
    let norm = t.norm();
    let cluster_gap = 1e-3 * norm;
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut rng = ChaCha8Rng::seed_from_u64(0x7269_6469_6167);
    for (i, &lambda) in values.iter().enumerate() {
        let lu = ShiftedLu::factor(t, lambda);
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let first_in_cluster = (0..i)
            .rev()
            .take_while(|&j| (lambda - values[j]).abs() <= cluster_gap)
            .last()
            .unwrap_or(i);
        for _ in 0..3 {
            lu.solve(&mut x);
            for prev in &vectors[first_in_cluster..i] {
                let c = dot(prev, &x);
                axpy(-c, prev, &mut x);
            }
            let nrm = norm2(&x);
            if !(nrm > 0.0 && nrm.is_finite()) {
                return Err(Error::NoConvergence {
                    index: i,
                    iterations: 3,
                });
            }
            x.iter_mut().for_each(|v| *v /= nrm);
        }
        vectors.push(x);
    }
    let dec = EigenDecomposition {
        values,
        vectors: DenseMatrix::from_columns(n, &vectors)?,
    };
    check_residuals(&dec, |v| t.mul_vec(v), norm, cfg.residual_tol)?;
    Ok(dec)
}

/// LU factorisation with partial pivoting of `T - shift I`.
struct ShiftedLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn factor(t: &SymTridiag, shift: f64) -> Self {
        let n = t.n();
        let mut dl = t.offdiag.clone();
        let mut du = t.offdiag.clone();
        let mut d: Vec<f64> = t.diag.iter().map(|v| v - shift).collect();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        let tiny = f64::EPSILON * t.norm();
        for v in d.iter_mut() {
            if v.abs() < tiny {
                *v = if *v < 0.0 { -tiny } else { tiny };
            }
        }
        Self {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let tmp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = tmp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn laplacian(n: usize) -> SymTridiag {
        SymTridiag::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap()
    }

    #[test]
    fn one_by_one() {
        let t = SymTridiag::new(vec![2.0], vec![]).unwrap();
        let dec = tridiag_eigh(&t, &SolverConfig::default()).unwrap();
        assert_eq!(dec.values, vec![2.0]);
        assert_eq!(dec.vectors.get(0, 0).abs(), 1.0);
    }

    #[test]
    fn two_by_two_symmetric() {
        let t = SymTridiag::new(vec![0.0, 0.0], vec![1.0]).unwrap();
        let dec = tridiag_eigh(&t, &SolverConfig::default()).unwrap();
        assert!((dec.values[0] + 1.0).abs() < 1e-15);
        assert!((dec.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dirichlet_stencil_closed_form() {
        let dec = tridiag_eigh(&laplacian(3), &SolverConfig::default()).unwrap();
        let want = [2.0 - 2f64.sqrt(), 2.0, 2.0 + 2f64.sqrt()];
        for (got, want) in dec.values.iter().zip(want) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
    }

    #[test]
    fn bisection_agrees_with_ql() {
        let n = 200;
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + ((i * 7) % 11) as f64 * 0.1).collect();
        let t = SymTridiag::new(diag, vec![-1.0; n - 1]).unwrap();
        let cfg = SolverConfig::default();
        let full = tridiag_eigh(&t, &cfg).unwrap();
        let low = tridiag_smallest(&t, 25, &cfg).unwrap();
        for k in 0..25 {
            assert!((full.values[k] - low.values[k]).abs() < 1e-12);
            let overlap = dot(full.vectors.col(k), low.vectors.col(k)).abs();
            assert!((overlap - 1.0).abs() < 1e-9, "k={k} overlap={overlap}");
        }
        assert!(low.vectors.gram_deviation(1.0) < 1e-10);
    }

    #[test]
    fn lowest_window_respects_threshold() {
        let n = 50;
        let t = laplacian(n);
        let cfg = SolverConfig::default();
        let dec = tridiag_lowest(&t, 0.1, &cfg).unwrap();
        let expected = (1..=n)
            .filter(|&k| 2.0 - 2.0 * (k as f64 * PI / (n as f64 + 1.0)).cos() <= 0.1)
            .count();
        assert_eq!(dec.values.len(), expected);
    }

    #[test]
    fn trace_is_preserved() {
        let n = 300;
        let diag: Vec<f64> = (0..n).map(|i| (i as f64).sin() * 3.0).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| (i as f64 * 0.3).cos()).collect();
        let t = SymTridiag::new(diag, off).unwrap();
        let vals = tridiag_eigvals(&t, &SolverConfig::default()).unwrap();
        let sum: f64 = vals.iter().sum();
        assert!((sum - t.trace()).abs() <= 1e-8 * t.trace().abs().max(1.0));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(SymTridiag::new(vec![], vec![]).is_err());
        assert!(SymTridiag::new(vec![1.0, 2.0], vec![]).is_err());
        assert!(SymTridiag::new(vec![f64::NAN], vec![]).is_err());
    }
}
