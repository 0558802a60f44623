//! Generalised symmetric-definite eigenproblems `A v = mu B v` by Cholesky
//! reduction of `B`.

use super::dense::dense_eigh;
use super::matrix::{axpy, norm2, DenseMatrix, DenseSym};
use super::{EigenDecomposition, SolverConfig};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extreme {
    Min,
    Max,
}

/// Lower-triangular Cholesky factor `B = L L^T`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    pub fn factor(b: &DenseSym) -> Result<Self> {
        let n = b.n();
        let scale = (0..n).map(|i| b.get(i, i).abs()).fold(0.0, f64::max);
        let floor = scale * f64::EPSILON * n as f64;
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut diag = b.get(j, j);
            for k in 0..j {
                diag -= l.get(j, k) * l.get(j, k);
            }
            if !(diag > floor) {
                return Err(Error::NotPositiveDefinite { pivot: j, value: diag });
            }
            let ljj = diag.sqrt();
            l.set(j, j, ljj);
            for i in j + 1..n {
                let mut s = b.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / ljj);
            }
        }
        Ok(Self { l })
    }

    pub fn n(&self) -> usize {
        self.l.nrows()
    }

    pub fn factor_matrix(&self) -> &DenseMatrix {
        &self.l
    }

    /// Solves `L x = b` in place.
    pub fn solve_lower(&self, x: &mut [f64]) {
        let n = self.n();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l.get(i, k) * x[k];
            }
            x[i] = s / self.l.get(i, i);
        }
    }

    /// Solves `L^T x = b` in place.
    pub fn solve_upper(&self, x: &mut [f64]) {
        let n = self.n();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l.get(k, i) * x[k];
            }
            x[i] = s / self.l.get(i, i);
        }
    }

    /// Solves `B x = b` in place.
    pub fn solve(&self, x: &mut [f64]) {
        self.solve_lower(x);
        self.solve_upper(x);
    }

    /// `L^{-1} A L^{-T}`.
    pub fn reduce(&self, a: &DenseSym) -> DenseSym {
        let n = self.n();
        // X = L^{-1} A, column by column
        let mut x = a.to_dense();
        for j in 0..n {
            self.solve_lower(x.col_mut(j));
        }
        // C = L^{-1} X^T
        let mut c = x.transpose();
        for j in 0..n {
            self.solve_lower(c.col_mut(j));
        }
        DenseSym::from_fn(n, |i, j| 0.5 * (c.get(i, j) + c.get(j, i)))
    }
}

/// All generalised eigenpairs, ascending, with `B`-orthonormal vectors.
pub fn gen_eigh(a: &DenseSym, b: &DenseSym, cfg: &SolverConfig) -> Result<EigenDecomposition> {
    if a.n() != b.n() || a.n() == 0 {
        return Err(Error::invalid("generalised eigenproblem needs equal nonzero orders"));
    }
    let chol = Cholesky::factor(b)?;
    let reduced = chol.reduce(a);
    let mut dec = dense_eigh(&reduced, cfg)?;
    for j in 0..dec.values.len() {
        chol.solve_upper(dec.vectors.col_mut(j));
    }
    Ok(dec)
}

/// Extreme generalised eigenvalue of `A v = mu B v` and its `B`-normalised
/// vector.
pub fn gen_eig_extreme(a: &DenseSym, b: &DenseSym, which: Extreme, cfg: &SolverConfig) -> Result<(f64, Vec<f64>)> {
    let dec = gen_eigh(a, b, cfg)?;
    let idx = match which {
        Extreme::Min => 0,
        Extreme::Max => dec.values.len() - 1,
    };
    let mu = dec.values[idx];
    let v = dec.vectors.col(idx).to_vec();
    let mut r = a.mul_vec(&v);
    axpy(-mu, &b.mul_vec(&v), &mut r);
    let scale = a.norm_inf() + mu.abs() * b.norm_inf();
    let bound = cfg.residual_tol * scale.max(f64::MIN_POSITIVE) * norm2(&v).max(1.0) * 10.0;
    let res = norm2(&r);
    if !(res <= bound) {
        return Err(Error::ResidualTooLarge {
            index: idx,
            residual: res,
            tolerance: bound,
        });
    }
    Ok((mu, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix::dot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DenseSym {
        let g = DenseMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let gtg = g.transpose().matmul(&g);
        DenseSym::from_fn(n, |i, j| gtg.get(i, j) + if i == j { 0.5 } else { 0.0 })
    }

    #[test]
    fn identity_pair() {
        let cfg = SolverConfig::default();
        let i = DenseSym::identity(4);
        for which in [Extreme::Min, Extreme::Max] {
            let (mu, _) = gen_eig_extreme(&i, &i, which, &cfg).unwrap();
            assert!((mu - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_max() {
        let a = DenseSym::diagonal(&[1.0, 4.0]);
        let (mu, v) = gen_eig_extreme(&a, &DenseSym::identity(2), Extreme::Max, &SolverConfig::default()).unwrap();
        assert!((mu - 4.0).abs() < 1e-14);
        assert!((v[1].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn indefinite_b_reports_pivot() {
        let b = DenseSym::diagonal(&[1.0, 2.0, -1.0]);
        match gen_eig_extreme(&b, &b, Extreme::Max, &SolverConfig::default()) {
            Err(Error::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    /// Oracle route: the spectral square root `B^{-1/2}` from a plain symmetric
    /// eigendecomposition of `B`, independent of the Cholesky path.
    #[test]
    fn random_spd_pair_matches_spectral_square_root_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let cfg = SolverConfig::default();
        for _ in 0..5 {
            let a = {
                let m = random_spd(10, &mut rng);
                DenseSym::from_fn(10, |i, j| m.get(i, j) - if i == j { 3.0 } else { 0.0 })
            };
            let b = random_spd(10, &mut rng);
            let eb = dense_eigh(&b, &cfg).unwrap();
            let inv_sqrt = DenseMatrix::from_fn(10, 10, |i, j| {
                (0..10)
                    .map(|k| eb.vectors.get(i, k) * eb.vectors.get(j, k) / eb.values[k].sqrt())
                    .sum()
            });
            let c = inv_sqrt.matmul(&a.to_dense()).matmul(&inv_sqrt);
            let oracle = dense_eigh(&DenseSym::from_lower(&c).unwrap(), &cfg).unwrap();
            let (max, v) = gen_eig_extreme(&a, &b, Extreme::Max, &cfg).unwrap();
            let (min, _) = gen_eig_extreme(&a, &b, Extreme::Min, &cfg).unwrap();
            assert!((max - oracle.values[9]).abs() <= 1e-10 * max.abs().max(1.0));
            assert!((min - oracle.values[0]).abs() <= 1e-10 * min.abs().max(1.0));
            assert!((dot(&v, &b.mul_vec(&v)) - 1.0).abs() < 1e-10);
        }
    }
}
