//! Block Lanczos with full reorthogonalisation for the low end of a symmetric
//! spectrum.
//!
//! Every new basis block is orthogonalised twice against the whole basis, and
//! the projected matrix is assembled from the actual projection coefficients,
//! so the Rayleigh–Ritz step is exact for the basis in hand. A block of width
//! `b` resolves eigenvalues of multiplicity up to `b`. Breakdown (a residual
//! block losing rank) is handled by injecting fresh seeded random directions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::dense_eigh;
use super::matrix::{axpy, dot, norm2, DenseMatrix, DenseSym};
use super::sparse::SparseSym;
use super::{EigenDecomposition, SolverConfig, SymOperator};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LanczosConfig {
    pub block_size: usize,
    /// Residual tolerance relative to the operator norm bound.
    pub tol: f64,
    pub max_restarts: usize,
    /// Caps the Krylov basis size; defaults to the matrix order.
    pub max_basis: Option<usize>,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self {
            block_size: 4,
            tol: 1e-10,
            max_restarts: 3,
            max_basis: None,
        }
    }
}

/// The `k` smallest eigenpairs of `a`.
pub fn lanczos_smallest(a: &SparseSym, k: usize, seed: u64, cfg: &LanczosConfig) -> Result<EigenDecomposition> {
    lanczos_smallest_op(a, k, seed, cfg)
}

pub fn lanczos_smallest_op<A: SymOperator + ?Sized>(
    a: &A,
    k: usize,
    seed: u64,
    cfg: &LanczosConfig,
) -> Result<EigenDecomposition> {
    let n = a.n();
    if k > n {
        return Err(Error::invalid(format!(
            "requested {k} eigenpairs of an order-{n} operator"
        )));
    }
    if k == 0 {
        return Ok(EigenDecomposition {
            values: vec![],
            vectors: DenseMatrix::zeros(n, 0),
        });
    }
    let anorm = a.norm_bound().max(f64::MIN_POSITIVE);
    let width = cfg.block_size.clamp(1, n);
    let max_dim = cfg.max_basis.unwrap_or(n).clamp(k, n);
    let breakdown_tol = 1e3 * f64::EPSILON * anorm;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    // coef[j][i] = q_i . A q_j, computed while processing column j
    let mut coef: Vec<Vec<f64>> = Vec::new();
    let mut restarts = 0usize;
    let mut last_converged = 0usize;

    for _ in 0..width.min(max_dim) {
        let v = random_orthonormal(&mut rng, &basis, n);
        basis.push(v);
    }
    let mut block_start = 0;
    let mut next_check = (3 * k).max(8 * width).max(20).min(max_dim);

    loop {
        let block_end = basis.len();
        let mut residuals = Vec::with_capacity(block_end - block_start);
        for j in block_start..block_end {
            let mut w = vec![0.0; n];
            a.apply(&basis[j], &mut w);
            let mut c = vec![0.0; block_end];
            for _ in 0..2 {
                for (i, q) in basis.iter().enumerate() {
                    let h = dot(q, &w);
                    axpy(-h, q, &mut w);
                    c[i] += h;
                }
            }
            coef.push(c);
            residuals.push(w);
        }

        let exhausted = basis.len() >= max_dim;
        if basis.len() >= next_check || exhausted {
            let (dec, converged) = ritz(a, &basis, &coef, k, cfg.tol * anorm)?;
            last_converged = converged;
            if converged == k {
                return Ok(dec);
            }
            next_check = ((basis.len() as f64 * 1.25).ceil() as usize).min(max_dim);
        }
        if exhausted {
            return Err(Error::Unconverged {
                converged: last_converged,
                requested: k,
            });
        }

        block_start = basis.len();
        let room = max_dim - basis.len();
        for mut w in residuals.into_iter().take(room) {
            for _ in 0..2 {
                for q in &basis {
                    let h = dot(q, &w);
                    axpy(-h, q, &mut w);
                }
            }
            let nrm = norm2(&w);
            if nrm > breakdown_tol {
                w.iter_mut().for_each(|x| *x /= nrm);
                basis.push(w);
            } else {
                restarts += 1;
                if restarts > cfg.max_restarts {
                    let (dec, converged) = ritz(a, &basis, &coef, k, cfg.tol * anorm)?;
                    if converged == k {
                        return Ok(dec);
                    }
                    return Err(Error::LanczosBreakdown {
                        restarts: restarts - 1,
                        converged: converged.max(last_converged),
                        requested: k,
                    });
                }
                let v = random_orthonormal(&mut rng, &basis, n);
                basis.push(v);
            }
        }
    }
}

fn empty(n: usize) -> EigenDecomposition {
    EigenDecomposition {
        values: vec![],
        vectors: DenseMatrix::zeros(n, 0),
    }
}

fn random_orthonormal(rng: &mut ChaCha8Rng, basis: &[Vec<f64>], n: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for _ in 0..2 {
            for q in basis {
                let h = dot(q, &v);
                axpy(-h, q, &mut v);
            }
        }
        let nrm = norm2(&v);
        if nrm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nrm);
            return v;
        }
    }
}

/// Rayleigh–Ritz on the processed part of the basis (the first `coef.len()`
/// vectors). Returns the `k` lowest
/// Ritz pairs and how many leading pairs meet the residual bound.
fn ritz<A: SymOperator + ?Sized>(
    a: &A,
    basis: &[Vec<f64>],
    coef: &[Vec<f64>],
    k: usize,
    abs_tol: f64,
) -> Result<(EigenDecomposition, usize)> {
    let m = coef.len();
    let n = a.n();
    if m < k {
        return Ok((empty(n), 0));
    }
    let t = DenseSym::from_fn(m, |i, j| coef[i][j]);
    let small = dense_eigh(&t, &SolverConfig::default())?;
    let mut vectors = DenseMatrix::zeros(n, k);
    let mut converged = 0;
    let mut counting = true;
    let mut scratch = vec![0.0; n];
    for c in 0..k {
        let y = vectors.col_mut(c);
        for (j, q) in basis.iter().take(m).enumerate() {
            axpy(small.vectors.get(j, c), q, y);
        }
        let nrm = norm2(y);
        y.iter_mut().for_each(|x| *x /= nrm);
        a.apply(vectors.col(c), &mut scratch);
        axpy(-small.values[c], vectors.col(c), &mut scratch);
        if counting && norm2(&scratch) <= abs_tol {
            converged += 1;
        } else {
            counting = false;
        }
    }
    Ok((
        EigenDecomposition {
            values: small.values[..k].to_vec(),
            vectors,
        },
        converged,
    ))
}
