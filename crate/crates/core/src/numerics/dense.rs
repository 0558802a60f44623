//! Dense symmetric eigensolver: Householder tridiagonalisation followed by the
//! QL iteration of [`super::tridiag`], with the transforms accumulated.

use super::matrix::{DenseMatrix, DenseSym};
use super::tridiag::{check_residuals, sort_pairs, tql2};
use super::{EigenDecomposition, SolverConfig};
use crate::error::{Error, Result};

pub fn dense_eigh(a: &DenseSym, cfg: &SolverConfig) -> Result<EigenDecomposition> {
    let n = a.n();
    if n == 0 {
        return Err(Error::invalid("dense_eigh requires n >= 1"));
    }
    if !a.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let (mut d, mut e, v) = tred2(a);
    // tred2 leaves V row-major; tql2 rotates columns of a column-major matrix
    let mut z = DenseMatrix::from_raw(n, n, v).transpose();
    tql2(&mut d, &mut e, Some(&mut z), cfg.ql_iteration_cap)?;
    let dec = sort_pairs(d, z);
    let norm = a.norm_inf();
    check_residuals(&dec, |x| a.mul_vec(x), norm, cfg.residual_tol)?;
    Ok(dec)
}

/// Eigenvalues only.
pub fn dense_eigvals(a: &DenseSym, cfg: &SolverConfig) -> Result<Vec<f64>> {
    if a.n() == 0 {
        return Err(Error::invalid("dense_eigvals requires n >= 1"));
    }
    let (mut d, mut e, _) = tred2(a);
    tql2(&mut d, &mut e, None, cfg.ql_iteration_cap)?;
    d.sort_by(|x, y| x.total_cmp(y));
    Ok(d)
}

/// Householder reduction to tridiagonal form (JAMA/EISPACK `tred2`).
/// Returns the diagonal, the subdiagonal in `e[1..]`, and the accumulated
/// orthogonal transform in row-major order.
fn tred2(a: &DenseSym) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = a.n();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            v[i * n + j] = a.get(i, j);
        }
    }
    let mut d: Vec<f64> = (0..n).map(|j| v[(n - 1) * n + j]).collect();
    let mut e = vec![0.0; n];

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in &d[..i] {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
                v[j * n + i] = 0.0;
            }
        } else {
            for dk in &mut d[..i] {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in &mut e[..i] {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j * n + i] = f;
                g = e[j] + v[j * n + j] * f;
                for k in j + 1..i {
                    g += v[k * n + j] * d[k];
                    e[k] += v[k * n + j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k * n + j] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k * n + i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k * n + i + 1] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = 0.0;
    }
    v[(n - 1) * n + (n - 1)] = 1.0;
    e[0] = 0.0;
    (d, e, v)
}
