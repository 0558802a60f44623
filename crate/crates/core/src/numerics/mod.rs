//! Symmetric eigenvalue kernels shared by every other module.

mod dense;
mod fit;
mod geneig;
mod lanczos;
mod matrix;
mod sparse;
mod tridiag;

pub use dense::{dense_eigh, dense_eigvals};
pub use fit::{fit_line, fit_loglog};
pub use geneig::{gen_eig_extreme, gen_eigh, Cholesky, Extreme};
pub use lanczos::{lanczos_smallest, lanczos_smallest_op, LanczosConfig};
pub use matrix::{axpy, dot, norm2, DenseMatrix, DenseSym};
pub use sparse::SparseSym;
pub use tridiag::{tridiag_bisect, tridiag_eigh, tridiag_eigvals, tridiag_lowest, tridiag_smallest, SymTridiag};

use serde::{Deserialize, Serialize};

/// Ascending eigenvalues with matching eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Residual bound `||A v - lambda v|| <= tol ||A||`.
    pub residual_tol: f64,
    /// QL sweeps allowed per eigenvalue.
    pub ql_iteration_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-10,
            ql_iteration_cap: 50,
        }
    }
}

/// A symmetric linear operator.
pub trait SymOperator: Sync {
    fn n(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Upper bound on the spectral radius.
    fn norm_bound(&self) -> f64;
}

impl SymOperator for SparseSym {
    fn n(&self) -> usize {
        SparseSym::n(self)
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec_into(x, y)
    }
    fn norm_bound(&self) -> f64 {
        self.norm_inf()
    }
}

impl SymOperator for SymTridiag {
    fn n(&self) -> usize {
        SymTridiag::n(self)
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.mul_vec(x));
    }
    fn norm_bound(&self) -> f64 {
        self.norm()
    }
}

impl SymOperator for DenseSym {
    fn n(&self) -> usize {
        DenseSym::n(self)
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.mul_vec(x));
    }
    fn norm_bound(&self) -> f64 {
        self.norm_inf()
    }
}
