use std::borrow::Cow;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::hamiltonian::Hamiltonian;
use crate::blob::{read_file, BlobReader, BlobWriter};
use crate::error::{Error, Result};
use crate::numerics::{lanczos_smallest_op, tridiag_lowest, DenseMatrix, LanczosConfig, SolverConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenConfig {
    /// Fraction harvested above the requested threshold.
    pub buffer: f64,
    pub solver: SolverConfig,
    #[serde(skip)]
    pub lanczos: LanczosConfig,
    pub seed: u64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            buffer: 0.2,
            solver: SolverConfig::default(),
            lanczos: LanczosConfig::default(),
            seed: 0x5eed,
        }
    }
}

/// Product eigenvectors `u(x0, x1) = first_a(x0) second_b(x1)`.
#[derive(Clone, Debug)]
pub struct TensorBasis {
    pub first: DenseMatrix,
    pub second: DenseMatrix,
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub enum Basis {
    Dense(DenseMatrix),
    Tensor(TensorBasis),
}

/// Ascending eigenpairs normalised in `<u, v> = sum h^d u v`.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    values: Vec<f64>,
    basis: Basis,
    grid: Grid,
    potential: String,
    harvest_limit: f64,
}

impl Eigensystem {
    /// Builds a system from weighted-orthonormal columns.
    pub fn from_parts(
        values: Vec<f64>,
        basis: Basis,
        grid: Grid,
        potential: impl Into<String>,
        harvest_limit: f64,
    ) -> Result<Self> {
        let (rows, cols) = match &basis {
            Basis::Dense(m) => (m.nrows(), m.ncols()),
            Basis::Tensor(t) => (t.first.nrows() * t.second.nrows(), t.pairs.len()),
        };
        if rows != grid.len() || cols != values.len() {
            return Err(Error::invalid(format!(
                "basis is {rows} x {cols}, grid has {} points and there are {} values",
                grid.len(),
                values.len()
            )));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("eigenvalues must be ascending"));
        }
        Ok(Self {
            values,
            basis,
            grid,
            potential: potential.into(),
            harvest_limit,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn potential(&self) -> &str {
        &self.potential
    }

    /// Every eigenvalue up to this energy has been harvested.
    pub fn harvest_limit(&self) -> f64 {
        self.harvest_limit
    }

    pub fn vector(&self, k: usize) -> Cow<'_, [f64]> {
        match &self.basis {
            Basis::Dense(m) => Cow::Borrowed(m.col(k)),
            Basis::Tensor(t) => {
                let (a, b) = t.pairs[k];
                let (u, v) = (t.first.col(a), t.second.col(b));
                let mut out = Vec::with_capacity(u.len() * v.len());
                for vb in v {
                    out.extend(u.iter().map(|ua| ua * vb));
                }
                Cow::Owned(out)
            }
        }
    }

    /// `N(lambda)`, counted with multiplicity.
    pub fn counting_function(&self, lambda: f64) -> Result<usize> {
        self.check_threshold(lambda)?;
        Ok(self.values.partition_point(|&v| v <= lambda))
    }

    pub fn subspace(&self, lambda: f64) -> Result<SpectralSubspace<'_>> {
        let dim = self.counting_function(lambda)?;
        Ok(SpectralSubspace {
            sys: self,
            threshold: lambda,
            dim,
        })
    }

    fn check_threshold(&self, lambda: f64) -> Result<()> {
        if lambda > self.harvest_limit {
            return Err(Error::BeyondHarvest {
                requested: lambda,
                limit: self.harvest_limit,
            });
        }
        Ok(())
    }

    /// Largest `max_k |(H v_k - lambda_k v_k)|` in the weighted norm, relative
    /// to `max(||H||, 1)`.
    pub fn max_residual(&self, h: &Hamiltonian) -> f64 {
        let scale = h.norm_bound().max(1.0);
        (0..self.len())
            .map(|k| {
                let v = self.vector(k);
                let mut r = h.mul_vec(&v);
                for (ri, vi) in r.iter_mut().zip(v.iter()) {
                    *ri -= self.values[k] * vi;
                }
                self.grid.norm(&r) / scale
            })
            .fold(0.0, f64::max)
    }

    /// `max |<v_j, v_k> - delta_jk|` in the weighted inner product.
    pub fn orthonormality_defect(&self) -> f64 {
        let vs: Vec<Cow<'_, [f64]>> = (0..self.len()).map(|k| self.vector(k)).collect();
        let mut worst: f64 = 0.0;
        for j in 0..vs.len() {
            for k in 0..=j {
                let want = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((self.grid.inner(&vs[j], &vs[k]) - want).abs());
            }
        }
        worst
    }

    /// Dense copy of the leading `k` vectors.
    pub fn dense_vectors(&self, k: usize) -> DenseMatrix {
        match &self.basis {
            Basis::Dense(m) => {
                let mut m = m.clone();
                m.truncate_columns(k);
                m
            }
            Basis::Tensor(_) => {
                let cols: Vec<Vec<f64>> = (0..k).map(|j| self.vector(j).into_owned()).collect();
                DenseMatrix::from_columns(self.grid.len(), &cols).expect("consistent column lengths")
            }
        }
    }

    const MAGIC: &'static [u8; 8] = b"SPLEIGEN";
    const VERSION: u32 = 1;

    /// Binary cache: header (d, n, L, harvest limit, descriptor, count, length),
    /// then values and column-major vectors, little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = BlobWriter::new(Self::MAGIC, Self::VERSION);
        w.u32(self.grid.dim() as u32)
            .u32(self.grid.n_axis() as u32)
            .f64(self.grid.half_width())
            .f64(self.harvest_limit)
            .str(&self.potential)
            .u64(self.len() as u64)
            .u64(self.grid.len() as u64)
            .f64s(&self.values);
        for k in 0..self.len() {
            w.f64s(&self.vector(k));
        }
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let mut r = BlobReader::open("eigensystem cache", data, Self::MAGIC, Self::VERSION)?;
        let dim = r.u32()? as usize;
        let n = r.u32()? as usize;
        let half_width = r.f64()?;
        let limit = r.f64()?;
        let potential = r.str()?;
        let count = r.u64()? as usize;
        let len = r.u64()? as usize;
        let grid = Grid::new(dim, half_width, n).map_err(|e| r.bad(e.to_string()))?;
        if len != grid.len() {
            return Err(r.bad(format!("vector length {len} does not match the grid")));
        }
        let values = r.f64s(count)?;
        let total = count.checked_mul(len).ok_or_else(|| r.bad("size overflow"))?;
        let vectors = r.f64s(total)?;
        r.finish()?;
        Self::from_parts(
            values,
            Basis::Dense(DenseMatrix::from_raw(len, count, vectors)),
            grid,
            potential,
            limit,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?)
    }
}

/// `Ran P_lambda(H)` within a harvested system.
#[derive(Clone, Copy, Debug)]
pub struct SpectralSubspace<'a> {
    sys: &'a Eigensystem,
    threshold: f64,
    dim: usize,
}

impl<'a> SpectralSubspace<'a> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn system(&self) -> &'a Eigensystem {
        self.sys
    }

    pub fn values(&self) -> &'a [f64] {
        &self.sys.values[..self.dim]
    }

    pub fn vector(&self, k: usize) -> Cow<'a, [f64]> {
        assert!(k < self.dim, "member {k} out of range {}", self.dim);
        self.sys.vector(k)
    }

    /// `sum_k a_k v_k`.
    pub fn combine(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.sys.grid.len()];
        for (k, c) in coeffs.iter().enumerate().take(self.dim) {
            for (o, v) in out.iter_mut().zip(self.vector(k).iter()) {
                *o += c * v;
            }
        }
        out
    }
}

/// All eigenpairs with `lambda_k <= lambda_max (1 + buffer)`.
pub fn eigendecompose(
    h: &Hamiltonian,
    grid: &Grid,
    potential: impl Into<String>,
    lambda_max: f64,
    cfg: &EigenConfig,
) -> Result<Eigensystem> {
    if h.n() != grid.len() {
        return Err(Error::invalid("Hamiltonian order does not match the grid"));
    }
    if !(lambda_max.is_finite() && cfg.buffer >= 0.0) {
        return Err(Error::invalid("lambda_max must be finite and the buffer nonnegative"));
    }
    let upper = lambda_max + cfg.buffer * lambda_max.abs();
    let mut dec = match h {
        Hamiltonian::Tridiag(t) => tridiag_lowest(t, upper, &cfg.solver)?,
        Hamiltonian::Sparse(s) => {
            let n = s.n();
            let mut k = 16.min(n);
            loop {
                let dec = lanczos_smallest_op(s, k, cfg.seed, &cfg.lanczos)?;
                if dec.values.last().is_some_and(|&v| v > upper) || k == n {
                    break dec;
                }
                k = (2 * k).min(n);
            }
        }
    };
    let keep = dec.values.partition_point(|&v| v <= upper);
    if keep == 0 {
        return Err(Error::Unconverged {
            converged: 0,
            requested: 1,
        });
    }
    dec.values.truncate(keep);
    dec.vectors.truncate_columns(keep);
    dec.vectors.scale(grid.weight().sqrt().recip());
    Eigensystem::from_parts(dec.values, Basis::Dense(dec.vectors), grid.clone(), potential, upper)
}

/// Eigenpairs of `H1 ⊗ I + I ⊗ H2` up to `lambda_max`, from two 1D systems on
/// the same axis grid. `first` acts on axis 0.
pub fn tensor_compose(first: &Eigensystem, second: &Eigensystem, lambda_max: f64) -> Result<Eigensystem> {
    let (g1, g2) = (first.grid(), second.grid());
    if g1.dim() != 1 || g2.dim() != 1 {
        return Err(Error::invalid("tensor_compose takes two 1D systems"));
    }
    if g1 != g2 {
        return Err(Error::invalid("tensor_compose needs identical axis grids"));
    }
    if first.is_empty() || second.is_empty() {
        return Err(Error::EmptySubspace);
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (a, la) in first.values().iter().enumerate() {
        for (b, lb) in second.values().iter().enumerate() {
            if la + lb <= lambda_max {
                pairs.push((a, b));
            }
        }
    }
    let sum = |&(a, b): &(usize, usize)| first.values[a] + second.values[b];
    pairs.sort_by(|p, q| sum(p).total_cmp(&sum(q)).then(p.cmp(q)));
    let values = pairs.iter().map(sum).collect();
    let limit = lambda_max
        .min(first.harvest_limit + second.values[0])
        .min(second.harvest_limit + first.values[0]);
    let matrix = |s: &Eigensystem| match &s.basis {
        Basis::Dense(m) => m.clone(),
        Basis::Tensor(_) => unreachable!("1D systems are dense"),
    };
    let grid = Grid::new(2, g1.half_width(), g1.n_axis())?;
    Eigensystem::from_parts(
        values,
        Basis::Tensor(TensorBasis {
            first: matrix(first),
            second: matrix(second),
            pairs,
        }),
        grid,
        format!("tensor[{} | {}]", first.potential, second.potential),
        limit,
    )
}
