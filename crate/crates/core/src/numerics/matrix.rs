//! Dense storage: a general column-major matrix and a packed symmetric matrix.

use crate::error::{Error, Result};

/// Column-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(nrows * ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                data.push(f(i, j));
            }
        }
        Self { nrows, ncols, data }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(nrows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(nrows * columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != nrows {
                return Err(Error::invalid(format!(
                    "column {j} has length {}, expected {nrows}",
                    c.len()
                )));
            }
            data.extend_from_slice(c);
        }
        Ok(Self {
            nrows,
            ncols: columns.len(),
            data,
        })
    }

    pub(crate) fn from_raw(nrows: usize, ncols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), nrows * ncols);
        Self { nrows, ncols, data }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nrows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.nrows + i] = v;
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    /// Columns `j` and `j + 1` as disjoint mutable slices.
    pub fn adjacent_columns_mut(&mut self, j: usize) -> (&mut [f64], &mut [f64]) {
        let n = self.nrows;
        self.data[j * n..(j + 2) * n].split_at_mut(n)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.nrows.max(1)).take(self.ncols)
    }

    /// Keeps only the first `k` columns.
    pub fn truncate_columns(&mut self, k: usize) {
        let k = k.min(self.ncols);
        self.data.truncate(k * self.nrows);
        self.ncols = k;
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|x| *x *= factor);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                axpy(xj, self.col(j), &mut y);
            }
        }
        y
    }

    /// `self^T * x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        self.columns().map(|c| dot(c, x)).collect()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.ncols, other.nrows);
        let mut out = DenseMatrix::zeros(self.nrows, other.ncols);
        for j in 0..other.ncols {
            let dst = &mut out.data[j * self.nrows..(j + 1) * self.nrows];
            for k in 0..self.ncols {
                let b = other.get(k, j);
                if b != 0.0 {
                    axpy(b, &self.data[k * self.nrows..(k + 1) * self.nrows], dst);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.ncols, self.nrows, |i, j| self.get(j, i))
    }

    /// Frobenius norm of `self^T W self - I` where `W` is a scalar weight.
    pub fn gram_deviation(&self, weight: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.ncols {
            for j in 0..self.ncols {
                let g = weight * dot(self.col(i), self.col(j));
                let d = if i == j { g - 1.0 } else { g };
                acc += d * d;
            }
        }
        acc.sqrt()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Symmetric matrix storing only the lower triangle, packed by rows.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseSym {
    n: usize,
    lower: Vec<f64>,
}

impl DenseSym {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            lower: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// `f` is called for `i >= j` only.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut lower = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                lower.push(f(i, j));
            }
        }
        Self { n, lower }
    }

    /// Takes the lower triangle of a square dense matrix.
    pub fn from_lower(m: &DenseMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::invalid("symmetric matrix must be square"));
        }
        Ok(Self::from_fn(m.nrows(), |i, j| m.get(i, j)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn index(i: usize, j: usize) -> usize {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        r * (r + 1) / 2 + c
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[Self::index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.lower[Self::index(i, j)] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.lower.iter().all(|x| x.is_finite())
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.lower[i * (i + 1) / 2..i * (i + 1) / 2 + i + 1];
            let mut acc = 0.0;
            for (j, &a) in row.iter().enumerate() {
                acc += a * x[j];
                if j < i {
                    y[j] += a * x[i];
                }
            }
            y[i] += acc;
        }
        y
    }

    /// Leading principal `k x k` block.
    pub fn leading(&self, k: usize) -> DenseSym {
        let k = k.min(self.n);
        Self {
            n: k,
            lower: self.lower[..k * (k + 1) / 2].to_vec(),
        }
    }

    /// Max absolute row sum; bounds the spectral radius.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..=i {
                let v = self.get(i, j);
                acc += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        acc.sqrt()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_storage_is_symmetric() {
        let m = DenseSym::from_fn(4, |i, j| (10 * i + j) as f64);
        assert_eq!(m.get(3, 1), 31.0);
        assert_eq!(m.get(1, 3), 31.0);
        let d = m.to_dense();
        assert_eq!(d.get(1, 3), d.get(3, 1));
    }

    #[test]
    fn sym_mul_vec_matches_dense() {
        let m = DenseSym::from_fn(5, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let x: Vec<f64> = (0..5).map(|i| i as f64 - 2.0).collect();
        let a = m.mul_vec(&x);
        let b = m.to_dense().mul_vec(&x);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn leading_block() {
        let m = DenseSym::from_fn(4, |i, j| (i * 4 + j) as f64);
        let l = m.leading(2);
        assert_eq!(l.n(), 2);
        assert_eq!(l.get(1, 0), m.get(1, 0));
        assert_eq!(l.get(1, 1), m.get(1, 1));
    }
}
