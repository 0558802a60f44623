use super::matrix::DenseSym;
use crate::error::{Error, Result};

/// Symmetric sparse matrix in compressed-row form with both triangles stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSym {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSym {
    /// Builds from `(i, j, value)` entries of the upper triangle (`i <= j`).
    /// Duplicates are summed and every diagonal entry must be present.
    pub fn from_upper_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            if i > j {
                return Err(Error::invalid(format!("triplet ({i}, {j}) is below the diagonal")));
            }
            if j >= n {
                return Err(Error::invalid(format!("triplet ({i}, {j}) outside order {n}")));
            }
            if !v.is_finite() {
                return Err(Error::invalid(format!("triplet ({i}, {j}) is not finite")));
            }
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            let mut has_diag = false;
            let mut last: Option<usize> = None;
            for (j, v) in row {
                if last == Some(j) {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
                has_diag |= j == i;
                col_idx.push(j);
                values.push(v);
                last = Some(j);
            }
            if !has_diag {
                return Err(Error::invalid(format!("diagonal entry {i} missing")));
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        match cols.binary_search(&j) {
            Ok(p) => self.values[self.row_ptr[i] + p],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[p] * x[self.col_idx[p]];
            }
            y[i] = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                self.values[self.row_ptr[i]..self.row_ptr[i + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DenseSym {
        let mut m = DenseSym::zeros(self.n);
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[p];
                if j <= i {
                    m.set(i, j, self.values[p]);
                }
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirrors_upper_triangle() {
        let a = SparseSym::from_upper_triplets(3, &[(0, 0, 2.0), (0, 1, -1.0), (1, 1, 2.0), (2, 2, 1.0)]).unwrap();
        assert_eq!(a.get(1, 0), -1.0);
        assert_eq!(a.mul_vec(&[1.0, 1.0, 1.0]), vec![1.0, 1.0, 1.0]);
        assert_eq!(a.nnz(), 5);
    }

    #[test]
    fn missing_diagonal_is_rejected() {
        assert!(SparseSym::from_upper_triplets(2, &[(0, 0, 1.0), (0, 1, 1.0)]).is_err());
        assert!(SparseSym::from_upper_triplets(2, &[(1, 0, 1.0)]).is_err());
    }
}
