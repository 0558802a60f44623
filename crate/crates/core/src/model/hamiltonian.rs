use super::grid::Grid;
use super::potential::{PotentialKind, PotentialSpec};
use crate::error::{Error, Result};
use crate::numerics::{SparseSym, SymOperator, SymTridiag};

/// Discretised `-Δ + V`: tridiagonal in 1D, CSR in 2D.
#[derive(Clone, Debug)]
pub enum Hamiltonian {
    Tridiag(SymTridiag),
    Sparse(SparseSym),
}

impl Hamiltonian {
    pub fn n(&self) -> usize {
        match self {
            Hamiltonian::Tridiag(t) => t.n(),
            Hamiltonian::Sparse(s) => s.n(),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Hamiltonian::Tridiag(t) => t.mul_vec(x),
            Hamiltonian::Sparse(s) => s.mul_vec(x),
        }
    }

    pub fn operator(&self) -> &dyn SymOperator {
        match self {
            Hamiltonian::Tridiag(t) => t,
            Hamiltonian::Sparse(s) => s,
        }
    }

    pub fn norm_bound(&self) -> f64 {
        self.operator().norm_bound()
    }
}

/// Samples the potential on every grid point, checking the two-sided envelope.
pub fn sample_potential(grid: &Grid, p: &PotentialSpec) -> Result<Vec<f64>> {
    let d = grid.dim();
    if let Some(d1) = p.confined_axes() {
        if d1 >= d {
            return Err(Error::invalid(format!(
                "anisotropic potential needs confined axes < d, got {d1} with d = {d}"
            )));
        }
    }
    let two_sided = matches!(p.kind(), PotentialKind::TwoSidedPower { .. });
    (0..grid.len())
        .map(|i| {
            let x = grid.coords(i);
            let x = &x[..d];
            let v = p.value(x);
            if !v.is_finite() {
                return Err(Error::invalid(format!(
                    "potential is not finite at grid point {i} ({x:?})"
                )));
            }
            if two_sided {
                let (lower, upper) = p.envelope(x);
                let slack = 1e-12 * upper.abs().max(1.0);
                if v < lower - slack || v > upper + slack {
                    return Err(Error::PotentialBounds {
                        point: i,
                        coords: x.to_vec(),
                        value: v,
                        lower,
                        upper,
                    });
                }
            }
            Ok(v)
        })
        .collect()
}

pub fn assemble(grid: &Grid, p: &PotentialSpec) -> Result<Hamiltonian> {
    assemble_sampled(grid, &sample_potential(grid, p)?)
}

/// Assembly from potential values already sampled on the grid.
pub fn assemble_sampled(grid: &Grid, v: &[f64]) -> Result<Hamiltonian> {
    if v.len() != grid.len() {
        return Err(Error::invalid("potential sample count does not match the grid"));
    }
    let n = grid.n_axis();
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    match grid.dim() {
        1 => {
            let diag = v.iter().map(|vi| 2.0 * inv_h2 + vi).collect();
            Ok(Hamiltonian::Tridiag(SymTridiag::new(diag, vec![-inv_h2; n - 1])?))
        }
        _ => {
            let mut trips = Vec::with_capacity(3 * grid.len());
            for (p, vp) in v.iter().enumerate() {
                let (i0, i1) = (p % n, p / n);
                trips.push((p, p, 4.0 * inv_h2 + vp));
                if i0 + 1 < n {
                    trips.push((p, p + 1, -inv_h2));
                }
                if i1 + 1 < n {
                    trips.push((p, p + n, -inv_h2));
                }
            }
            Ok(Hamiltonian::Sparse(SparseSym::from_upper_triplets(grid.len(), &trips)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::potential::Sampler;
    use std::sync::Arc;

    #[test]
    fn free_stencil() {
        let g = Grid::new(1, 2.0, 3).unwrap();
        let p = PotentialSpec::two_sided(1.0, 1.0, 1.0, 1.0, Sampler::Interpolate { weight: 0.0 }).unwrap();
        let Hamiltonian::Tridiag(t) = assemble(&g, &p).unwrap() else {
            panic!("expected tridiagonal")
        };
        assert_eq!(t.diag(), &[3.0, 2.0, 3.0]);
        assert_eq!(t.offdiag(), &[-1.0, -1.0]);
    }

    #[test]
    fn two_d_is_symmetric_five_point() {
        let g = Grid::new(2, 2.0, 3).unwrap();
        let p = PotentialSpec::power_law(2.0).unwrap();
        let Hamiltonian::Sparse(s) = assemble(&g, &p).unwrap() else {
            panic!("expected sparse")
        };
        assert_eq!(s.get(4, 4), 4.0);
        assert_eq!(s.get(0, 0), 4.0 + 2.0);
        assert_eq!(s.get(1, 4), -1.0);
        assert_eq!(s.get(4, 1), -1.0);
        assert_eq!(s.get(2, 3), 0.0);
        assert_eq!(s.nnz(), 9 + 2 * 12);
    }

    #[test]
    fn sampler_violation_names_point() {
        let g = Grid::new(1, 2.0, 3).unwrap();
        let bad = Sampler::Custom {
            label: "spike".into(),
            f: Arc::new(|x: &[f64]| if x[0] > 0.5 { 100.0 } else { x[0].abs() }),
        };
        let p = PotentialSpec::two_sided(1.0, 1.0, 1.0, 2.0, bad).unwrap();
        match assemble(&g, &p) {
            Err(Error::PotentialBounds { point, .. }) => assert_eq!(point, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn anisotropic_needs_free_axis() {
        let g = Grid::new(1, 2.0, 5).unwrap();
        assert!(assemble(&g, &PotentialSpec::anisotropic(2.0, 1).unwrap()).is_err());
    }
}
