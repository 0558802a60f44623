use crate::error::{Error, Result};

/// Uniform interior grid of the box `(-L, L)^d` with Dirichlet boundary.
///
/// Points are `x_i = -L + (i + 1) h`, `h = 2L / (n + 1)`, `i = 0..n` per axis.
/// In 2D the flat index is `i0 + n * i1` (axis 0 fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    half_width: f64,
    n: usize,
    h: f64,
    axis: Vec<f64>,
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, n: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::invalid(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::invalid(format!("half-width must be positive, got {half_width}")));
        }
        if n < 3 {
            return Err(Error::invalid(format!("need at least 3 points per axis, got {n}")));
        }
        let h = 2.0 * half_width / (n as f64 + 1.0);
        let axis = (0..n).map(|i| -half_width + (i as f64 + 1.0) * h).collect();
        Ok(Self {
            dim,
            half_width,
            n,
            h,
            axis,
        })
    }

    /// Smallest grid on `(-L, L)^d` with spacing at most `max_spacing`.
    pub fn with_max_spacing(dim: usize, half_width: f64, max_spacing: f64) -> Result<Self> {
        if !(max_spacing > 0.0) {
            return Err(Error::invalid("spacing must be positive"));
        }
        let n = ((2.0 * half_width / max_spacing).ceil() as usize)
            .saturating_sub(1)
            .max(3);
        Self::new(dim, half_width, n)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Points per axis.
    pub fn n_axis(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Quadrature weight `h^d` of every point.
    pub fn weight(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    /// Coordinates of point `p`; the second entry is 0 in 1D.
    #[inline]
    pub fn coords(&self, p: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.axis[p], 0.0],
            _ => [self.axis[p % self.n], self.axis[p / self.n]],
        }
    }

    #[inline]
    pub fn radius(&self, p: usize) -> f64 {
        let c = self.coords(p);
        (c[0] * c[0] + c[1] * c[1]).sqrt()
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.len()).map(|p| self.radius(p)).collect()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weight() * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }

    /// Per-axis derivative: central differences inside, one-sided
    /// second-order stencils at the first and last point of each line.
    pub fn gradient(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let n = self.n;
        let stride = [1, n];
        (0..self.dim)
            .map(|axis| {
                let s = stride[axis];
                let mut g = vec![0.0; u.len()];
                for (p, gp) in g.iter_mut().enumerate() {
                    let i = if axis == 0 { p % n } else { p / n };
                    *gp = if i == 0 {
                        (-3.0 * u[p] + 4.0 * u[p + s] - u[p + 2 * s]) / (2.0 * self.h)
                    } else if i == n - 1 {
                        (3.0 * u[p] - 4.0 * u[p - s] + u[p - 2 * s]) / (2.0 * self.h)
                    } else {
                        (u[p + s] - u[p - s]) / (2.0 * self.h)
                    };
                }
                g
            })
            .collect()
    }

    /// `|grad u|^2` per point.
    pub fn gradient_sq(&self, u: &[f64]) -> Vec<f64> {
        let grads = self.gradient(u);
        let mut out = vec![0.0; u.len()];
        for g in &grads {
            for (o, v) in out.iter_mut().zip(g) {
                *o += v * v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_strictly_inside() {
        let g = Grid::new(1, 2.0, 3).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.axis(), &[-1.0, 0.0, 1.0]);
        let g2 = Grid::new(2, 5.0, 9).unwrap();
        assert!((0..g2.len()).all(|p| g2.coords(p).iter().all(|c| c.abs() < 5.0)));
        let total: f64 = g2.weight() * g2.len() as f64;
        assert!((total - (9.0 * g2.spacing()).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn gradient_is_exact_for_quadratics() {
        let g = Grid::new(1, 1.0, 19).unwrap();
        let u: Vec<f64> = g.axis().iter().map(|x| x * x).collect();
        let d = &g.gradient(&u)[0];
        for (x, v) in g.axis().iter().zip(d) {
            assert!((v - 2.0 * x).abs() < 1e-12);
        }
    }

    #[test]
    fn two_d_layout() {
        let g = Grid::new(2, 1.0, 3).unwrap();
        assert_eq!(g.coords(1), [0.0, -0.5]);
        assert_eq!(g.coords(3), [-0.5, 0.0]);
        let u: Vec<f64> = (0..g.len()).map(|p| g.coords(p)[1]).collect();
        let grads = g.gradient(&u);
        assert!(grads[0].iter().all(|v| v.abs() < 1e-12));
        assert!(grads[1].iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn rejects_invalid() {
        assert!(Grid::new(3, 1.0, 10).is_err());
        assert!(Grid::new(1, 0.0, 10).is_err());
        assert!(Grid::new(1, 1.0, 2).is_err());
    }
}
