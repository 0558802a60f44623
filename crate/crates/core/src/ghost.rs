//! Extension of a spectral function by one extra variable `t`:
//! `F(x, t) = sum_k a_k f_k(x) s_t(lambda_k)`, with `s_t(mu) = sinh(sqrt(mu) t) / sqrt(mu)`.
//!
//! `t`-derivatives are analytic; only the spatial operator is discrete.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blob::{read_file, BlobReader, BlobWriter};
use crate::error::{Error, Result};
use crate::model::{Grid, Hamiltonian, SpectralSubspace};

const SERIES_SWITCH: f64 = 1e-4;

/// `sinh(sqrt(mu) t) / sqrt(mu)`, equal to `t` at `mu = 0`.
pub fn s_eval(mu: f64, t: f64) -> f64 {
    let r = mu.max(0.0).sqrt();
    if r * t.abs() < SERIES_SWITCH {
        let mt2 = mu * t * t;
        return t * (1.0 + mt2 / 6.0 + mt2 * mt2 / 120.0);
    }
    (r * t).sinh() / r
}

/// `d/dt s_t(mu) = cosh(sqrt(mu) t)`.
pub fn s_dt(mu: f64, t: f64) -> f64 {
    (mu.max(0.0).sqrt() * t).cosh()
}

#[derive(Clone, Debug)]
pub struct GhostField {
    grid: Grid,
    values: Vec<f64>,
    coeffs: Vec<f64>,
    threshold: f64,
    rho: f64,
    times: Vec<f64>,
    source: Vec<f64>,
    field: Vec<Vec<f64>>,
    field_dt: Vec<Vec<f64>>,
    field_dtt: Vec<Vec<f64>>,
}

impl GhostField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// The source `f`, which is `dF/dt` at `t = 0`.
    pub fn source(&self) -> &[f64] {
        &self.source
    }

    pub fn at(&self, j: usize) -> &[f64] {
        &self.field[j]
    }

    pub fn dt_at(&self, j: usize) -> &[f64] {
        &self.field_dt[j]
    }

    pub fn dtt_at(&self, j: usize) -> &[f64] {
        &self.field_dtt[j]
    }

    /// `max_j max_x |F(x, t_j) + F(x, -t_j)|`.
    pub fn oddness_defect(&self) -> f64 {
        let n = self.times.len();
        (0..n / 2 + 1)
            .flat_map(|j| {
                self.field[j]
                    .iter()
                    .zip(&self.field[n - 1 - j])
                    .map(|(a, b)| (a + b).abs())
            })
            .fold(0.0, f64::max)
    }

    const MAGIC: &'static [u8; 8] = b"SPLGHOST";
    const VERSION: u32 = 1;

    /// Field dump: grid header, rho, t points, then `F(., t_j)` for each j.
    fn writer(&self) -> BlobWriter {
        let mut w = BlobWriter::new(Self::MAGIC, Self::VERSION);
        w.u32(self.grid.dim() as u32)
            .u32(self.grid.n_axis() as u32)
            .f64(self.grid.half_width())
            .f64(self.rho)
            .u64(self.times.len() as u64)
            .f64s(&self.times);
        for f in &self.field {
            w.f64s(f);
        }
        w
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.writer().finish()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.writer().write_to(path)
    }
}

/// A field dump read back from disk.
#[derive(Clone, Debug)]
pub struct GhostDump {
    pub grid: Grid,
    pub rho: f64,
    pub times: Vec<f64>,
    pub field: Vec<Vec<f64>>,
}

impl GhostDump {
    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let mut r = BlobReader::open("ghost field", data, GhostField::MAGIC, GhostField::VERSION)?;
        let dim = r.u32()? as usize;
        let n = r.u32()? as usize;
        let half_width = r.f64()?;
        let rho = r.f64()?;
        let nt = r.u64()? as usize;
        let grid = Grid::new(dim, half_width, n).map_err(|e| r.bad(e.to_string()))?;
        let times = r.f64s(nt)?;
        let field = (0..nt).map(|_| r.f64s(grid.len())).collect::<Result<Vec<_>>>()?;
        r.finish()?;
        Ok(Self {
            grid,
            rho,
            times,
            field,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?)
    }
}

/// Tabulates `F`, `dF/dt` and `d2F/dt2` on `n_t` uniform points of `[-rho, rho]`.
pub fn extend(sub: &SpectralSubspace<'_>, coeffs: &[f64], rho: f64, n_t: usize) -> Result<GhostField> {
    let m = sub.dim();
    if m == 0 {
        return Err(Error::EmptySubspace);
    }
    if coeffs.len() != m {
        return Err(Error::invalid(format!(
            "expected {m} coefficients, got {}",
            coeffs.len()
        )));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid("rho must be positive"));
    }
    if n_t < 2 {
        return Err(Error::invalid("need at least two t points"));
    }
    let grid = sub.system().grid().clone();
    let values = sub.values().to_vec();
    let last = (n_t - 1) as f64;
    let times: Vec<f64> = (0..n_t).map(|j| rho * (2.0 * j as f64 - last) / last).collect();
    let vectors: Vec<Vec<f64>> = (0..m).map(|k| sub.vector(k).into_owned()).collect();
    let combine = |w: &dyn Fn(usize) -> f64| {
        let mut out = vec![0.0; grid.len()];
        for (k, v) in vectors.iter().enumerate() {
            let c = coeffs[k] * w(k);
            if c != 0.0 {
                out.iter_mut().zip(v).for_each(|(o, x)| *o += c * x);
            }
        }
        out
    };
    let source = combine(&|_| 1.0);
    let tabulated: Vec<_> = times
        .par_iter()
        .map(|&t| {
            let f = combine(&|k| s_eval(values[k], t));
            let ft = combine(&|k| s_dt(values[k], t));
            let ftt = combine(&|k| values[k] * s_eval(values[k], t));
            (f, ft, ftt)
        })
        .collect();
    let mut field = Vec::with_capacity(n_t);
    let mut field_dt = Vec::with_capacity(n_t);
    let mut field_dtt = Vec::with_capacity(n_t);
    for (f, ft, ftt) in tabulated {
        field.push(f);
        field_dt.push(ft);
        field_dtt.push(ftt);
    }
    Ok(GhostField {
        grid,
        values,
        coeffs: coeffs.to_vec(),
        threshold: sub.threshold(),
        rho,
        times,
        source,
        field,
        field_dt,
        field_dtt,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// `||dF/dt(., 0) - f|| / ||f||`.
    pub boundary: f64,
    /// `max_j ||H F(., t_j) - d2F/dt2(., t_j)|| / ||F(., t_j)||` over `t_j != 0`.
    pub elliptic: f64,
    pub oddness: f64,
}

/// Checks `dF/dt(., 0) = f` and `H F = d2F/dt2` against the discrete operator.
pub fn verify_identities(field: &GhostField, h: &Hamiltonian) -> Result<IdentityReport> {
    let grid = &field.grid;
    if h.n() != grid.len() {
        return Err(Error::invalid("operator and field live on different grids"));
    }
    let f_norm = grid.norm(&field.source);
    if f_norm == 0.0 {
        return Err(Error::invalid("source is zero"));
    }
    let at_zero = match field.times.iter().position(|&t| t == 0.0) {
        Some(j) => &field.field_dt[j],
        None => &field.source,
    };
    let diff: Vec<f64> = at_zero.iter().zip(&field.source).map(|(a, b)| a - b).collect();
    let boundary = grid.norm(&diff) / f_norm;
    let elliptic = (0..field.times.len())
        .into_par_iter()
        .filter(|&j| field.times[j] != 0.0)
        .map(|j| {
            let f = &field.field[j];
            let mut r = h.mul_vec(f);
            r.iter_mut().zip(&field.field_dtt[j]).for_each(|(a, b)| *a -= b);
            grid.norm(&r) / grid.norm(f)
        })
        .reduce(|| 0.0, f64::max);
    Ok(IdentityReport {
        boundary,
        elliptic,
        oddness: field.oddness_defect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    /// `||F||^2` in H^1 over the box times `(-rho, rho)`.
    pub h1_sq: f64,
    pub lower: f64,
    pub ln_upper: f64,
    /// `h1_sq / lower - 1`.
    pub lower_slack: f64,
    /// `1 - h1_sq / upper`.
    pub upper_slack: f64,
}

/// `2 rho ||f||^2 <= ||F||^2_{H^1} <= 2 rho (1 + (1 + lambda) rho^2) e^{2 rho sqrt(lambda)} ||f||^2`.
pub fn h1_sandwich(field: &GhostField, lambda: f64) -> Result<SandwichReport> {
    let nt = field.times.len();
    if nt < 64 {
        return Err(Error::invalid(format!("need at least 64 t points, got {nt}")));
    }
    if lambda < 0.0 || field.values.iter().any(|&v| v > lambda) {
        return Err(Error::invalid("lambda must dominate every eigenvalue in the field"));
    }
    let grid = &field.grid;
    let density: Vec<f64> = (0..nt)
        .into_par_iter()
        .map(|j| {
            let f = &field.field[j];
            let grad: f64 = grid.gradient_sq(f).iter().sum::<f64>() * grid.weight();
            let ft = grid.norm(&field.field_dt[j]);
            let fv = grid.norm(f);
            fv * fv + grad + ft * ft
        })
        .collect();
    let dt = 2.0 * field.rho / (nt - 1) as f64;
    let h1_sq = dt * (density.iter().sum::<f64>() - 0.5 * (density[0] + density[nt - 1]));
    let f_sq = grid.norm(&field.source).powi(2);
    let rho = field.rho;
    let lower = 2.0 * rho * f_sq;
    let ln_upper = (2.0 * rho).ln() + (1.0 + (1.0 + lambda) * rho * rho).ln() + 2.0 * rho * lambda.sqrt() + f_sq.ln();
    Ok(SandwichReport {
        h1_sq,
        lower,
        ln_upper,
        lower_slack: h1_sq / lower - 1.0,
        upper_slack: 1.0 - (h1_sq.ln() - ln_upper).exp(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryConstants {
    /// Integer side length `2L`.
    pub side: u32,
    pub half_width: f64,
    pub theta: f64,
    pub ln_inv_theta: f64,
    pub radius: f64,
    /// Proxy `1 / (c_d ln(1/theta))`; `c_d` is not known.
    pub kappa_proxy: f64,
    pub c_d: f64,
}

/// Box, `theta`, `R` and a `kappa` proxy for level `lambda`.
pub fn geometry_constants(
    lambda: f64,
    d: usize,
    tau1: f64,
    delta: f64,
    alpha: f64,
    c_eff: f64,
) -> Result<GeometryConstants> {
    if lambda < 1.0 {
        return Err(Error::invalid("lambda must be at least 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta must lie in (0, 1)"));
    }
    if !(c_eff > 0.0 && tau1 > 0.0 && alpha >= 0.0) || !(1..=2).contains(&d) {
        return Err(Error::invalid(
            "geometry constants need c_eff, tau1 > 0, alpha >= 0, d in {1, 2}",
        ));
    }
    let sd = (d as f64).sqrt();
    let need = (2.0 * c_eff * lambda.powf(1.0 / tau1)).max(5.0);
    let side = need.ceil() as u32;
    let ln_inv_theta = -2.0 * (2.0 * sd * c_eff).powf(alpha) * lambda.powf(alpha / tau1) * delta.ln();
    let c_d = 1.0;
    Ok(GeometryConstants {
        side,
        half_width: side as f64 / 2.0,
        theta: (-ln_inv_theta).exp(),
        ln_inv_theta,
        radius: 9.0 * std::f64::consts::E * sd,
        kappa_proxy: 1.0 / (c_d * ln_inv_theta),
        c_d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{assemble, build_eigensystem, EigenConfig, PotentialSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn harmonic(n: usize, lmax: f64) -> (crate::model::Eigensystem, Hamiltonian) {
        let g = Grid::new(1, 8.0, n).unwrap();
        let p = PotentialSpec::power_law(2.0).unwrap();
        let sys = build_eigensystem(&p, &g, lmax, &EigenConfig::default()).unwrap();
        (sys, assemble(&g, &p).unwrap())
    }

    #[test]
    fn s_values() {
        assert_eq!(s_eval(0.0, 0.7), 0.7);
        assert_eq!(s_eval(3.0, 0.0), 0.0);
        assert!((s_eval(4.0, 1.0) - 2.0f64.sinh() / 2.0).abs() < 1e-15);
        assert!((s_eval(4.0, 1.0) - 1.81343).abs() < 1e-5);
        let mu = 4.0;
        let t: f64 = 0.5e-4;
        for t in [t * (1.0 - 1e-9), t * (1.0 + 1e-9)] {
            let exact = (2.0 * t).sinh() / 2.0;
            assert!((s_eval(mu, t) - exact).abs() / exact < 1e-13);
        }
    }

    #[test]
    fn single_mode_and_random_identities() {
        let (sys, h) = harmonic(401, 40.0);
        let sub = sys.subspace(40.0).unwrap();
        let m = sub.dim();
        let mut one = vec![0.0; m];
        one[3] = 1.0;
        let field = extend(&sub, &one, 1.0, 65).unwrap();
        let j = 50;
        let expect = s_eval(sub.values()[3], field.times()[j]);
        let v = sub.vector(3);
        let err = field
            .at(j)
            .iter()
            .zip(v.iter())
            .map(|(a, b)| (a - expect * b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..3 {
            let c: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let field = extend(&sub, &c, 1.0, 65).unwrap();
            let rep = verify_identities(&field, &h).unwrap();
            assert!(rep.boundary <= 1e-12, "{rep:?}");
            assert!(rep.elliptic <= 1e-10, "{rep:?}");
            assert!(rep.oddness <= 1e-12, "{rep:?}");
        }
    }

    #[test]
    fn sandwich_scan_and_monotone_rho() {
        let (sys, _) = harmonic(301, 30.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for lambda in [2.0, 10.0, 30.0] {
            let sub = sys.subspace(lambda).unwrap();
            for m in [1, sub.dim().min(3), sub.dim()] {
                let c: Vec<f64> = (0..sub.dim())
                    .map(|k| if k < m { rng.random_range(-1.0..1.0) } else { 0.0 })
                    .collect();
                let mut prev = 0.0;
                for rho in [0.5, 1.0, 2.0] {
                    let f = extend(&sub, &c, rho, 129).unwrap();
                    let r = h1_sandwich(&f, lambda).unwrap();
                    assert!(r.lower_slack >= -1e-6, "{lambda} {m} {rho} {r:?}");
                    assert!(r.upper_slack >= -1e-6, "{lambda} {m} {rho} {r:?}");
                    assert!(r.h1_sq > prev);
                    prev = r.h1_sq;
                }
            }
        }
    }

    #[test]
    fn lower_bound_is_approached_for_small_rho() {
        let (sys, _) = harmonic(301, 2.0);
        let sub = sys.subspace(2.0).unwrap();
        let c = vec![1.0; sub.dim()];
        let run = |rho: f64| h1_sandwich(&extend(&sub, &c, rho, 65).unwrap(), 2.0).unwrap();
        let (a, b) = (run(0.02), run(0.01));
        assert!(a.lower_slack > 0.0 && b.lower_slack > 0.0);
        // the excess over 2 rho ||f||^2 is cubic in rho
        assert!((a.lower_slack / b.lower_slack - 4.0).abs() < 0.05);
        assert!((a.h1_sq / b.h1_sq - 2.0).abs() < 1e-3);
    }

    #[test]
    fn geometry() {
        let g = geometry_constants(1.0, 1, 2.0, 0.2, 1.3, 2.5).unwrap();
        assert_eq!(g.side, 5);
        let g = geometry_constants(50.0, 2, 2.0, 0.2, 0.0, 2.5).unwrap();
        assert!((g.theta - 0.04).abs() < 1e-15);
        assert_eq!(g.side, (5.0 * 50f64.sqrt()).ceil() as u32);
        let g = geometry_constants(3.0, 1, 2.0, 0.2, 0.0, 1.0).unwrap();
        assert!((g.radius - 24.4645).abs() < 1e-4);
        assert!(geometry_constants(0.5, 1, 2.0, 0.2, 0.0, 1.0).is_err());
    }

    #[test]
    fn dump_roundtrip() {
        let (sys, _) = harmonic(101, 5.0);
        let sub = sys.subspace(5.0).unwrap();
        let c = vec![0.5; sub.dim()];
        let f = extend(&sub, &c, 1.0, 9).unwrap();
        let dir = std::env::temp_dir().join(format!("splab-ghost-{}", std::process::id()));
        f.save(&dir).unwrap();
        let back = GhostDump::load(&dir).unwrap();
        std::fs::remove_file(&dir).ok();
        assert_eq!(back.times, f.times());
        assert_eq!(back.field[3], f.at(3));
        assert_eq!(&back.grid, f.grid());
    }
}
