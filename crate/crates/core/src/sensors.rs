//! Sensor sets and their realisation as fractional grid masks.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blob::{read_file, BlobReader, BlobWriter};
use crate::error::{Error, Result};
use crate::model::Grid;

/// Dyadic depth of the sub-cells used for thick sets.
pub const THICK_LEVEL: u32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Center,
    Random { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayAxes {
    All,
    /// Decay measured in the first `d1` coordinates of `k` only.
    First(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aperture {
    /// 1D: which of the two rays are kept.
    Signs { negative: bool, positive: bool },
    /// 2D: directions within `half_width` radians of `direction`.
    Sector { direction: f64, half_width: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SensorSpec {
    /// A ball of radius `delta^{1 + |k|^alpha}` in every unit cell.
    EquidistributedDecay {
        delta: f64,
        alpha: f64,
        placement: Placement,
        decay_axes: DecayAxes,
    },
    /// Measure at least `gamma^{1 + |k|^alpha} rho^d` in every cell `k + (-rho/2, rho/2)^d`.
    ThickDecay {
        rho: f64,
        gamma: f64,
        alpha: f64,
        seed: u64,
    },
    /// Balls `B(k, 2^{-(1 + |k|^alpha)})`.
    BallUnion { alpha: f64 },
    /// `{|x| >= r0, x/|x| in aperture}`.
    Cone { r0: f64, aperture: Aperture },
}

impl SensorSpec {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, a: f64| {
            if a.is_finite() && a >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be nonnegative, got {a}")))
            }
        };
        match *self {
            SensorSpec::EquidistributedDecay {
                delta,
                alpha,
                decay_axes,
                ..
            } => {
                if !(delta > 0.0 && delta < 0.5) {
                    return Err(Error::invalid("delta must lie in (0, 1/2)"));
                }
                if decay_axes == DecayAxes::First(0) {
                    return Err(Error::invalid("decay axes must include at least one axis"));
                }
                nonneg("alpha", alpha)
            }
            SensorSpec::ThickDecay { rho, gamma, alpha, .. } => {
                if !(rho.is_finite() && rho > 0.0) {
                    return Err(Error::invalid("rho must be positive"));
                }
                if !(gamma > 0.0 && gamma <= 1.0) {
                    return Err(Error::invalid("gamma must lie in (0, 1]"));
                }
                nonneg("alpha", alpha)
            }
            SensorSpec::BallUnion { alpha } => nonneg("alpha", alpha),
            SensorSpec::Cone { r0, aperture } => {
                if !(r0.is_finite() && r0 > 0.0) {
                    return Err(Error::invalid("r0 must be positive"));
                }
                match aperture {
                    Aperture::Signs { negative, positive } if !(negative || positive) => {
                        Err(Error::invalid("cone sign set is empty"))
                    }
                    Aperture::Sector { half_width, direction }
                        if !(half_width > 0.0 && half_width.is_finite() && direction.is_finite()) =>
                    {
                        Err(Error::invalid("sector half-width must be positive"))
                    }
                    _ => Ok(()),
                }
            }
        }
    }

    pub fn descriptor(&self) -> String {
        serde_json::to_string(self).expect("sensor specs serialise")
    }

    fn decay_norm(&self, k: [i64; 2], d: usize) -> f64 {
        let axes = match self {
            SensorSpec::EquidistributedDecay {
                decay_axes: DecayAxes::First(d1),
                ..
            } => (*d1).min(d),
            _ => d,
        };
        k[..axes].iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt()
    }

    /// `1 + |k|^alpha`, with `|k|^alpha = 0` at `k = 0` for every `alpha`.
    fn decay_exponent(&self, k: [i64; 2], d: usize, alpha: f64) -> f64 {
        let r = self.decay_norm(k, d);
        if r == 0.0 {
            1.0
        } else {
            1.0 + r.powf(alpha)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    /// Integer cell index; the second entry is 0 in 1D.
    pub k: [i64; 2],
    pub center: [f64; 2],
    /// Ball radius, for ball geometries.
    pub radius: Option<f64>,
    /// Measure the cell must contain.
    pub required_measure: f64,
    pub realized_measure: f64,
    /// Feature below the grid spacing.
    pub unresolved: bool,
    /// Cell sticks out of the box.
    pub clipped: bool,
    /// Selected dyadic sub-cells, for thick sets.
    #[serde(skip)]
    pub subcells: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct SensorMask {
    spec: SensorSpec,
    grid: Grid,
    weights: Vec<f64>,
    cells: Vec<CellRecord>,
    warnings: Vec<String>,
}

fn cell_stream(k: [i64; 2]) -> u64 {
    ((k[0] as i32 as u32 as u64) << 32) | (k[1] as i32 as u32 as u64)
}

fn ball_volume(r: f64, d: usize) -> f64 {
    if d == 1 {
        2.0 * r
    } else {
        std::f64::consts::PI * r * r
    }
}

/// Integer cells `k` whose half-side-`half` cube meets `(-L, L)^d`.
fn enumerate_cells(grid: &Grid, half: f64) -> Vec<[i64; 2]> {
    let l = grid.half_width();
    let kmax = (l + half).ceil() as i64;
    let range: Vec<i64> = (-kmax..=kmax).filter(|k| (*k as f64).abs() - half < l).collect();
    if grid.dim() == 1 {
        range.iter().map(|&k| [k, 0]).collect()
    } else {
        range
            .iter()
            .flat_map(|&k1| range.iter().map(move |&k0| [k0, k1]))
            .collect()
    }
}

fn is_clipped(grid: &Grid, k: [i64; 2], half: f64) -> bool {
    k[..grid.dim()]
        .iter()
        .any(|&v| (v as f64).abs() + half > grid.half_width())
}

/// Offsets of the `3^d` sub-samples of a grid point's `h`-cell.
fn subsample_offsets(grid: &Grid) -> Vec<[f64; 2]> {
    let h = grid.spacing();
    let o = [-h / 3.0, 0.0, h / 3.0];
    if grid.dim() == 1 {
        o.iter().map(|&a| [a, 0.0]).collect()
    } else {
        o.iter().flat_map(|&b| o.iter().map(move |&a| [a, b])).collect()
    }
}

/// The cell of unit side that owns point `x`.
fn unit_cell(x: [f64; 2], d: usize) -> [i64; 2] {
    let mut k = [0; 2];
    for i in 0..d {
        k[i] = x[i].round() as i64;
    }
    k
}

fn in_ball(x: [f64; 2], c: [f64; 2], r: f64) -> bool {
    let dx = x[0] - c[0];
    let dy = x[1] - c[1];
    dx * dx + dy * dy < r * r
}

struct Geometry<'a> {
    spec: &'a SensorSpec,
    dim: usize,
    cells: &'a [CellRecord],
    index: HashMap<[i64; 2], usize>,
}

impl Geometry<'_> {
    fn contains(&self, x: [f64; 2]) -> bool {
        match self.spec {
            SensorSpec::EquidistributedDecay { .. } | SensorSpec::BallUnion { .. } => {
                match self.index.get(&unit_cell(x, self.dim)) {
                    Some(&c) => {
                        let cell = &self.cells[c];
                        in_ball(x, cell.center, cell.radius.unwrap_or(0.0))
                    }
                    None => false,
                }
            }
            SensorSpec::ThickDecay { rho, .. } => self.thick_cells_at(x, *rho).into_iter().any(|c| {
                let cell = &self.cells[c];
                cell.subcells
                    .binary_search(&subcell_of(x, cell.k, *rho, self.dim))
                    .is_ok()
            }),
            SensorSpec::Cone { r0, aperture } => {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                if r < *r0 {
                    return false;
                }
                match *aperture {
                    Aperture::Signs { negative, positive } => (x[0] < 0.0 && negative) || (x[0] > 0.0 && positive),
                    Aperture::Sector { direction, half_width } => {
                        let diff = (x[1].atan2(x[0]) - direction).rem_euclid(std::f64::consts::TAU);
                        diff.min(std::f64::consts::TAU - diff) <= half_width
                    }
                }
            }
        }
    }

    /// Cells `k + (-rho/2, rho/2)^d` containing `x`.
    fn thick_cells_at(&self, x: [f64; 2], rho: f64) -> Vec<usize> {
        let half = rho / 2.0;
        let span = |v: f64| -> Vec<i64> {
            let lo = (v - half).floor() as i64;
            let hi = (v + half).ceil() as i64;
            (lo..=hi).filter(|&k| (v - k as f64).abs() < half).collect()
        };
        let k0 = span(x[0]);
        let k1 = if self.dim == 2 { span(x[1]) } else { vec![0] };
        let mut out = Vec::new();
        for &b in &k1 {
            for &a in &k0 {
                if let Some(&c) = self.index.get(&[a, b]) {
                    out.push(c);
                }
            }
        }
        out
    }
}

fn subcell_of(x: [f64; 2], k: [i64; 2], rho: f64, d: usize) -> u32 {
    let per_axis = 1u32 << THICK_LEVEL;
    let side = rho / per_axis as f64;
    let mut idx = 0;
    for i in (0..d).rev() {
        let j = ((x[i] - (k[i] as f64 - rho / 2.0)) / side)
            .floor()
            .clamp(0.0, per_axis as f64 - 1.0) as u32;
        idx = idx * per_axis + j;
    }
    idx
}

impl SensorMask {
    /// Builds the cell records and the `3^d`-subsampled weights.
    pub fn realize(spec: &SensorSpec, grid: &Grid) -> Result<Self> {
        spec.validate()?;
        if grid.half_width() < 1.5 {
            return Err(Error::invalid(format!(
                "box half-width {} is below 3/2; unit cells do not fit",
                grid.half_width()
            )));
        }
        let d = grid.dim();
        if let SensorSpec::Cone { aperture, .. } = spec {
            let ok = matches!(
                (aperture, d),
                (Aperture::Signs { .. }, 1) | (Aperture::Sector { .. }, 2)
            );
            if !ok {
                return Err(Error::invalid(
                    "cone aperture must be a sign set in 1D and a sector in 2D",
                ));
            }
        }
        let h = grid.spacing();
        let mut warnings = Vec::new();
        let cells: Vec<CellRecord> = match *spec {
            SensorSpec::EquidistributedDecay {
                delta,
                alpha,
                placement,
                ..
            } => enumerate_cells(grid, 0.5)
                .into_iter()
                .map(|k| {
                    let r = delta.powf(spec.decay_exponent(k, d, alpha));
                    let mut center = [k[0] as f64, k[1] as f64];
                    if let Placement::Random { seed } = placement {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        rng.set_stream(cell_stream(k));
                        let slack = 0.5 - r;
                        for c in center.iter_mut().take(d) {
                            *c += rng.random_range(-slack..=slack);
                        }
                    }
                    ball_cell(grid, k, center, r, 0.5)
                })
                .collect(),
            SensorSpec::BallUnion { alpha } => enumerate_cells(grid, 0.5)
                .into_iter()
                .map(|k| {
                    let r = 0.5f64.powf(spec.decay_exponent(k, d, alpha));
                    ball_cell(grid, k, [k[0] as f64, k[1] as f64], r, 0.5)
                })
                .collect(),
            SensorSpec::ThickDecay {
                rho,
                gamma,
                alpha,
                seed,
            } => {
                let total = 1usize << (THICK_LEVEL as usize * d);
                enumerate_cells(grid, rho / 2.0)
                    .into_iter()
                    .map(|k| {
                        let q = gamma.powf(spec.decay_exponent(k, d, alpha));
                        let count = ((q * total as f64).ceil() as usize).clamp(1, total);
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        rng.set_stream(cell_stream(k));
                        let mut subcells: Vec<u32> = index::sample(&mut rng, total, count)
                            .into_iter()
                            .map(|i| i as u32)
                            .collect();
                        subcells.sort_unstable();
                        let side = rho / (1u32 << THICK_LEVEL) as f64;
                        CellRecord {
                            k,
                            center: [k[0] as f64, k[1] as f64],
                            radius: None,
                            required_measure: q * rho.powi(d as i32),
                            realized_measure: 0.0,
                            unresolved: side < h,
                            clipped: is_clipped(grid, k, rho / 2.0),
                            subcells,
                        }
                    })
                    .collect()
            }
            SensorSpec::Cone { .. } => Vec::new(),
        };
        let index = cells.iter().enumerate().map(|(i, c)| (c.k, i)).collect();
        let geo = Geometry {
            spec,
            dim: d,
            cells: &cells,
            index,
        };
        let offsets = subsample_offsets(grid);
        let weights: Vec<f64> = (0..grid.len())
            .map(|p| {
                let x = grid.coords(p);
                let hits = offsets
                    .iter()
                    .filter(|o| geo.contains([x[0] + o[0], x[1] + o[1]]))
                    .count();
                hits as f64 / offsets.len() as f64
            })
            .collect();
        let unresolved = cells.iter().filter(|c| c.unresolved).count();
        if unresolved > 0 {
            warnings.push(format!(
                "{unresolved} of {} cells are below the grid spacing h = {h:.4e}",
                cells.len()
            ));
        }
        let mut mask = Self {
            spec: *spec,
            grid: grid.clone(),
            weights,
            cells,
            warnings,
        };
        let measures = mask.cell_measures();
        for (c, m) in mask.cells.iter_mut().zip(measures) {
            c.realized_measure = m;
        }
        Ok(mask)
    }

    /// Builds a mask from explicit weights, without cell records.
    pub fn from_weights(spec: SensorSpec, grid: &Grid, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::invalid("weight count does not match the grid"));
        }
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::invalid("mask weights must lie in [0, 1]"));
        }
        Ok(Self {
            spec,
            grid: grid.clone(),
            weights,
            cells: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn spec(&self) -> &SensorSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mutable access for experiments; weights are clamped back into `[0, 1]`
    /// by [`SensorMask::normalize`].
    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn normalize(&mut self) {
        self.weights.iter_mut().for_each(|w| *w = w.clamp(0.0, 1.0));
    }

    pub fn cells(&self) -> &[CellRecord] {
        &self.cells
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn unresolved_fraction(&self) -> f64 {
        if self.cells.is_empty() {
            0.0
        } else {
            self.cells.iter().filter(|c| c.unresolved).count() as f64 / self.cells.len() as f64
        }
    }

    /// `sum w_i h^d`.
    pub fn total_measure(&self) -> f64 {
        self.grid.weight() * self.weights.iter().sum::<f64>()
    }

    /// Points of a cell for attribution of the weights.
    fn points_in_cell(&self, cell: &CellRecord) -> Vec<usize> {
        let d = self.grid.dim();
        let half = match self.spec {
            SensorSpec::ThickDecay { rho, .. } => rho / 2.0,
            _ => 0.5,
        };
        let owns = |x: [f64; 2]| match self.spec {
            SensorSpec::ThickDecay { .. } => (0..d).all(|i| (x[i] - cell.k[i] as f64).abs() < half),
            _ => unit_cell(x, d) == cell.k,
        };
        let axis = self.grid.axis();
        let range = |c: i64| -> Vec<usize> {
            (0..axis.len())
                .filter(|&i| (axis[i] - c as f64).abs() <= half + 1e-12)
                .collect()
        };
        let r0 = range(cell.k[0]);
        if d == 1 {
            return r0.into_iter().filter(|&i| owns(self.grid.coords(i))).collect();
        }
        let n = self.grid.n_axis();
        let r1 = range(cell.k[1]);
        let mut out = Vec::new();
        for &j in &r1 {
            for &i in &r0 {
                let p = i + n * j;
                if owns(self.grid.coords(p)) {
                    out.push(p);
                }
            }
        }
        out
    }

    /// Mask measure attributed to each cell from the current weights.
    pub fn cell_measures(&self) -> Vec<f64> {
        let w = self.grid.weight();
        self.cells
            .iter()
            .map(|c| w * self.points_in_cell(c).iter().map(|&p| self.weights[p]).sum::<f64>())
            .collect()
    }

    /// Measure of the required ball of `cell` at subsampling resolution, over
    /// the points the cell owns.
    fn subsampled_ball(&self, cell: &CellRecord, r: f64) -> f64 {
        let offsets = subsample_offsets(&self.grid);
        let w = self.grid.weight() / offsets.len() as f64;
        self.points_in_cell(cell)
            .into_iter()
            .map(|p| {
                let x = self.grid.coords(p);
                w * offsets
                    .iter()
                    .filter(|o| in_ball([x[0] + o[0], x[1] + o[1]], cell.center, r))
                    .count() as f64
            })
            .sum()
    }

    /// Checks every resolved cell against its required measure.
    pub fn verify_cells(&self) -> CellReport {
        let h = self.grid.spacing();
        let d = self.grid.dim();
        let measures = self.cell_measures();
        let verdicts = self
            .cells
            .iter()
            .zip(&measures)
            .map(|(cell, &realized)| {
                if cell.clipped {
                    return CellVerdict::Skipped("clipped");
                }
                let (required, tol) = match (self.spec, cell.radius) {
                    (SensorSpec::ThickDecay { rho, .. }, _) => {
                        if cell.unresolved {
                            return CellVerdict::Skipped("unresolved");
                        }
                        let sub = rho / (1u32 << THICK_LEVEL) as f64;
                        let faces = if d == 1 { 2.0 } else { 4.0 * sub };
                        let cell_faces = if d == 1 { 2.0 } else { 4.0 * rho };
                        let tol = h * (cell.subcells.len() as f64 * faces / 3.0 + cell_faces / 2.0);
                        (cell.required_measure, tol)
                    }
                    (_, Some(r)) => {
                        if r < 2.0 * h {
                            return CellVerdict::Skipped("unresolved");
                        }
                        (
                            self.subsampled_ball(cell, r),
                            1e-12 * cell.required_measure.max(f64::MIN_POSITIVE),
                        )
                    }
                    _ => return CellVerdict::Skipped("no requirement"),
                };
                if realized >= required - tol {
                    CellVerdict::Pass { realized, required }
                } else {
                    CellVerdict::Fail { realized, required }
                }
            })
            .collect();
        CellReport {
            cells: self.cells.iter().map(|c| c.k).collect(),
            verdicts,
        }
    }

    const MAGIC: &'static [u8; 8] = b"SPLMASK\0";
    const VERSION: u32 = 1;

    /// Weight grid: header (d, n, L, sensor descriptor), then the weights.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = BlobWriter::new(Self::MAGIC, Self::VERSION);
        w.u32(self.grid.dim() as u32)
            .u32(self.grid.n_axis() as u32)
            .f64(self.grid.half_width())
            .str(&self.spec.descriptor())
            .u64(self.weights.len() as u64)
            .f64s(&self.weights);
        w.finish()
    }

    /// Reads a weight blob; cell records are not stored and come back empty.
    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let mut r = BlobReader::open("sensor mask", data, Self::MAGIC, Self::VERSION)?;
        let dim = r.u32()? as usize;
        let n = r.u32()? as usize;
        let l = r.f64()?;
        let desc = r.str()?;
        let len = r.u64()? as usize;
        let weights = r.f64s(len)?;
        r.finish()?;
        let spec: SensorSpec = serde_json::from_str(&desc).map_err(|e| Error::Format {
            what: "sensor mask",
            reason: e.to_string(),
        })?;
        let grid = Grid::new(dim, l, n)?;
        Self::from_weights(spec, &grid, weights)
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

fn ball_cell(grid: &Grid, k: [i64; 2], center: [f64; 2], r: f64, half: f64) -> CellRecord {
    CellRecord {
        k,
        center,
        radius: Some(r),
        required_measure: ball_volume(r, grid.dim()),
        realized_measure: 0.0,
        unresolved: r < grid.spacing(),
        clipped: is_clipped(grid, k, half),
        subcells: Vec::new(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CellVerdict {
    Pass { realized: f64, required: f64 },
    Fail { realized: f64, required: f64 },
    Skipped(&'static str),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellReport {
    pub cells: Vec<[i64; 2]>,
    pub verdicts: Vec<CellVerdict>,
}

impl CellReport {
    pub fn passed(&self) -> usize {
        self.verdicts
            .iter()
            .filter(|v| matches!(v, CellVerdict::Pass { .. }))
            .count()
    }

    pub fn failed(&self) -> Vec<[i64; 2]> {
        self.cells
            .iter()
            .zip(&self.verdicts)
            .filter(|(_, v)| matches!(v, CellVerdict::Fail { .. }))
            .map(|(k, _)| *k)
            .collect()
    }

    pub fn all_pass(&self) -> bool {
        self.failed().is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equi(delta: f64, alpha: f64, placement: Placement) -> SensorSpec {
        SensorSpec::EquidistributedDecay {
            delta,
            alpha,
            placement,
            decay_axes: DecayAxes::All,
        }
    }

    fn cell(m: &SensorMask, k: [i64; 2]) -> &CellRecord {
        m.cells().iter().find(|c| c.k == k).unwrap()
    }

    #[test]
    fn radii_follow_the_formulas() {
        let g = Grid::new(1, 4.0, 800).unwrap();
        let m = SensorMask::realize(&equi(0.4, 0.0, Placement::Center), &g).unwrap();
        let c = cell(&m, [0, 0]);
        assert_eq!((c.center[0], c.radius), (0.0, Some(0.4)));
        let m = SensorMask::realize(&equi(0.25, 1.0, Placement::Center), &g).unwrap();
        assert!((cell(&m, [2, 0]).radius.unwrap() - 0.015625).abs() < 1e-15);
        assert!((cell(&m, [-2, 0]).radius.unwrap() - 0.015625).abs() < 1e-15);
        let m = SensorMask::realize(&SensorSpec::BallUnion { alpha: 1.0 }, &g).unwrap();
        assert!((cell(&m, [3, 0]).radius.unwrap() - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range() {
        let g = Grid::new(1, 4.0, 100).unwrap();
        let e = SensorMask::realize(&equi(0.7, 0.0, Placement::Center), &g).unwrap_err();
        assert!(e.to_string().contains("delta must lie in (0, 1/2)"));
        assert!(SensorMask::realize(&equi(0.2, 0.0, Placement::Center), &Grid::new(1, 1.0, 50).unwrap()).is_err());
    }

    #[test]
    fn center_placement_verifies_and_zeroing_fails() {
        for (dim, n) in [(1, 401), (2, 81)] {
            let g = Grid::new(dim, 3.0, n).unwrap();
            let mut m = SensorMask::realize(&equi(0.3, 0.0, Placement::Center), &g).unwrap();
            let rep = m.verify_cells();
            assert!(rep.all_pass() && rep.passed() > 0, "{:?}", rep.failed());
            let center = (0..g.len()).find(|&p| g.radius(p) < 1e-12).unwrap();
            m.weights_mut()[center] = 0.0;
            assert_eq!(m.verify_cells().failed(), vec![[0, 0]]);
        }
    }

    #[test]
    fn random_placement_keeps_balls_inside_and_is_reproducible() {
        let g = Grid::new(2, 4.0, 99).unwrap();
        let spec = equi(0.2, 0.5, Placement::Random { seed: 9 });
        let a = SensorMask::realize(&spec, &g).unwrap();
        let b = SensorMask::realize(&spec, &g).unwrap();
        assert_eq!(a.weights(), b.weights());
        for c in a.cells() {
            let r = c.radius.unwrap();
            for i in 0..2 {
                assert!((c.center[i] - c.k[i] as f64).abs() + r <= 0.5 + 1e-12);
            }
        }
        assert!(a.verify_cells().all_pass());
    }

    #[test]
    fn thick_meets_measure() {
        for (dim, n, rho) in [(1, 600, 1.0), (2, 120, 1.5)] {
            let g = Grid::new(dim, 5.0, n).unwrap();
            let spec = SensorSpec::ThickDecay {
                rho,
                gamma: 0.5,
                alpha: 0.5,
                seed: 4,
            };
            let m = SensorMask::realize(&spec, &g).unwrap();
            let rep = m.verify_cells();
            assert!(rep.all_pass(), "dim {dim}: {:?}", rep.failed());
            assert!(rep.passed() > 0);
        }
    }

    #[test]
    fn measures() {
        let g = Grid::new(2, 2.0, 20).unwrap();
        let ones = SensorMask::from_weights(SensorSpec::BallUnion { alpha: 0.0 }, &g, vec![1.0; g.len()]).unwrap();
        assert!((ones.total_measure() - (20.0 * g.spacing()).powi(2)).abs() < 1e-12);
        let h = 0.01;
        let realize = |l: f64, alpha: f64| {
            let g = Grid::with_max_spacing(1, l, h).unwrap();
            SensorMask::realize(&SensorSpec::BallUnion { alpha }, &g).unwrap()
        };
        // partial sums of the ball measures converge to 3
        let required = |m: &SensorMask| m.cells().iter().map(|c| c.required_measure).sum::<f64>();
        let (a, b) = (realize(10.5, 1.0), realize(20.5, 1.0));
        assert!((required(&b) - required(&a)).abs() < 2f64.powi(-8));
        assert!((required(&b) - 3.0).abs() < 2f64.powi(-18));
        assert!((a.total_measure() - 3.0).abs() < 0.02);
        let (a, b) = (realize(10.5, 0.0).total_measure(), realize(20.5, 0.0).total_measure());
        assert!(((b - a) - 10.0).abs() < 0.1);
    }

    #[test]
    fn enlarging_delta_is_monotone() {
        let g = Grid::new(2, 3.0, 70).unwrap();
        let small = SensorMask::realize(&equi(0.2, 0.3, Placement::Center), &g).unwrap();
        let large = SensorMask::realize(&equi(0.3, 0.3, Placement::Center), &g).unwrap();
        assert!(small.weights().iter().zip(large.weights()).all(|(a, b)| a <= b));
    }

    #[test]
    fn cones() {
        let g = Grid::new(1, 4.0, 79).unwrap();
        let spec = SensorSpec::Cone {
            r0: 1.0,
            aperture: Aperture::Signs {
                negative: false,
                positive: true,
            },
        };
        let m = SensorMask::realize(&spec, &g).unwrap();
        assert!((m.total_measure() - 3.0).abs() < 0.1);
        let g2 = Grid::new(2, 4.0, 79).unwrap();
        let sector = SensorSpec::Cone {
            r0: 1.0,
            aperture: Aperture::Sector {
                direction: 0.0,
                half_width: std::f64::consts::FRAC_PI_4,
            },
        };
        let m = SensorMask::realize(&sector, &g2).unwrap();
        let p = (0..g2.len()).find(|&p| {
            let x = g2.coords(p);
            (x[0] - 2.0).abs() < 0.06 && x[1].abs() < 0.06
        });
        assert_eq!(m.weights()[p.unwrap()], 1.0);
        assert!(SensorMask::realize(&spec, &g2).is_err());
    }

    #[test]
    fn blob_round_trip() {
        let g = Grid::new(1, 3.0, 50).unwrap();
        let m = SensorMask::realize(&equi(0.3, 0.0, Placement::Random { seed: 2 }), &g).unwrap();
        let back = SensorMask::from_bytes(&m.to_bytes()).unwrap();
        assert_eq!(back.weights(), m.weights());
        assert_eq!(back.spec(), m.spec());
    }
}
