//! The sharp constant `c(lambda, omega)` of the spectral inequality and the
//! scaling of `log(1/c)` in `lambda`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    build_eigensystem, localization_halfwidth, Basis, EigenConfig, Eigensystem, Grid, PotentialSpec, SpectralSubspace,
};
use crate::numerics::{dense_eigvals, DenseSym, SolverConfig};
use crate::sensors::{Aperture, SensorMask, SensorSpec, THICK_LEVEL};

/// `G_jk = <f_j, w f_k>` on a spectral subspace.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    g: DenseSym,
}

impl GramMatrix {
    pub fn order(&self) -> usize {
        self.g.n()
    }

    pub fn matrix(&self) -> &DenseSym {
        &self.g
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.g.get(j, k)
    }

    /// Gram matrix of the leading `m` subspace members.
    pub fn leading(&self, m: usize) -> GramMatrix {
        GramMatrix { g: self.g.leading(m) }
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        dense_eigvals(&self.g, &SolverConfig::default())
    }

    /// `sqrt(max(0, lambda_min))`.
    pub fn ratio(&self) -> Result<f64> {
        if self.order() == 0 {
            return Err(Error::EmptySubspace);
        }
        Ok(self.eigenvalues()?[0].max(0.0).sqrt())
    }
}

pub fn gram(sub: &SpectralSubspace<'_>, mask: &SensorMask) -> Result<GramMatrix> {
    let sys = sub.system();
    if sys.grid() != mask.grid() {
        return Err(Error::invalid("subspace and mask live on different grids"));
    }
    let m = sub.dim();
    let g = match sys.basis() {
        Basis::Dense(_) => gram_dense(sys, m, mask),
        Basis::Tensor(_) => gram_tensor(sys, m, mask),
    };
    Ok(GramMatrix { g })
}

fn gram_dense(sys: &Eigensystem, m: usize, mask: &SensorMask) -> DenseSym {
    let hd = sys.grid().weight();
    let scaled: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|k| {
            sys.vector(k)
                .iter()
                .zip(mask.weights())
                .map(|(f, w)| f * (w * hd).sqrt())
                .collect()
        })
        .collect();
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|j| (0..=j).map(|k| dot(&scaled[j], &scaled[k])).collect())
        .collect();
    DenseSym::from_fn(m, |j, k| rows[j][k])
}

/// Separable evaluation: `P_aa'(i1) = sum_i0 w(i0, i1) phi_a(i0) phi_a'(i0)`,
/// then `G = h² sum_i1 P_aa'(i1) psi_b(i1) psi_b'(i1)`.
fn gram_tensor(sys: &Eigensystem, m: usize, mask: &SensorMask) -> DenseSym {
    let Basis::Tensor(t) = sys.basis() else { unreachable!() };
    let n = sys.grid().n_axis();
    let pairs = &t.pairs[..m];
    let amax = pairs.iter().map(|p| p.0).max().map_or(0, |a| a + 1);
    let w = mask.weights();
    let tri = |a: usize, b: usize| {
        if a >= b {
            a * (a + 1) / 2 + b
        } else {
            b * (b + 1) / 2 + a
        }
    };
    let lower: Vec<(usize, usize)> = (0..amax).flat_map(|a| (0..=a).map(move |b| (a, b))).collect();
    let pmat: Vec<Vec<f64>> = lower
        .into_par_iter()
        .map(|(a, b)| {
            let (fa, fb) = (t.first.col(a), t.first.col(b));
            (0..n)
                .map(|i1| {
                    let row = &w[i1 * n..(i1 + 1) * n];
                    row.iter().zip(fa).zip(fb).map(|((w, x), y)| w * x * y).sum()
                })
                .collect()
        })
        .collect();
    let h2 = sys.grid().weight();
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let (aj, bj) = pairs[j];
            let pj = t.second.col(bj);
            (0..=j)
                .map(|k| {
                    let (ak, bk) = pairs[k];
                    let p = &pmat[tri(aj, ak)];
                    let pk = t.second.col(bk);
                    h2 * p.iter().zip(pj).zip(pk).map(|((p, x), y)| p * x * y).sum::<f64>()
                })
                .collect()
        })
        .collect();
    DenseSym::from_fn(m, |j, k| rows[j][k])
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `c = min over unit f in the subspace of ||f||_{L²(omega)}`.
pub fn observability_ratio(sub: &SpectralSubspace<'_>, mask: &SensorMask) -> Result<f64> {
    if sub.dim() == 0 {
        return Err(Error::EmptySubspace);
    }
    gram(sub, mask)?.ratio()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    /// One grid sized for the largest threshold; subspaces are nested.
    Shared,
    /// A fresh box and spacing per threshold.
    PerLambda,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridPolicy {
    pub dim: usize,
    pub mode: GridMode,
    /// Passed to `localization_halfwidth`.
    pub margin: f64,
    /// Spacing at most this fraction of the smallest sensor feature.
    pub feature_fraction: f64,
    /// Grid points per wavelength `2 pi / sqrt(lambda (1 + buffer))`.
    pub points_per_wavelength: f64,
    pub max_points_1d: usize,
    pub max_points_2d: usize,
    /// Fixed spacing and half-width, overriding the rules above.
    pub spacing: Option<f64>,
    pub half_width: Option<f64>,
    /// Fixed points per axis, overriding `spacing` and the cap.
    pub n_axis: Option<usize>,
    /// Repeat each measurement at twice the spacing.
    pub richardson: bool,
    pub eigen: EigenConfig,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self {
            dim: 1,
            mode: GridMode::Shared,
            margin: 2.0,
            feature_fraction: 0.25,
            points_per_wavelength: 20.0,
            max_points_1d: 4000,
            max_points_2d: 400,
            spacing: None,
            half_width: None,
            n_axis: None,
            richardson: false,
            eigen: EigenConfig::default(),
        }
    }
}

/// Smallest feature of the sensor geometry inside `(-L, L)^d`.
pub fn min_feature(spec: &SensorSpec, half_width: f64, d: usize) -> Option<f64> {
    let kmax = (half_width + 0.5).ceil() - 1.0;
    let norm = |axes: usize| kmax * (axes as f64).sqrt();
    let expo = |r: f64, alpha: f64| if r == 0.0 { 1.0 } else { 1.0 + r.powf(alpha) };
    match *spec {
        SensorSpec::EquidistributedDecay {
            delta,
            alpha,
            decay_axes,
            ..
        } => {
            let axes = match decay_axes {
                crate::sensors::DecayAxes::All => d,
                crate::sensors::DecayAxes::First(d1) => d1.min(d),
            };
            Some(delta.powf(expo(norm(axes), alpha)))
        }
        SensorSpec::BallUnion { alpha } => Some(0.5f64.powf(expo(norm(d), alpha))),
        SensorSpec::ThickDecay { rho, .. } => Some(rho / (1u32 << THICK_LEVEL) as f64),
        SensorSpec::Cone { r0, aperture } => match aperture {
            Aperture::Signs { .. } => Some(r0),
            Aperture::Sector { half_width: w, .. } => Some(r0 * w.min(1.0)),
        },
    }
}

/// Grid for thresholds up to `lambda`, with a note when a cap binds.
pub fn policy_grid(
    p: &PotentialSpec,
    spec: Option<&SensorSpec>,
    lambda: f64,
    policy: &GridPolicy,
) -> Result<(Grid, Option<String>)> {
    let d = policy.dim;
    let l = match policy.half_width {
        Some(l) => l,
        None => localization_halfwidth(lambda.max(1.0), p, policy.margin)?,
    }
    .max(1.5);
    let cap = if d == 1 {
        policy.max_points_1d
    } else {
        policy.max_points_2d
    };
    let target = match policy.spacing {
        Some(h) => h,
        None => {
            let top = lambda.max(1.0) * (1.0 + policy.eigen.buffer);
            let wave = 2.0 * std::f64::consts::PI / (policy.points_per_wavelength * top.sqrt());
            let feat = spec
                .and_then(|s| min_feature(s, l, d))
                .map_or(f64::INFINITY, |f| f * policy.feature_fraction);
            wave.min(feat)
        }
    };
    if let Some(n) = policy.n_axis {
        return Ok((Grid::new(d, l, n)?, None));
    }
    let mut n = ((2.0 * l / target).ceil() as usize).saturating_sub(1).max(3);
    let mut note = None;
    if n > cap {
        note = Some(format!(
            "grid capped at {cap} points per axis; spacing {:.4e} exceeds the target {target:.4e}",
            2.0 * l / (cap as f64 + 1.0)
        ));
        n = cap;
    }
    // odd counts keep a point at the origin and make the half-resolution grid nested
    if n % 2 == 0 {
        n -= 1;
    }
    Ok((Grid::new(d, l, n)?, note))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceExponents {
    pub thm12: f64,
    pub zhuz: f64,
    pub conj: f64,
    pub aniso: f64,
}

impl ReferenceExponents {
    pub fn new(alpha: f64, tau1: f64, tau2: f64) -> Self {
        Self {
            thm12: (alpha + 2.0 * tau2 / 3.0) / tau1,
            zhuz: alpha / tau1 + tau2 / (2.0 * tau1),
            conj: alpha / tau1 + 0.5,
            aniso: alpha / tau1 + 2.0 / 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSample {
    pub lambda: f64,
    pub m: usize,
    pub c: f64,
    pub half_width: f64,
    pub n_axis: usize,
    pub unresolved_fraction: f64,
    /// `(c_h - c_2h) / 3`.
    pub richardson_delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioCurve {
    pub samples: Vec<RatioSample>,
    pub sensor: String,
    pub potential: String,
    pub alpha: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub reference: ReferenceExponents,
    pub warnings: Vec<String>,
}

impl RatioCurve {
    /// Adjacent pairs where `c` grows with `lambda` or `m` shrinks.
    pub fn monotonicity_violations(&self) -> usize {
        self.samples
            .windows(2)
            .filter(|w| w[1].c > w[0].c * (1.0 + 1e-12) + 1e-14 || w[1].m < w[0].m)
            .count()
    }
}

pub fn sensor_alpha(spec: &SensorSpec) -> f64 {
    match *spec {
        SensorSpec::EquidistributedDecay { alpha, .. }
        | SensorSpec::ThickDecay { alpha, .. }
        | SensorSpec::BallUnion { alpha } => alpha,
        SensorSpec::Cone { .. } => 0.0,
    }
}

struct Measured {
    rows: Vec<Option<(usize, f64)>>,
    unresolved: f64,
    warnings: Vec<String>,
}

/// Ratios for every threshold on one grid, using leading blocks of one Gram matrix.
fn measure_on(
    p: &PotentialSpec,
    spec: &SensorSpec,
    grid: &Grid,
    lambdas: &[f64],
    cfg: &EigenConfig,
) -> Result<Measured> {
    let top = lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sys = build_eigensystem(p, grid, top, cfg)?;
    let mask = SensorMask::realize(spec, grid)?;
    let g = gram(&sys.subspace(top)?, &mask)?;
    let rows = lambdas
        .par_iter()
        .map(|&l| {
            let m = sys.counting_function(l)?;
            if m == 0 {
                return Ok(None);
            }
            Ok(Some((m, g.leading(m).ratio()?)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Measured {
        rows,
        unresolved: mask.unresolved_fraction(),
        warnings: mask.warnings().to_vec(),
    })
}

fn coarse(grid: &Grid) -> Result<Grid> {
    Grid::new(grid.dim(), grid.half_width(), (grid.n_axis().div_ceil(2) - 1).max(3))
}

/// `c(lambda, omega)` along an increasing threshold list.
pub fn ratio_scan(p: &PotentialSpec, spec: &SensorSpec, lambdas: &[f64], policy: &GridPolicy) -> Result<RatioCurve> {
    spec.validate()?;
    if lambdas.len() < 4 {
        return Err(Error::invalid("a ratio scan needs at least four thresholds"));
    }
    if lambdas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("thresholds must be strictly increasing"));
    }
    let mut warnings = Vec::new();
    let mut samples = Vec::new();
    let mut push = |l: f64,
                    row: Option<(usize, f64)>,
                    grid: &Grid,
                    unresolved: f64,
                    delta: Option<f64>,
                    warnings: &mut Vec<String>| {
        match row {
            Some((m, c)) => samples.push(RatioSample {
                lambda: l,
                m,
                c,
                half_width: grid.half_width(),
                n_axis: grid.n_axis(),
                unresolved_fraction: unresolved,
                richardson_delta: delta,
            }),
            None => warnings.push(format!("lambda = {l}: empty spectral subspace, skipped")),
        }
    };
    match policy.mode {
        GridMode::Shared => {
            let top = lambdas[lambdas.len() - 1];
            let (grid, note) = policy_grid(p, Some(spec), top, policy)?;
            warnings.extend(note);
            let fine = measure_on(p, spec, &grid, lambdas, &policy.eigen)?;
            let rough = if policy.richardson {
                Some(measure_on(p, spec, &coarse(&grid)?, lambdas, &policy.eigen)?)
            } else {
                None
            };
            warnings.extend(fine.warnings.iter().cloned());
            for (i, &l) in lambdas.iter().enumerate() {
                let delta = rough.as_ref().and_then(|r| match (fine.rows[i], r.rows[i]) {
                    (Some((_, a)), Some((_, b))) => Some((a - b) / 3.0),
                    _ => None,
                });
                push(l, fine.rows[i], &grid, fine.unresolved, delta, &mut warnings);
            }
        }
        GridMode::PerLambda => {
            let results = lambdas
                .par_iter()
                .map(|&l| -> Result<_> {
                    let (grid, note) = policy_grid(p, Some(spec), l, policy)?;
                    let fine = measure_on(p, spec, &grid, &[l], &policy.eigen)?;
                    let delta = if policy.richardson {
                        let r = measure_on(p, spec, &coarse(&grid)?, &[l], &policy.eigen)?;
                        match (fine.rows[0], r.rows[0]) {
                            (Some((_, a)), Some((_, b))) => Some((a - b) / 3.0),
                            _ => None,
                        }
                    } else {
                        None
                    };
                    Ok((l, grid, note, fine, delta))
                })
                .collect::<Result<Vec<_>>>()?;
            for (l, grid, note, fine, delta) in results {
                warnings.extend(note);
                warnings.extend(fine.warnings.iter().map(|w| format!("lambda = {l}: {w}")));
                push(l, fine.rows[0], &grid, fine.unresolved, delta, &mut warnings);
            }
        }
    }
    let alpha = sensor_alpha(spec);
    Ok(RatioCurve {
        samples,
        sensor: spec.descriptor(),
        potential: p.descriptor(),
        alpha,
        tau1: p.tau1(),
        tau2: p.tau2(),
        reference: ReferenceExponents::new(alpha, p.tau1(), p.tau2()),
        warnings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub s_hat: f64,
    pub a_hat: f64,
    pub b_hat: f64,
    pub residual: f64,
}

/// `0.05, 0.10, ..., 1.20`.
pub fn default_s_grid() -> Vec<f64> {
    (1..=24).map(|k| k as f64 / 20.0).collect()
}

/// Least squares `log(1/c) ≈ a + b lambda^s`, `b >= 0`, by grid search over `s`.
pub fn fit_exponent(curve: &RatioCurve, s_grid: &[f64]) -> Result<ExponentFit> {
    let pts: Vec<(f64, f64)> = curve
        .samples
        .iter()
        .filter(|s| s.c < 1.0)
        .map(|s| (s.lambda, (1.0 / s.c).ln()))
        .collect();
    fit_log_inverse(&pts, s_grid)
}

/// The fit on raw `(lambda, log(1/c))` points.
pub fn fit_log_inverse(pts: &[(f64, f64)], s_grid: &[f64]) -> Result<ExponentFit> {
    if pts.len() < 4 {
        return Err(Error::NoDecay(format!(
            "{} samples with c < 1, need at least 4",
            pts.len()
        )));
    }
    if pts.iter().any(|(_, y)| !y.is_finite()) {
        return Err(Error::NoDecay("c = 0 at some threshold".into()));
    }
    if s_grid.is_empty() {
        return Err(Error::invalid("empty exponent grid"));
    }
    let y_scale = pts.iter().map(|p| p.1 * p.1).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut best: Option<ExponentFit> = None;
    for &s in s_grid {
        let x: Vec<f64> = pts.iter().map(|p| p.0.powf(s)).collect();
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
        let sxy: f64 = x.iter().zip(pts).map(|(v, p)| (v - mx) * (p.1 - my)).sum();
        let b = if sxx > 0.0 { (sxy / sxx).max(0.0) } else { 0.0 };
        let a = my - b * mx;
        let residual: f64 = x.iter().zip(pts).map(|(v, p)| (p.1 - a - b * v).powi(2)).sum();
        let better = match &best {
            None => true,
            Some(f) => residual < f.residual - 1e-12 * y_scale,
        };
        if better {
            best = Some(ExponentFit {
                s_hat: s,
                a_hat: a,
                b_hat: b,
                residual,
            });
        }
    }
    let fit = best.expect("nonempty grid");
    if fit.b_hat == 0.0 {
        return Err(Error::NoDecay("log(1/c) does not grow with lambda".into()));
    }
    Ok(fit)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub fit: ExponentFit,
    pub reference: ReferenceExponents,
    /// `s_hat <= thm12`.
    pub consistent_with_thm12: bool,
    pub distance_to_conj: f64,
    pub alpha: f64,
    /// `tau1 - 2 tau2 / 3`.
    pub admissibility_bound: f64,
    pub admissible: bool,
    pub harmonic: bool,
    pub samples: usize,
    pub monotonicity_violations: usize,
    pub warnings: Vec<String>,
}

pub fn exponent_report(curve: &RatioCurve, fit: &ExponentFit) -> ExponentReport {
    let bound = curve.tau1 - 2.0 * curve.tau2 / 3.0;
    ExponentReport {
        fit: *fit,
        reference: curve.reference.clone(),
        consistent_with_thm12: fit.s_hat <= curve.reference.thm12,
        distance_to_conj: (fit.s_hat - curve.reference.conj).abs(),
        alpha: curve.alpha,
        admissibility_bound: bound,
        admissible: curve.alpha >= 0.0 && curve.alpha < bound,
        harmonic: curve.tau1 == 2.0 && curve.tau2 == 2.0,
        samples: curve.samples.len(),
        monotonicity_violations: curve.monotonicity_violations(),
        warnings: curve.warnings.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{assemble, eigendecompose};
    use crate::sensors::{DecayAxes, Placement};

    fn harmonic(n: usize, lmax: f64) -> Eigensystem {
        let g = Grid::new(1, 8.0, n).unwrap();
        let p = PotentialSpec::power_law(2.0).unwrap();
        let h = assemble(&g, &p).unwrap();
        eigendecompose(&h, &g, p.descriptor(), lmax, &EigenConfig::default()).unwrap()
    }

    fn equi(delta: f64) -> SensorSpec {
        SensorSpec::EquidistributedDecay {
            delta,
            alpha: 0.0,
            placement: Placement::Center,
            decay_axes: DecayAxes::All,
        }
    }

    #[test]
    fn gram_trivia() {
        let sys = harmonic(401, 12.0);
        let sub = sys.subspace(12.0).unwrap();
        let ones = SensorMask::from_weights(equi(0.2), sys.grid(), vec![1.0; sys.grid().len()]).unwrap();
        let zeros = SensorMask::from_weights(equi(0.2), sys.grid(), vec![0.0; sys.grid().len()]).unwrap();
        let g = gram(&sub, &ones).unwrap();
        for j in 0..g.order() {
            for k in 0..g.order() {
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((g.get(j, k) - want).abs() < 1e-10);
            }
        }
        assert!((observability_ratio(&sub, &ones).unwrap() - 1.0).abs() < 1e-10);
        assert!(gram(&sub, &zeros).unwrap().matrix().frobenius_norm() == 0.0);
        let mask = SensorMask::realize(&equi(0.2), sys.grid()).unwrap();
        let one = sys.subspace(1.5).unwrap();
        let f = sys.vector(0);
        let direct: f64 = sys.grid().weight() * f.iter().zip(mask.weights()).map(|(v, w)| w * v * v).sum::<f64>();
        assert!((gram(&one, &mask).unwrap().get(0, 0) - direct).abs() < 1e-14);
        assert!((observability_ratio(&one, &mask).unwrap() - direct.sqrt()).abs() < 1e-14);
        assert!(matches!(
            observability_ratio(&sys.subspace(0.5).unwrap(), &mask),
            Err(Error::EmptySubspace)
        ));
    }

    #[test]
    fn tensor_gram_matches_dense() {
        let g = Grid::new(2, 4.0, 31).unwrap();
        let p = PotentialSpec::anisotropic(2.0, 1).unwrap();
        let t = build_eigensystem(&p, &g, 10.0, &EigenConfig::default()).unwrap();
        let spec = SensorSpec::EquidistributedDecay {
            delta: 0.3,
            alpha: 0.5,
            placement: Placement::Random { seed: 1 },
            decay_axes: DecayAxes::First(1),
        };
        let mask = SensorMask::realize(&spec, &g).unwrap();
        let sub = t.subspace(10.0).unwrap();
        let fast = gram(&sub, &mask).unwrap();
        let slow = gram_dense(&t, sub.dim(), &mask);
        for j in 0..sub.dim() {
            for k in 0..=j {
                assert!((fast.get(j, k) - slow.get(j, k)).abs() < 1e-12);
            }
        }
        let ev = fast.eigenvalues().unwrap();
        assert!(ev[0] >= -1e-10 && ev[ev.len() - 1] <= 1.0 + 1e-10);
    }

    fn synthetic(f: impl Fn(f64) -> f64) -> RatioCurve {
        let samples = (0..12)
            .map(|i| {
                let lambda = 5.0 + 10.0 * i as f64;
                RatioSample {
                    lambda,
                    m: i + 1,
                    c: f(lambda),
                    half_width: 1.0,
                    n_axis: 3,
                    unresolved_fraction: 0.0,
                    richardson_delta: None,
                }
            })
            .collect();
        RatioCurve {
            samples,
            sensor: String::new(),
            potential: String::new(),
            alpha: 0.0,
            tau1: 2.0,
            tau2: 2.0,
            reference: ReferenceExponents::new(0.0, 2.0, 2.0),
            warnings: vec![],
        }
    }

    #[test]
    fn synthetic_exponents() {
        let grid = default_s_grid();
        let fit = fit_exponent(&synthetic(|l| (-2.0 * l.sqrt()).exp()), &grid).unwrap();
        assert!((fit.s_hat - 0.5).abs() <= 0.05 + 1e-12);
        let fit = fit_exponent(&synthetic(|l| (-(1.0 + 3.0 * l.powf(0.7))).exp()), &grid).unwrap();
        assert!((fit.s_hat - 0.7).abs() <= 0.05 + 1e-12);
        assert!((fit.a_hat - 1.0).abs() < 1e-6 && (fit.b_hat - 3.0).abs() < 1e-6);
        assert!(matches!(
            fit_exponent(&synthetic(|_| 0.3), &grid),
            Err(Error::NoDecay(_))
        ));
        assert!(matches!(
            fit_exponent(&synthetic(|_| 1.0), &grid),
            Err(Error::NoDecay(_))
        ));
    }

    #[test]
    fn reference_exponents_and_report() {
        let r = ReferenceExponents::new(0.0, 2.0, 2.0);
        assert!((r.thm12 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!((r.zhuz, r.conj), (0.5, 0.5));
        let curve = synthetic(|l| (-2.0 * l.sqrt()).exp());
        let fit = fit_exponent(&curve, &default_s_grid()).unwrap();
        let rep = exponent_report(&curve, &fit);
        assert!(rep.consistent_with_thm12 && rep.admissible && rep.harmonic);
        assert!((rep.admissibility_bound - 2.0 / 3.0).abs() < 1e-15);
        let mut bad = curve.clone();
        bad.alpha = 0.7;
        assert!(!exponent_report(&bad, &fit).admissible);
    }

    #[test]
    fn shared_scan_is_monotone() {
        let p = PotentialSpec::power_law(2.0).unwrap();
        let policy = GridPolicy {
            max_points_1d: 1200,
            richardson: true,
            ..GridPolicy::default()
        };
        let lambdas = [3.0, 7.0, 11.0, 15.0, 19.0];
        let small = ratio_scan(&p, &equi(0.2), &lambdas, &policy).unwrap();
        assert_eq!(small.monotonicity_violations(), 0);
        assert!(small.samples.iter().all(|s| s.c > 0.0 && s.c <= 1.0));
        assert!(small.samples.iter().all(|s| s.richardson_delta.unwrap().abs() < 1e-2));
        let pinned = GridPolicy {
            spacing: Some(0.02),
            half_width: Some(11.0),
            ..policy
        };
        let small = ratio_scan(&p, &equi(0.2), &lambdas, &pinned).unwrap();
        let large = ratio_scan(&p, &equi(0.3), &lambdas, &pinned).unwrap();
        for (a, b) in small.samples.iter().zip(&large.samples) {
            assert_eq!(a.n_axis, b.n_axis);
            assert!(b.c >= a.c);
        }
    }
}
