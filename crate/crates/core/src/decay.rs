//! Weighted `L²` norms of eigenfunctions and the `H¹` localisation radius of
//! spectral subspaces.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Eigensystem, Grid, PotentialSpec};
use crate::numerics::fit_loglog;

/// Largest admissible `mu L`.
pub const WEIGHT_GUARD: f64 = 700.0;

/// Candidate rates for the gradient growth `e^{-nu |x|} |grad V|`.
pub const NU_CANDIDATES: [f64; 4] = [0.1, 0.25, 0.5, 1.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormReport {
    pub mu: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub radius: f64,
    /// Growth parameters, for the gradient estimate only.
    pub nu: Option<f64>,
    pub m_nu: Option<f64>,
    pub note: Option<String>,
}

/// `||e^{mu |x|} f||` by quadrature.
pub fn weighted_l2(grid: &Grid, f: &[f64], mu: f64) -> Result<f64> {
    if f.len() != grid.len() {
        return Err(Error::invalid("function length does not match the grid"));
    }
    if !(mu >= 0.0) {
        return Err(Error::invalid(format!("weight rate must be nonnegative, got {mu}")));
    }
    let product = mu * grid.half_width();
    if product > WEIGHT_GUARD {
        return Err(Error::WeightOverflow { product });
    }
    // scale by the largest log-term so that large weights on tiny values do not overflow
    let logs: Vec<f64> = f
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| mu * grid.radius(i) + v.abs().ln())
        .collect();
    let Some(top) = logs.iter().copied().reduce(f64::max) else {
        return Ok(0.0);
    };
    let sum: f64 = logs.iter().map(|l| (2.0 * (l - top)).exp()).sum();
    Ok(top.exp() * (grid.weight() * sum).sqrt())
}

/// Radius `R >= 1` with `R^{tau1} >= q / c1`.
fn radius_for(q: f64, p: &PotentialSpec) -> f64 {
    (q / p.c1()).powf(1.0 / p.tau1()).max(1.0)
}

fn require_box(grid: &Grid, r: f64) -> Result<()> {
    if grid.half_width() < r + 2.0 {
        return Err(Error::BoxTooSmall {
            half_width: grid.half_width(),
            required: r + 2.0,
        });
    }
    Ok(())
}

/// `||e^{|x|/2} f||² <= 8 e^{R+1} ||f||²`.
pub fn check_prop34(grid: &Grid, lambda: f64, f: &[f64], p: &PotentialSpec) -> Result<WeightedNormReport> {
    let r = radius_for(lambda + 2.0, p);
    require_box(grid, r)?;
    let lhs = weighted_l2(grid, f, 0.5)?.powi(2);
    let rhs = 8.0 * (r + 1.0).exp() * grid.inner(f, f);
    Ok(WeightedNormReport {
        mu: 0.5,
        lhs,
        rhs,
        ratio: lhs / rhs,
        radius: r,
        nu: None,
        m_nu: None,
        note: None,
    })
}

/// The rate `nu` and bound `M_nu` used by [`check_prop35`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthChoice {
    pub nu: f64,
    pub m_nu: f64,
    /// `e^{-nu |x|} |grad V|` was found nonincreasing beyond `|x| = 1`.
    pub decreasing: bool,
    pub note: Option<String>,
}

/// Uses the potential's own growth parameters when set. Otherwise picks the
/// smallest candidate rate whose weighted gradient is nonincreasing beyond the
/// unit ball on the box, falling back to the largest; `M_nu` is the sup over
/// the box outside the unit ball in either case.
pub fn growth_choice(grid: &Grid, p: &PotentialSpec) -> GrowthChoice {
    if let Some(g) = p.growth() {
        return GrowthChoice {
            nu: g.nu,
            m_nu: g.m_nu,
            decreasing: true,
            note: Some("growth parameters supplied".into()),
        };
    }
    let d = grid.dim();
    let mut samples: Vec<(f64, f64)> = (0..grid.len())
        .filter(|&i| grid.radius(i) >= 1.0)
        .map(|i| {
            let x = grid.coords(i);
            (grid.radius(i), p.gradient_norm(&x[..d]))
        })
        .collect();
    for axis in 0..d {
        let mut x = [0.0; 2];
        x[axis] = 1.0;
        samples.push((1.0, p.gradient_norm(&x[..d])));
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let weighted = |nu: f64| -> Vec<f64> { samples.iter().map(|(r, g)| (-nu * r).exp() * g).collect() };
    let sup = |w: &[f64]| w.iter().copied().fold(0.0, f64::max);
    for nu in NU_CANDIDATES {
        let w = weighted(nu);
        let decreasing = w.windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-9) + 1e-300);
        if decreasing {
            return GrowthChoice {
                nu,
                m_nu: sup(&w),
                decreasing: true,
                note: None,
            };
        }
    }
    let nu = NU_CANDIDATES[NU_CANDIDATES.len() - 1];
    GrowthChoice {
        nu,
        m_nu: sup(&weighted(nu)),
        decreasing: false,
        note: Some(format!(
            "no candidate rate makes e^(-nu|x|)|grad V| decreasing beyond |x|=1; nu={nu} with M_nu taken as the box sup"
        )),
    }
}

/// `||e^{|x|/2} |grad f|||² <= (8 lambda + (2 nu + 5) M_nu²) e^{2(1+nu)(R+1)} ||f||²`.
pub fn check_prop35(grid: &Grid, lambda: f64, f: &[f64], p: &PotentialSpec) -> Result<WeightedNormReport> {
    let g = growth_choice(grid, p);
    check_prop35_with(grid, lambda, f, p, &g)
}

pub fn check_prop35_with(
    grid: &Grid,
    lambda: f64,
    f: &[f64],
    p: &PotentialSpec,
    g: &GrowthChoice,
) -> Result<WeightedNormReport> {
    let r = radius_for((g.nu + 1.0).powi(2) + lambda + 1.0, p);
    require_box(grid, r)?;
    let grad: Vec<f64> = grid.gradient_sq(f).iter().map(|v| v.sqrt()).collect();
    let lhs = weighted_l2(grid, &grad, 0.5)?.powi(2);
    let rhs = (8.0 * lambda + (2.0 * g.nu + 5.0) * g.m_nu * g.m_nu)
        * (2.0 * (1.0 + g.nu) * (r + 1.0)).exp()
        * grid.inner(f, f);
    Ok(WeightedNormReport {
        mu: 0.5,
        lhs,
        rhs,
        ratio: lhs / rhs,
        radius: r,
        nu: Some(g.nu),
        m_nu: Some(g.m_nu),
        note: g.note.clone(),
    })
}

/// `|f|² + |grad f|²` per point, times the quadrature weight.
fn h1_density(grid: &Grid, f: &[f64]) -> Vec<f64> {
    let w = grid.weight();
    grid.gradient_sq(f)
        .iter()
        .zip(f)
        .map(|(g, v)| w * (v * v + g))
        .collect()
}

/// `||f||²_{H¹}` over the grid points with `|x| > r`.
pub fn h1_tail(grid: &Grid, f: &[f64], r: f64) -> Result<f64> {
    if f.len() != grid.len() {
        return Err(Error::invalid("function length does not match the grid"));
    }
    if !(r >= 0.0) {
        return Err(Error::invalid(format!("radius must be nonnegative, got {r}")));
    }
    Ok(h1_density(grid, f)
        .iter()
        .enumerate()
        .filter(|(i, _)| grid.radius(*i) > r)
        .map(|(_, v)| v)
        .sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationPoint {
    pub lambda: f64,
    pub subspace_dim: usize,
    pub r_star: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationCurve {
    pub points: Vec<LocalizationPoint>,
    /// Exponent `e` in `r* ~ lambda^e`; `None` with fewer than two points.
    pub fitted_e: Option<f64>,
    pub prefactor: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl LocalizationCurve {
    /// `max r* / lambda^{1/tau1}`.
    pub fn effective_constant(&self, tau1: f64) -> Option<f64> {
        self.points
            .iter()
            .map(|p| p.r_star / p.lambda.powf(1.0 / tau1))
            .reduce(f64::max)
    }

    /// Centred moving average of `r*` over windows of three.
    pub fn smoothed_r_star(&self) -> Vec<f64> {
        let r: Vec<f64> = self.points.iter().map(|p| p.r_star).collect();
        (0..r.len())
            .map(|i| {
                let lo = i.saturating_sub(1);
                let hi = (i + 2).min(r.len());
                r[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
            })
            .collect()
    }
}

/// Points grouped by radius, ascending.
struct RadialOrder {
    order: Vec<usize>,
    radii: Vec<f64>,
}

impl RadialOrder {
    fn new(grid: &Grid) -> Self {
        let radii = grid.radii();
        let mut order: Vec<usize> = (0..radii.len()).collect();
        order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
        Self { order, radii }
    }

    /// Smallest `r` among `{0} ∪ {|x_i|}` whose tail mass is at most `half`.
    fn min_radius(&self, density: &[f64], half: f64) -> f64 {
        let mut tail: f64 = self
            .order
            .iter()
            .filter(|&&i| self.radii[i] > 0.0)
            .map(|&i| density[i])
            .sum();
        if tail <= half {
            return 0.0;
        }
        let mut j = 0;
        while j < self.order.len() {
            let r = self.radii[self.order[j]];
            while j < self.order.len() && self.radii[self.order[j]] == r {
                if r > 0.0 {
                    tail -= density[self.order[j]];
                }
                j += 1;
            }
            if tail <= half {
                return r;
            }
        }
        self.radii[self.order[self.order.len() - 1]]
    }
}

fn lambda_rng(seed: u64, lambda: f64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(lambda.to_bits());
    rng
}

/// Minimal radius `r*(lambda)` with `max_trials ||f||²_{H¹(|x| > r)} <= ||f||²/2`
/// over seeded random unit `f` in `Ran P_lambda`.
pub fn localization_scan(sys: &Eigensystem, lambdas: &[f64], trials: usize, seed: u64) -> Result<LocalizationCurve> {
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let grid = sys.grid();
    let radial = RadialOrder::new(grid);
    let results: Vec<Result<(f64, usize, Option<f64>)>> = lambdas
        .par_iter()
        .map(|&lambda| {
            let sub = sys.subspace(lambda)?;
            let m = sub.dim();
            if m == 0 {
                return Ok((lambda, 0, None));
            }
            let mut rng = lambda_rng(seed, lambda);
            let mut worst: f64 = 0.0;
            for _ in 0..trials {
                let mut c: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
                c.iter_mut().for_each(|v| *v /= norm);
                let f = sub.combine(&c);
                let half = 0.5 * grid.inner(&f, &f);
                worst = worst.max(radial.min_radius(&h1_density(grid, &f), half));
            }
            Ok((lambda, m, Some(worst)))
        })
        .collect();
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for r in results {
        match r? {
            (lambda, m, Some(r_star)) => points.push(LocalizationPoint {
                lambda,
                subspace_dim: m,
                r_star,
            }),
            (lambda, _, None) => warnings.push(format!("lambda = {lambda}: empty spectral subspace, skipped")),
        }
    }
    let (fitted_e, prefactor) = if points.len() >= 2 {
        let l: Vec<f64> = points.iter().map(|p| p.lambda).collect();
        let r: Vec<f64> = points.iter().map(|p| p.r_star).collect();
        match fit_loglog(&l, &r) {
            Ok((e, c)) => (Some(e), Some(c.exp())),
            Err(e) => {
                warnings.push(format!("exponent fit failed: {e}"));
                (None, None)
            }
        }
    } else {
        (None, None)
    };
    Ok(LocalizationCurve {
        points,
        fitted_e,
        prefactor,
        trials,
        seed,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{assemble, eigendecompose, EigenConfig};

    fn harmonic(l: f64, n: usize, lmax: f64) -> Eigensystem {
        let g = Grid::new(1, l, n).unwrap();
        let p = PotentialSpec::power_law(2.0).unwrap();
        let h = assemble(&g, &p).unwrap();
        eigendecompose(&h, &g, p.descriptor(), lmax, &EigenConfig::default()).unwrap()
    }

    #[test]
    fn weighted_norm_trivia() {
        let g = Grid::new(1, 3.0, 11).unwrap();
        let f: Vec<f64> = (0..11).map(|i| (i as f64).sin()).collect();
        assert!((weighted_l2(&g, &f, 0.0).unwrap() - g.norm(&f)).abs() < 1e-14);
        let mut e = vec![0.0; 11];
        e[2] = 1.0;
        let want = (0.7 * g.axis()[2].abs()).exp() * g.spacing().sqrt();
        assert!((weighted_l2(&g, &e, 0.7).unwrap() - want).abs() < 1e-14 * want);
        assert!(matches!(weighted_l2(&g, &f, 300.0), Err(Error::WeightOverflow { .. })));
    }

    #[test]
    fn gaussian_weighted_norm() {
        let sys = harmonic(8.0, 8001, 1.0);
        let f = sys.vector(0);
        let lhs = weighted_l2(sys.grid(), &f, 0.5).unwrap().powi(2);
        let oracle = 0.25f64.exp() * (1.0 + libm::erf(0.5));
        assert!((lhs - oracle).abs() < 1e-6, "{lhs} vs {oracle}");
        let p = PotentialSpec::power_law(2.0).unwrap();
        let rep = check_prop34(sys.grid(), sys.values()[0], &f, &p).unwrap();
        assert!((rep.radius - 3f64.sqrt()).abs() < 1e-3);
        assert!(rep.ratio < 1.0);
    }

    #[test]
    fn dirichlet_form_identity() {
        let sys = harmonic(9.0, 2000, 20.0);
        let p = PotentialSpec::power_law(2.0).unwrap();
        for k in 0..sys.len() {
            let f = sys.vector(k);
            let grad: f64 = sys.grid().weight() * sys.grid().gradient_sq(&f).iter().sum::<f64>();
            assert!(grad <= sys.values()[k] * 1.02);
            assert!(check_prop35(sys.grid(), sys.values()[k], &f, &p).unwrap().ratio <= 1.0);
        }
    }

    #[test]
    fn growth_policy() {
        let g = Grid::new(1, 12.0, 1000).unwrap();
        let lin = growth_choice(&g, &PotentialSpec::power_law(1.0).unwrap());
        assert_eq!(lin.nu, 0.1);
        assert!((lin.m_nu - (-0.1f64).exp()).abs() < 1e-12);
        assert_eq!(growth_choice(&g, &PotentialSpec::power_law(2.0).unwrap()).nu, 1.0);
        let quartic = growth_choice(&g, &PotentialSpec::power_law(4.0).unwrap());
        assert!(!quartic.decreasing);
        assert!((quartic.m_nu - 108.0 * (-3f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn tail_partition() {
        let g = Grid::new(2, 3.0, 20).unwrap();
        let f: Vec<f64> = (0..g.len()).map(|i| (-g.radius(i).powi(2)).exp()).collect();
        let full = h1_tail(&g, &f, 0.0).unwrap();
        let dens: f64 = h1_density(&g, &f).iter().sum();
        assert!((full - dens).abs() < 1e-14 * dens);
        let mut last = full;
        for r in [0.5, 1.0, 2.0, 3.0] {
            let t = h1_tail(&g, &f, r).unwrap();
            let inside: f64 = h1_density(&g, &f)
                .iter()
                .enumerate()
                .filter(|(i, _)| g.radius(*i) <= r)
                .map(|(_, v)| v)
                .sum();
            assert!((t + inside - full).abs() < 1e-12 * full);
            assert!(t <= last);
            last = t;
        }
        assert_eq!(h1_tail(&g, &f, 3.0 * 2f64.sqrt()).unwrap(), 0.0);
    }

    #[test]
    fn single_mode_scan_is_half_mass_radius() {
        let sys = harmonic(8.0, 400, 1.5);
        let curve = localization_scan(&sys, &[1.5], 4, 1).unwrap();
        let f = sys.vector(0);
        let g = sys.grid();
        let r = curve.points[0].r_star;
        assert!(h1_tail(g, &f, r).unwrap() <= 0.5);
        let below = g.axis().iter().map(|x| x.abs()).filter(|x| *x < r).fold(0.0, f64::max);
        assert!(h1_tail(g, &f, below).unwrap() > 0.5);
    }

    #[test]
    fn more_trials_never_shrink_radius_and_empty_is_skipped() {
        let sys = harmonic(9.0, 600, 20.0);
        let a = localization_scan(&sys, &[0.5, 9.0, 17.0], 8, 3).unwrap();
        let b = localization_scan(&sys, &[0.5, 9.0, 17.0], 16, 3).unwrap();
        assert_eq!(a.points.len(), 2);
        assert_eq!(a.warnings.len(), 1);
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!(q.r_star >= p.r_star);
        }
    }
}
