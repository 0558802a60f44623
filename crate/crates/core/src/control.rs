//! Heat semigroup on a truncated eigenbasis, its observability constant on a
//! sensor set, the closed-form upper bound, and minimal-norm null controls.
//!
//! With `a_k` the coefficients of `g`, the observed energy is
//! `int_0^T ||e^{-tH} g||^2_w dt = a^T B a` where
//! `B_jk = G_jk (1 - e^{-(l_j + l_k) T}) / (l_j + l_k)`, and the final state is
//! `a^T A a` with `A = diag(e^{-2 l_k T})`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Eigensystem, PotentialSpec, SpectralSubspace};
use crate::numerics::{dense_eigvals, gen_eig_extreme, Cholesky, DenseSym, Extreme, SolverConfig};
use crate::sensors::SensorMask;
use crate::specineq::gram;

/// Spectral coefficients at time `time`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatState {
    pub values: Vec<f64>,
    pub coeffs: Vec<f64>,
    pub time: f64,
}

impl HeatState {
    pub fn new(values: Vec<f64>, coeffs: Vec<f64>) -> Result<Self> {
        if values.len() != coeffs.len() {
            return Err(Error::invalid("values and coefficients differ in length"));
        }
        Ok(Self {
            values,
            coeffs,
            time: 0.0,
        })
    }

    /// Projects a grid function onto the subspace.
    pub fn project(sub: &SpectralSubspace<'_>, g: &[f64]) -> Result<Self> {
        let grid = sub.system().grid();
        if g.len() != grid.len() {
            return Err(Error::invalid("function does not match the grid"));
        }
        let coeffs = (0..sub.dim()).map(|k| grid.inner(g, &sub.vector(k))).collect();
        Self::new(sub.values().to_vec(), coeffs)
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

/// `a_k <- a_k e^{-l_k dt}`.
pub fn heat_propagate(state: &HeatState, dt: f64) -> Result<HeatState> {
    if !(dt >= 0.0) {
        return Err(Error::invalid("time step must be nonnegative"));
    }
    let coeffs = state
        .coeffs
        .iter()
        .zip(&state.values)
        .map(|(a, l)| a * (-l * dt).exp())
        .collect();
    Ok(HeatState {
        values: state.values.clone(),
        coeffs,
        time: state.time + dt,
    })
}

/// `(1 - e^{-s T}) / s`, continuous at `s = 0`.
fn decay_integral(s: f64, t: f64) -> f64 {
    let x = s * t;
    if x.abs() < 1e-8 {
        t * (1.0 - x / 2.0)
    } else {
        -(-x).exp_m1() / s
    }
}

/// The Gramians of one `(mask, T, truncation)` triple, factored once.
#[derive(Clone, Debug)]
pub struct Observability {
    horizon: f64,
    truncation: f64,
    values: Vec<f64>,
    a: DenseSym,
    b: DenseSym,
    chol: Cholesky,
    smallest_b: f64,
}

impl Observability {
    pub fn new(sys: &Eigensystem, mask: &SensorMask, horizon: f64, truncation: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("time horizon must be positive"));
        }
        let sub = sys.subspace(truncation)?;
        let m = sub.dim();
        if m == 0 {
            return Err(Error::EmptySubspace);
        }
        let g = gram(&sub, mask)?;
        let values = sub.values().to_vec();
        let b = DenseSym::from_fn(m, |j, k| g.get(j, k) * decay_integral(values[j] + values[k], horizon));
        let a = DenseSym::diagonal(&values.iter().map(|l| (-2.0 * l * horizon).exp()).collect::<Vec<_>>());
        let eig = dense_eigvals(&b, &SolverConfig::default())?;
        let smallest_b = eig[0];
        let largest = eig[m - 1];
        if !(smallest_b > 1e-13 * largest) {
            return Err(Error::SingularGramian { smallest: smallest_b });
        }
        let chol = Cholesky::factor(&b).map_err(|_| Error::SingularGramian { smallest: smallest_b })?;
        Ok(Self {
            horizon,
            truncation,
            values,
            a,
            b,
            chol,
            smallest_b,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Time-integrated observation Gramian.
    pub fn gramian(&self) -> &DenseSym {
        &self.b
    }

    /// Largest `mu` with `A v = mu B v`, and its `B`-normalised direction.
    pub fn cobs_sq(&self) -> Result<(f64, Vec<f64>)> {
        gen_eig_extreme(&self.a, &self.b, Extreme::Max, &SolverConfig::default())
    }

    pub fn estimate(&self) -> Result<CobsEstimate> {
        let (cobs_sq, _) = self.cobs_sq()?;
        Ok(CobsEstimate {
            horizon: self.horizon,
            truncation: self.truncation,
            m: self.dim(),
            cobs_sq,
            cobs: cobs_sq.sqrt(),
            smallest_b: self.smallest_b,
            bound: None,
            remark: None,
            notes: Vec::new(),
        })
    }

    /// Minimal-norm control steering coefficients `a` to zero at time `T`.
    pub fn control(&self, a: &[f64]) -> Result<NullControl> {
        if a.len() != self.dim() {
            return Err(Error::invalid(format!(
                "expected {} coefficients, got {}",
                self.dim(),
                a.len()
            )));
        }
        let target: Vec<f64> = a
            .iter()
            .zip(&self.values)
            .map(|(ak, l)| ak * (-l * self.horizon).exp())
            .collect();
        let mut c: Vec<f64> = target.iter().map(|x| -x).collect();
        self.chol.solve(&mut c);
        let bc = self.b.mul_vec(&c);
        let cost_sq: f64 = c.iter().zip(&bc).map(|(x, y)| x * y).sum();
        let final_state: Vec<f64> = target.iter().zip(&bc).map(|(x, y)| x + y).collect();
        Ok(NullControl {
            horizon: self.horizon,
            values: self.values.clone(),
            coeffs: c,
            cost: cost_sq.max(0.0).sqrt(),
            final_norm: final_state.iter().map(|x| x * x).sum::<f64>().sqrt(),
            initial_norm: a.iter().map(|x| x * x).sum::<f64>().sqrt(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CobsEstimate {
    pub horizon: f64,
    pub truncation: f64,
    pub m: usize,
    pub cobs_sq: f64,
    pub cobs: f64,
    pub smallest_b: f64,
    pub bound: Option<f64>,
    pub remark: Option<f64>,
    pub notes: Vec<String>,
}

impl CobsEstimate {
    /// Fills in the closed-form bound and, when `tau1 = tau2`, the power-law form.
    pub fn attach_bounds(&mut self, p: &PotentialSpec, delta: f64, alpha: f64, params: &BoundParams) {
        match cobs_bound(self.horizon, delta, alpha, p, params.k, params.c) {
            Ok(v) => self.bound = Some(v),
            Err(e) => self.notes.push(e.to_string()),
        }
        if p.tau1() == p.tau2() {
            match remark_bound(self.horizon, params.d, alpha, p.tau1()) {
                Ok(v) => self.remark = Some(v),
                Err(e) => self.notes.push(e.to_string()),
            }
        }
        if params.is_default() {
            self.notes.push(BoundParams::DEFAULT_NOTE.to_string());
        }
    }
}

pub fn estimate_cobs(sys: &Eigensystem, mask: &SensorMask, horizon: f64, truncation: f64) -> Result<CobsEstimate> {
    Observability::new(sys, mask, horizon, truncation)?.estimate()
}

/// The unknown constants `K`, `C` and `D` of the bound; placeholders only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundParams {
    pub k: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        Self { k: 1.0, c: 1.0, d: 1.0 }
    }
}

impl BoundParams {
    pub const DEFAULT_NOTE: &'static str =
        "K = C = D = 1 are placeholders: the true constants exist but are not known, so bound values are illustrative only";

    pub fn is_default(&self) -> bool {
        *self == Self::default()
    }
}

/// `s = (alpha + 2 tau2 / 3) / tau1`.
pub fn bound_exponent(alpha: f64, tau1: f64, tau2: f64) -> f64 {
    (alpha + 2.0 * tau2 / 3.0) / tau1
}

/// Natural log of `(K/T) (2 d0 + 1)^K exp[K (d1 / T^s)^{1/(1-s)}]`,
/// `d1 = -C^{1+alpha} ln delta`, `d0 = delta^{-C^{1+alpha}} = e^{d1}`.
pub fn cobs_bound_ln(horizon: f64, delta: f64, alpha: f64, p: &PotentialSpec, k: f64, c: f64) -> Result<f64> {
    if !(horizon > 0.0) {
        return Err(Error::invalid("time horizon must be positive"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta must lie in (0, 1)"));
    }
    if !(k >= 1.0) || !(c > 0.0) || !(alpha >= 0.0) {
        return Err(Error::invalid("bound needs K >= 1, C > 0, alpha >= 0"));
    }
    let s = bound_exponent(alpha, p.tau1(), p.tau2());
    if s >= 1.0 {
        return Err(Error::BoundInapplicable { s });
    }
    let d1 = -c.powf(1.0 + alpha) * delta.ln();
    // ln(2 e^{d1} + 1)
    let ln_base = d1 + (2.0 + (-d1).exp()).ln();
    let ln_inner = (d1.ln() - s * horizon.ln()) / (1.0 - s);
    Ok(k.ln() - horizon.ln() + k * ln_base + k * ln_inner.exp())
}

pub fn cobs_bound(horizon: f64, delta: f64, alpha: f64, p: &PotentialSpec, k: f64, c: f64) -> Result<f64> {
    cobs_bound_ln(horizon, delta, alpha, p, k, c).map(f64::exp)
}

/// `D / T^{1 + (2 alpha + tau/3) / (tau/3 - alpha)}`.
pub fn remark_bound(horizon: f64, d: f64, alpha: f64, tau: f64) -> Result<f64> {
    if !(alpha < tau / 3.0) {
        return Err(Error::BoundInapplicable {
            s: bound_exponent(alpha, tau, tau),
        });
    }
    Ok(d / horizon.powf(1.0 + (2.0 * alpha + tau / 3.0) / (tau / 3.0 - alpha)))
}

/// `u(t) = w * sum_k c_k e^{-l_k (T - t)} f_k` on the sensor set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullControl {
    pub horizon: f64,
    pub values: Vec<f64>,
    pub coeffs: Vec<f64>,
    pub cost: f64,
    pub final_norm: f64,
    pub initial_norm: f64,
}

impl NullControl {
    /// The control at time `t` as a grid function.
    pub fn at(&self, sub: &SpectralSubspace<'_>, mask: &SensorMask, t: f64) -> Vec<f64> {
        let w: Vec<f64> = self
            .coeffs
            .iter()
            .zip(&self.values)
            .map(|(c, l)| c * (-l * (self.horizon - t)).exp())
            .collect();
        let mut u = sub.combine(&w);
        u.iter_mut().zip(mask.weights()).for_each(|(x, m)| *x *= m);
        u
    }

    pub fn trajectory(&self, sub: &SpectralSubspace<'_>, mask: &SensorMask, times: &[f64]) -> Vec<Vec<f64>> {
        times.par_iter().map(|&t| self.at(sub, mask, t)).collect()
    }

    /// `||final|| <= 1e-8 ||g||`.
    pub fn reaches_zero(&self) -> bool {
        self.final_norm <= 1e-8 * self.initial_norm
    }
}

pub fn min_norm_control(
    sys: &Eigensystem,
    mask: &SensorMask,
    horizon: f64,
    truncation: f64,
    coeffs: &[f64],
) -> Result<NullControl> {
    Observability::new(sys, mask, horizon, truncation)?.control(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_eigensystem, EigenConfig, Grid};
    use crate::numerics::fit_loglog;
    use crate::sensors::{DecayAxes, Placement, SensorSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn harmonic(lmax: f64) -> Eigensystem {
        let g = Grid::new(1, 8.0, 401).unwrap();
        let p = PotentialSpec::power_law(2.0).unwrap();
        build_eigensystem(&p, &g, lmax, &EigenConfig::default()).unwrap()
    }

    fn full(sys: &Eigensystem) -> SensorMask {
        let spec = SensorSpec::BallUnion { alpha: 0.0 };
        SensorMask::from_weights(spec, sys.grid(), vec![1.0; sys.grid().len()]).unwrap()
    }

    fn sparse(sys: &Eigensystem) -> SensorMask {
        let spec = SensorSpec::EquidistributedDecay {
            delta: 0.2,
            alpha: 0.0,
            placement: Placement::Center,
            decay_axes: DecayAxes::All,
        };
        SensorMask::realize(&spec, sys.grid()).unwrap()
    }

    #[test]
    fn semigroup() {
        let s = HeatState::new(vec![1.0, 3.0, 5.0], vec![1.0, -2.0, 0.5]).unwrap();
        assert_eq!(heat_propagate(&s, 0.0).unwrap().coeffs, s.coeffs);
        let ab = heat_propagate(&heat_propagate(&s, 0.3).unwrap(), 0.4).unwrap();
        let c = heat_propagate(&s, 0.7).unwrap();
        for (x, y) in ab.coeffs.iter().zip(&c.coeffs) {
            assert!((x - y).abs() <= 1e-14);
        }
        let one = HeatState::new(vec![3.0], vec![2.0]).unwrap();
        let r = heat_propagate(&one, 0.5).unwrap().norm() / one.norm();
        assert!((r - (-1.5f64).exp()).abs() < 1e-15);
        assert!(heat_propagate(&s, -1.0).is_err());
    }

    #[test]
    fn full_mask_closed_forms() {
        let sys = harmonic(12.0);
        let mask = full(&sys);
        let l1 = sys.values()[0];
        let t = 0.7;
        let e = estimate_cobs(&sys, &mask, t, l1 + 0.5).unwrap();
        assert_eq!(e.m, 1);
        let x = (-2.0 * l1 * t).exp();
        assert!((e.cobs_sq / (x * 2.0 * l1 / (1.0 - x)) - 1.0).abs() < 1e-9);

        let e = estimate_cobs(&sys, &mask, t, 12.0).unwrap();
        let lm = sys.subspace(12.0).unwrap().values().last().copied().unwrap();
        assert!(e.cobs_sq <= 2.0 * lm / (1.0 - (-2.0 * lm * t).exp()) * (1.0 + 1e-9));

        let ctrl = min_norm_control(&sys, &mask, t, l1 + 0.5, &[1.5]).unwrap();
        let c1 = -1.5 * (-l1 * t).exp() / decay_integral(2.0 * l1, t);
        assert!((ctrl.coeffs[0] / c1 - 1.0).abs() < 1e-10);
        assert!(ctrl.final_norm <= 1e-14);
    }

    #[test]
    fn horizon_scan_decreases_with_slope() {
        let sys = harmonic(12.0);
        let mask = full(&sys);
        let ts: Vec<f64> = (0..12).map(|i| 0.1 * 1.5f64.powi(i)).collect();
        let c: Vec<f64> = ts
            .iter()
            .map(|&t| estimate_cobs(&sys, &mask, t, 12.0).unwrap().cobs)
            .collect();
        assert!(c.windows(2).all(|w| w[1] < w[0]));
        let (slope, _) = fit_loglog(&ts[8..], &c[8..]).unwrap();
        assert!(slope <= -0.4, "{slope}");
    }

    #[test]
    fn truncation_is_monotone() {
        let sys = harmonic(24.0);
        let mask = sparse(&sys);
        let mut prev = 0.0;
        for lam in [4.0, 8.0, 12.0, 16.0, 24.0] {
            let e = estimate_cobs(&sys, &mask, 0.5, lam).unwrap();
            assert!(e.cobs_sq >= prev * (1.0 - 1e-12));
            prev = e.cobs_sq;
        }
    }

    #[test]
    fn duality() {
        let sys = harmonic(16.0);
        let mask = sparse(&sys);
        let obs = Observability::new(&sys, &mask, 0.5, 16.0).unwrap();
        let (cobs_sq, v) = obs.cobs_sq().unwrap();
        let cobs = cobs_sq.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let g: Vec<f64> = (0..obs.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let ctrl = obs.control(&g).unwrap();
            assert!(ctrl.reaches_zero());
            worst = worst.max(ctrl.cost / ctrl.initial_norm);
        }
        assert!(worst <= cobs * (1.0 + 1e-6));
        // extremal initial state: a = A^{1/2} v, up to normalisation
        let a: Vec<f64> = v.iter().zip(obs.values()).map(|(x, l)| x * (-l * 0.5).exp()).collect();
        let ctrl = obs.control(&a).unwrap();
        assert!((ctrl.cost / ctrl.initial_norm / cobs - 1.0).abs() < 0.05);
        let zero = obs.control(&vec![0.0; obs.dim()]).unwrap();
        assert_eq!(zero.cost, 0.0);
        assert!(zero.coeffs.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn bound_algebra() {
        for (alpha, tau) in [(0.0, 2.0), (0.3, 2.0), (0.1, 1.0), (0.5, 4.0)] {
            let s = bound_exponent(alpha, tau, tau);
            let rhs = 1.0 + (2.0 * alpha + tau / 3.0) / (tau / 3.0 - alpha);
            assert!((s / (1.0 - s) - rhs).abs() < 1e-12);
        }
        let p = PotentialSpec::power_law(2.0).unwrap();
        let far = cobs_bound(1e8, 0.2, 0.0, &p, 1.0, 1.0).unwrap();
        let base = 2.0 / 0.2 + 1.0;
        assert!((far * 1e8 / base - 1.0).abs() < 1e-3);
        match cobs_bound(1.0, 0.2, 0.7, &p, 1.0, 1.0) {
            Err(Error::BoundInapplicable { s }) => assert!(s >= 1.0),
            other => panic!("{other:?}"),
        }
        let mut e = estimate_cobs(&harmonic(6.0), &full(&harmonic(6.0)), 1.0, 6.0).unwrap();
        e.attach_bounds(&p, 0.2, 0.0, &BoundParams::default());
        assert!(e.bound.unwrap() > 0.0 && e.remark.unwrap() > 0.0);
        assert!(e.notes.iter().any(|n| n.contains("placeholders")));
    }
}
