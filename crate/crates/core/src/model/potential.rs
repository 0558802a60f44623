use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pointwise potential for the two-sided power class.
#[derive(Clone)]
pub enum Sampler {
    /// `c1 |x|^tau1 + w (c2 |x|^tau2 - c1 |x|^tau1)_+`, `w` in `[0, 1]`.
    Interpolate { weight: f64 },
    Custom {
        label: String,
        f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sampler::Interpolate { weight } => write!(f, "Interpolate({weight})"),
            Sampler::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum PotentialKind {
    /// `|x|^tau`.
    PowerLaw { tau: f64 },
    /// `|x_1|^tau` where `x_1` collects the first `confined_axes` coordinates.
    Anisotropic { tau: f64, confined_axes: usize },
    /// Any `V` with `c1 |x|^tau1 <= V(x) <= c2 |x|^tau2`.
    TwoSidedPower {
        c1: f64,
        tau1: f64,
        c2: f64,
        tau2: f64,
        sampler: Sampler,
    },
}

/// Growth of the gradient: `|grad V(x)| <= m_nu e^{nu |x|}` outside the unit ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthParams {
    pub nu: f64,
    pub m_nu: f64,
}

#[derive(Clone, Debug)]
pub struct PotentialSpec {
    kind: PotentialKind,
    growth: Option<GrowthParams>,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {v}")))
    }
}

impl PotentialSpec {
    pub fn power_law(tau: f64) -> Result<Self> {
        positive("tau", tau)?;
        Ok(Self {
            kind: PotentialKind::PowerLaw { tau },
            growth: None,
        })
    }

    pub fn anisotropic(tau: f64, confined_axes: usize) -> Result<Self> {
        positive("tau", tau)?;
        if confined_axes == 0 {
            return Err(Error::invalid("anisotropic potential needs at least one confined axis"));
        }
        Ok(Self {
            kind: PotentialKind::Anisotropic { tau, confined_axes },
            growth: None,
        })
    }

    pub fn two_sided(c1: f64, tau1: f64, c2: f64, tau2: f64, sampler: Sampler) -> Result<Self> {
        positive("c1", c1)?;
        positive("c2", c2)?;
        positive("tau1", tau1)?;
        positive("tau2", tau2)?;
        if tau1 > tau2 {
            return Err(Error::invalid(format!("tau1 = {tau1} must not exceed tau2 = {tau2}")));
        }
        if let Sampler::Interpolate { weight } = sampler {
            if !(0.0..=1.0).contains(&weight) {
                return Err(Error::invalid(format!("interpolation weight {weight} outside [0, 1]")));
            }
        }
        Ok(Self {
            kind: PotentialKind::TwoSidedPower {
                c1,
                tau1,
                c2,
                tau2,
                sampler,
            },
            growth: None,
        })
    }

    pub fn with_growth(mut self, growth: GrowthParams) -> Result<Self> {
        if !(growth.nu >= 0.0 && growth.m_nu >= 0.0) {
            return Err(Error::invalid("nu and M_nu must be nonnegative"));
        }
        self.growth = Some(growth);
        Ok(self)
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn growth(&self) -> Option<GrowthParams> {
        self.growth
    }

    pub fn c1(&self) -> f64 {
        match self.kind {
            PotentialKind::TwoSidedPower { c1, .. } => c1,
            _ => 1.0,
        }
    }

    pub fn c2(&self) -> f64 {
        match self.kind {
            PotentialKind::TwoSidedPower { c2, .. } => c2,
            _ => 1.0,
        }
    }

    pub fn tau1(&self) -> f64 {
        match self.kind {
            PotentialKind::PowerLaw { tau } | PotentialKind::Anisotropic { tau, .. } => tau,
            PotentialKind::TwoSidedPower { tau1, .. } => tau1,
        }
    }

    pub fn tau2(&self) -> f64 {
        match self.kind {
            PotentialKind::PowerLaw { tau } | PotentialKind::Anisotropic { tau, .. } => tau,
            PotentialKind::TwoSidedPower { tau2, .. } => tau2,
        }
    }

    pub fn confined_axes(&self) -> Option<usize> {
        match self.kind {
            PotentialKind::Anisotropic { confined_axes, .. } => Some(confined_axes),
            _ => None,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.kind {
            PotentialKind::PowerLaw { tau } => norm(x).powf(*tau),
            PotentialKind::Anisotropic { tau, confined_axes } => norm(&x[..(*confined_axes).min(x.len())]).powf(*tau),
            PotentialKind::TwoSidedPower {
                c1,
                tau1,
                c2,
                tau2,
                sampler,
            } => match sampler {
                Sampler::Interpolate { weight } => {
                    let r = norm(x);
                    let lo = c1 * r.powf(*tau1);
                    let hi = c2 * r.powf(*tau2);
                    lo + weight * (hi - lo).max(0.0)
                }
                Sampler::Custom { f, .. } => f(x),
            },
        }
    }

    /// `|grad V(x)|`, analytic where available, central differences otherwise.
    pub fn gradient_norm(&self, x: &[f64]) -> f64 {
        match &self.kind {
            PotentialKind::PowerLaw { tau } => {
                let r = norm(x);
                if r == 0.0 {
                    0.0
                } else {
                    tau * r.powf(tau - 1.0)
                }
            }
            PotentialKind::Anisotropic { tau, confined_axes } => {
                let r = norm(&x[..(*confined_axes).min(x.len())]);
                if r == 0.0 {
                    0.0
                } else {
                    tau * r.powf(tau - 1.0)
                }
            }
            PotentialKind::TwoSidedPower { .. } => {
                let mut acc = 0.0;
                let mut y = x.to_vec();
                for i in 0..x.len() {
                    let step = 1e-6 * x[i].abs().max(1.0);
                    y[i] = x[i] + step;
                    let up = self.value(&y);
                    y[i] = x[i] - step;
                    let down = self.value(&y);
                    y[i] = x[i];
                    let g = (up - down) / (2.0 * step);
                    acc += g * g;
                }
                acc.sqrt()
            }
        }
    }

    /// The bounds `(c1 |x|^tau1, c2 |x|^tau2)`.
    pub fn envelope(&self, x: &[f64]) -> (f64, f64) {
        let r = norm(x);
        (self.c1() * r.powf(self.tau1()), self.c2() * r.powf(self.tau2()))
    }

    pub fn descriptor(&self) -> String {
        let base = match &self.kind {
            PotentialKind::PowerLaw { tau } => format!("power_law(tau={tau})"),
            PotentialKind::Anisotropic { tau, confined_axes } => {
                format!("anisotropic(tau={tau},confined_axes={confined_axes})")
            }
            PotentialKind::TwoSidedPower {
                c1,
                tau1,
                c2,
                tau2,
                sampler,
            } => {
                let s = match sampler {
                    Sampler::Interpolate { weight } => format!("interpolate({weight})"),
                    Sampler::Custom { label, .. } => format!("custom({label})"),
                };
                format!("two_sided(c1={c1},tau1={tau1},c2={c2},tau2={tau2},sampler={s})")
            }
        };
        match self.growth {
            Some(g) => format!("{base};nu={},m_nu={}", g.nu, g.m_nu),
            None => base,
        }
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_values() {
        let p = PotentialSpec::power_law(2.0).unwrap();
        assert_eq!(p.value(&[3.0]), 9.0);
        assert_eq!(p.value(&[3.0, 4.0]), 25.0);
        assert_eq!(p.gradient_norm(&[3.0]), 6.0);
        assert_eq!((p.c1(), p.tau1(), p.c2(), p.tau2()), (1.0, 2.0, 1.0, 2.0));
    }

    #[test]
    fn anisotropic_ignores_free_axis() {
        let p = PotentialSpec::anisotropic(2.0, 1).unwrap();
        assert_eq!(p.value(&[2.0, 100.0]), 4.0);
        assert_eq!(p.gradient_norm(&[2.0, 100.0]), 4.0);
    }

    #[test]
    fn interpolation_stays_in_envelope() {
        let p = PotentialSpec::two_sided(1.0, 1.5, 2.0, 2.0, Sampler::Interpolate { weight: 0.5 }).unwrap();
        for r in [0.0, 0.3, 1.0, 2.5, 7.0] {
            let (lo, hi) = p.envelope(&[r]);
            let v = p.value(&[r]);
            assert!(lo <= v && v <= hi.max(lo), "r={r}");
        }
        let g = p.gradient_norm(&[3.0]);
        let want = 0.5 * (1.5 * 3f64.sqrt()) + 0.5 * (2.0 * 2.0 * 3.0);
        assert!((g - want).abs() < 1e-5);
    }

    #[test]
    fn validation() {
        assert!(PotentialSpec::power_law(0.0).is_err());
        assert!(PotentialSpec::anisotropic(2.0, 0).is_err());
        assert!(PotentialSpec::two_sided(1.0, 3.0, 1.0, 2.0, Sampler::Interpolate { weight: 0.0 }).is_err());
        assert!(PotentialSpec::two_sided(-1.0, 1.0, 1.0, 2.0, Sampler::Interpolate { weight: 0.0 }).is_err());
    }
}
