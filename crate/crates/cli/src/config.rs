//! JSON experiment configs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use splab_core::control::BoundParams;
use splab_core::model::{GrowthParams, PotentialSpec, Sampler};
use splab_core::sensors::SensorSpec;
use splab_core::specineq::GridPolicy;

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    PowerLaw {
        tau: f64,
    },
    Anisotropic {
        tau: f64,
        #[serde(default = "one")]
        confined_axes: usize,
    },
    /// Sampled as `c1 |x|^tau1 + w (c2 |x|^tau2 - c1 |x|^tau1)_+`.
    TwoSided {
        c1: f64,
        tau1: f64,
        c2: f64,
        tau2: f64,
        #[serde(default)]
        weight: f64,
    },
}

fn one() -> usize {
    1
}

/// Either an explicit list or `start, start + step, ..., <= stop`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaList {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl LambdaList {
    pub fn values(&self) -> Vec<f64> {
        match self {
            LambdaList::List(v) => v.clone(),
            LambdaList::Range { start, stop, step } => {
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..count).map(|i| start + *step * i as f64).collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub lambdas: LambdaList,
    /// Observation horizons for `observability`.
    pub times: Vec<f64>,
    /// Extension heights for `ghost-check`.
    pub rhos: Vec<f64>,
    pub t_points: usize,
    /// Random functions per threshold in `decay`.
    pub trials: usize,
    /// Random initial states per horizon in `observability`.
    pub controls: usize,
    /// Spectral truncation for `observability`; defaults to the largest lambda.
    pub truncation: Option<f64>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            lambdas: LambdaList::List(vec![5.0, 10.0, 20.0, 40.0]),
            times: vec![0.25, 0.5, 1.0, 2.0],
            rhos: vec![0.5, 1.0, 2.0],
            t_points: 129,
            trials: 16,
            controls: 50,
            truncation: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub potential: PotentialConfig,
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Explicit `(nu, M_nu)`; chosen automatically when absent.
    #[serde(default)]
    pub growth: Option<GrowthParams>,
    #[serde(default)]
    pub sensor: Option<SensorSpec>,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub numerics: GridPolicy,
    #[serde(default)]
    pub bound: BoundParams,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

fn default_dim() -> usize {
    1
}

fn field(name: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{name}: {reason}"))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.numerics.dim = cfg.dim;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every range check, before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        if !(1..=2).contains(&self.dim) {
            return Err(field("dim", format!("must be 1 or 2, got {}", self.dim)));
        }
        self.potential_spec()?;
        if let Some(s) = &self.sensor {
            s.validate().map_err(|e| field("sensor", e))?;
        }
        let lambdas = self.scan.lambdas.values();
        if lambdas.is_empty() {
            return Err(field("scan.lambdas", "empty"));
        }
        if lambdas.iter().any(|l| !(*l >= 1.0 && l.is_finite())) {
            return Err(field("scan.lambdas", "every lambda must be finite and >= 1"));
        }
        if lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(field("scan.lambdas", "must be strictly increasing"));
        }
        if let LambdaList::Range { step, .. } = self.scan.lambdas {
            if !(step > 0.0) {
                return Err(field("scan.lambdas.step", "must be positive"));
            }
        }
        if self.scan.times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(field("scan.times", "every horizon must be positive"));
        }
        if self.scan.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(field("scan.times", "must be strictly increasing"));
        }
        if self.scan.rhos.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(field("scan.rhos", "every rho must be positive"));
        }
        if self.scan.t_points < 64 {
            return Err(field("scan.t_points", "need at least 64"));
        }
        if self.scan.trials == 0 {
            return Err(field("scan.trials", "must be positive"));
        }
        if let Some(t) = self.scan.truncation {
            if !(t >= 1.0) {
                return Err(field("scan.truncation", "must be >= 1"));
            }
        }
        let n = &self.numerics;
        if !(n.margin >= 1.0) {
            return Err(field("numerics.margin", "must be >= 1"));
        }
        if !(n.feature_fraction > 0.0 && n.feature_fraction <= 1.0) {
            return Err(field("numerics.feature_fraction", "must lie in (0, 1]"));
        }
        if !(n.points_per_wavelength > 0.0) {
            return Err(field("numerics.points_per_wavelength", "must be positive"));
        }
        if n.max_points_1d < 3 || n.max_points_2d < 3 {
            return Err(field("numerics.max_points", "caps must be at least 3"));
        }
        if matches!(n.spacing, Some(h) if !(h > 0.0)) {
            return Err(field("numerics.spacing", "must be positive"));
        }
        if matches!(n.half_width, Some(l) if !(l > 0.0)) {
            return Err(field("numerics.half_width", "must be positive"));
        }
        if matches!(n.n_axis, Some(k) if k < 3) {
            return Err(field("numerics.n_axis", "must be at least 3"));
        }
        if !(n.eigen.buffer >= 0.0) {
            return Err(field("numerics.eigen.buffer", "must be nonnegative"));
        }
        if !(self.bound.k >= 1.0) {
            return Err(field("bound.k", "must be >= 1"));
        }
        if !(self.bound.c > 0.0 && self.bound.d > 0.0) {
            return Err(field("bound", "c and d must be positive"));
        }
        Ok(())
    }

    pub fn potential_spec(&self) -> Result<PotentialSpec, CliError> {
        let p = match self.potential {
            PotentialConfig::PowerLaw { tau } => PotentialSpec::power_law(tau),
            PotentialConfig::Anisotropic { tau, confined_axes } => {
                if confined_axes >= self.dim {
                    return Err(field("potential.confined_axes", "must be smaller than dim"));
                }
                PotentialSpec::anisotropic(tau, confined_axes)
            }
            PotentialConfig::TwoSided {
                c1,
                tau1,
                c2,
                tau2,
                weight,
            } => {
                if !(0.0..=1.0).contains(&weight) {
                    return Err(field("potential.weight", "must lie in [0, 1]"));
                }
                PotentialSpec::two_sided(c1, tau1, c2, tau2, Sampler::Interpolate { weight })
            }
        }
        .map_err(|e| field("potential", e))?;
        match self.growth {
            Some(g) => p.with_growth(g).map_err(|e| field("growth", e)),
            None => Ok(p),
        }
    }

    pub fn sensor(&self) -> Result<&SensorSpec, CliError> {
        self.sensor
            .as_ref()
            .ok_or_else(|| field("sensor", "required by this subcommand"))
    }

    /// Hex SHA-256 of the canonical JSON form, output block excluded.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.output = OutputConfig::default();
        let json = serde_json::to_string(&canon).expect("config serialises");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HARMONIC: &str = r#"{"potential": {"kind": "power_law", "tau": 2.0}}"#;

    #[test]
    fn minimal_config_defaults() {
        let c = ExperimentConfig::parse(HARMONIC).unwrap();
        assert_eq!(c.dim, 1);
        assert_eq!(c.scan.lambdas.values(), vec![5.0, 10.0, 20.0, 40.0]);
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn range_expands_inclusive() {
        let l = LambdaList::Range {
            start: 9.0,
            stop: 81.0,
            step: 4.0,
        }
        .values();
        assert_eq!(l.len(), 19);
        assert_eq!(l[18], 81.0);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = r#"{"potential": {"kind": "power_law", "tau": 2.0},
            "sensor": {"kind": "equidistributed_decay", "delta": 0.7, "alpha": 0.0,
                       "placement": "center", "decay_axes": "all"}}"#;
        let msg = ExperimentConfig::parse(bad).unwrap_err().to_string();
        assert!(
            msg.contains("sensor") && msg.contains("delta must lie in (0, 1/2)"),
            "{msg}"
        );
        let typo = r#"{"potential": {"kind": "power_law", "tau": 2.0}, "numerics": {"margn": 2}}"#;
        assert!(ExperimentConfig::parse(typo).unwrap_err().to_string().contains("margn"));
        let order = r#"{"potential": {"kind": "power_law", "tau": 2.0}, "scan": {"lambdas": [4, 2]}}"#;
        assert!(ExperimentConfig::parse(order)
            .unwrap_err()
            .to_string()
            .contains("scan.lambdas"));
    }

    #[test]
    fn output_dir_does_not_change_hash() {
        let a = ExperimentConfig::parse(HARMONIC).unwrap();
        let mut b = a.clone();
        b.output.dir = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        b.seed = 3;
        assert_ne!(a.hash(), b.hash());
    }
}
