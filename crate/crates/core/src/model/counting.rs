use super::grid::Grid;
use super::potential::PotentialSpec;
use crate::error::{Error, Result};

/// Quadrature of `∫ max(λ + 1 - V, 0)^{d/2 + 1} dx` over the grid box,
/// absolute constant set to 1.
pub fn counting_bound(lambda: f64, p: &PotentialSpec, grid: &Grid) -> Result<f64> {
    if !(lambda >= 1.0) {
        return Err(Error::invalid(format!(
            "counting bound needs lambda >= 1, got {lambda}"
        )));
    }
    let d = grid.dim();
    let expo = d as f64 / 2.0 + 1.0;
    let sum: f64 = (0..grid.len())
        .map(|i| {
            let x = grid.coords(i);
            (lambda + 1.0 - p.value(&x[..d])).max(0.0).powf(expo)
        })
        .sum();
    Ok(grid.weight() * sum)
}

/// Box half-width `margin · max(1, ((λ + 2)/c1)^{1/τ1}) + 2`.
pub fn localization_halfwidth(lambda: f64, p: &PotentialSpec, margin: f64) -> Result<f64> {
    if !(lambda >= 1.0) {
        return Err(Error::invalid(format!("lambda must be >= 1, got {lambda}")));
    }
    if !(margin >= 1.0) {
        return Err(Error::invalid(format!("margin must be >= 1, got {margin}")));
    }
    let r = ((lambda + 2.0) / p.c1()).powf(1.0 / p.tau1()).max(1.0);
    Ok(margin * r + 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::potential::Sampler;

    #[test]
    fn halfwidth_examples() {
        let p = PotentialSpec::power_law(2.0).unwrap();
        assert!((localization_halfwidth(1.0, &p, 2.0).unwrap() - (2.0 * 3f64.sqrt() + 2.0)).abs() < 1e-14);
        assert!((localization_halfwidth(1.0, &p, 1.0).unwrap() - (3f64.sqrt() + 2.0)).abs() < 1e-14);
        let stiff = PotentialSpec::two_sided(1e12, 2.0, 1e12, 2.0, Sampler::Interpolate { weight: 0.0 }).unwrap();
        assert_eq!(localization_halfwidth(1.0, &stiff, 3.0).unwrap(), 5.0);
        assert!(localization_halfwidth(0.5, &p, 2.0).is_err());
    }

    #[test]
    fn bound_vanishes_and_is_monotone_in_c1() {
        let g = Grid::new(1, 10.0, 400).unwrap();
        let lift = PotentialSpec::two_sided(
            1.0,
            1.0,
            1.0,
            1.0,
            Sampler::Custom {
                label: "lifted".into(),
                f: std::sync::Arc::new(|x: &[f64]| x[0].abs()),
            },
        )
        .unwrap();
        assert!(counting_bound(1.0, &lift, &g).unwrap() > 0.0);
        let soft = PotentialSpec::two_sided(1.0, 2.0, 4.0, 2.0, Sampler::Interpolate { weight: 0.0 }).unwrap();
        let hard = PotentialSpec::two_sided(2.0, 2.0, 4.0, 2.0, Sampler::Interpolate { weight: 0.0 }).unwrap();
        assert!(counting_bound(9.0, &hard, &g).unwrap() < counting_bound(9.0, &soft, &g).unwrap());
    }

    #[test]
    fn zero_when_potential_dominates() {
        let g = Grid::new(1, 3.0, 10).unwrap();
        let p = PotentialSpec::two_sided(
            1.0,
            1.0,
            1.0,
            1.0,
            Sampler::Custom {
                label: "high".into(),
                f: std::sync::Arc::new(|x: &[f64]| 100.0 + x[0].abs()),
            },
        )
        .unwrap();
        assert_eq!(counting_bound(5.0, &p, &g).unwrap(), 0.0);
    }
}
