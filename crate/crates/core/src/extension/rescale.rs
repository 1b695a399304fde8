use std::sync::Arc;

use super::{extension_values, Cap, Curve};
use crate::error::{precondition, Error, Result};
use crate::grid::{FrequencyGrid, SampledDensity, SpatialPointSet};
use crate::scalar::Real;

const ALIGNMENT_TOLERANCE: f64 = 1e-6;

/// `(K⁻¹(x₁ + 2x₂ξ_σ), K⁻²x₂)`.
pub fn parabolic_rescale<T: Real>(cap: &Cap<T>, x: [T; 2]) -> [T; 2] {
    let k = cap.k();
    let two = T::lit(2.0);
    [(x[0] + two * x[1] * cap.center()) / k, x[1] / (k * k)]
}

/// `g(η) = f_σ(ξ_σ + η/K)` on a grid of step `K·h` over `[-1, 1]`.
///
/// The cap edges must fall on cell boundaries of `f`'s grid, so that every
/// node of `f_σ` maps onto a node of `g`'s grid.
pub fn rescaled_density<T: Real>(f: &SampledDensity<T>, cap: &Cap<T>) -> Result<SampledDensity<T>> {
    let k = cap.k();
    let h = f.grid().step();
    let target = FrequencyGrid::new(-T::one(), T::one(), k * h)
        .map_err(|_| precondition("rescaled step K·h must tile [-1, 1]"))?;
    let edge = ((cap.lo() - f.grid().lo()) / h).as_f64();
    if (edge - edge.round()).abs() > ALIGNMENT_TOLERANCE {
        return Err(precondition("cap edges must fall on grid cell boundaries"));
    }
    let step = target.step();
    let mut entries = Vec::new();
    for (_, xi, v) in f.iter() {
        if xi <= cap.lo() || xi > cap.hi() {
            continue;
        }
        let eta = k * (xi - cap.center());
        let pos = ((eta + T::one()) / step - T::lit(0.5)).as_f64();
        let j = pos.round();
        if (pos - j).abs() > ALIGNMENT_TOLERANCE || j < 0.0 || j as usize >= target.len() {
            return Err(precondition("cap nodes do not map onto the rescaled grid"));
        }
        entries.push((j as usize, v));
    }
    SampledDensity::from_sparse(target, entries)
}

/// `max_x | |Ef_σ(x)| − K⁻¹|Eg(𝓛_σ x)| | / ‖f_σ‖₂` for the parabola.
pub fn rescale_identity_residual<T: Real>(
    f: &SampledDensity<T>,
    curve: Curve,
    cap: &Cap<T>,
    pts: &Arc<SpatialPointSet<T>>,
) -> Result<T> {
    if curve != Curve::Parabola {
        return Err(Error::RescaleNeedsParabola);
    }
    let f_cap = f.restricted(|_, xi| xi > cap.lo() && xi <= cap.hi());
    if f_cap.is_zero() {
        return Err(precondition("f vanishes on the cap"));
    }
    let g = rescaled_density(f, cap)?;
    let mapped: Vec<[T; 2]> = pts.points().iter().map(|&x| parabolic_rescale(cap, x)).collect();
    let lhs = extension_values(&f_cap, curve, pts.points())?;
    let rhs = extension_values(&g, curve, &mapped)?;
    let k = cap.k();
    let norm = f_cap.l2_norm();
    let worst = lhs
        .iter()
        .zip(&rhs)
        .fold(T::zero(), |m, (a, b)| m.max((a.norm() - b.norm() / k).abs()));
    Ok(worst / norm)
}

#[cfg(test)]
mod tests {
    use num_complex::Complex;

    use super::*;

    #[test]
    fn rescale_examples() {
        let id = Cap::new(0.0f64, 1.0).unwrap();
        assert_eq!(parabolic_rescale(&id, [3.0, 7.0]), [3.0, 7.0]);
        let c = Cap::new(0.0f64, 2.0).unwrap();
        assert_eq!(parabolic_rescale(&c, [4.0, 8.0]), [2.0, 2.0]);
        let c = Cap::new(0.5f64, 2.0).unwrap();
        assert_eq!(parabolic_rescale(&c, [0.0, 4.0]), [2.0, 1.0]);
    }

    #[test]
    fn circle_is_rejected() {
        let f = SampledDensity::indicator(FrequencyGrid::<f64>::unit(64), |_| true);
        let pts = Arc::new(SpatialPointSet::new(1.0, vec![[0.0, 0.0]], 1.0).unwrap());
        let cap = Cap::new(0.0, 1.0).unwrap();
        assert!(matches!(
            rescale_identity_residual(&f, Curve::CircleGraph, &cap, &pts),
            Err(Error::RescaleNeedsParabola)
        ));
    }

    #[test]
    fn unit_scale_is_identity() {
        let g = FrequencyGrid::<f64>::unit(4096);
        let f = SampledDensity::from_fn(g, |xi| Complex::new(1.0 + xi, (3.0 * xi).sin())).unwrap();
        let pts = Arc::new(SpatialPointSet::new(20.0, vec![[3.0, 7.0], [-12.0, 5.0], [0.0, 0.0]], 1.0).unwrap());
        let cap = Cap::new(0.0, 1.0).unwrap();
        assert!(rescale_identity_residual(&f, Curve::Parabola, &cap, &pts).unwrap() <= 1e-12);
    }

    #[test]
    fn misaligned_cap_is_rejected() {
        let f = SampledDensity::indicator(FrequencyGrid::<f64>::unit(30), |_| true);
        let cap = Cap::new(0.01, 8.0).unwrap();
        assert!(rescaled_density(&f, &cap).is_err());
    }
}
