use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{exponent_fit, ExponentFit};
use crate::error::{invalid, precondition, Result};
use crate::fractal::{frostman_knapp, frostman_segment, FrostmanMeasure};

/// Default angular count `⌈2π·10R⌉`, giving steps of at most `(10R)⁻¹`.
pub fn default_angles(radius: f64) -> usize {
    (2.0 * PI * 10.0 * radius).ceil() as usize
}

/// `|μ̂(Rξ)|` at `angles` equally spaced points of the unit circle.
pub fn circle_moduli(mu: &FrostmanMeasure, radius: f64, angles: usize) -> Result<Vec<f64>> {
    if angles == 0 || 2.0 * PI / angles as f64 > 1.0 / (10.0 * radius) * (1.0 + 1e-12) {
        return Err(precondition(format!("{angles} angles are too coarse for R = {radius}")));
    }
    Ok((0..angles)
        .into_par_iter()
        .map(|k| {
            let (s, c) = (2.0 * PI * k as f64 / angles as f64).sin_cos();
            mu.fourier([radius * c, radius * s]).norm()
        })
        .collect())
}

/// `(Σ_k m_k^p · 2π/n)^{1/p}` for moduli on `n` equally spaced angles.
pub fn mean_of(moduli: &[f64], p: f64) -> f64 {
    let w = 2.0 * PI / moduli.len() as f64;
    (moduli.iter().map(|m| m.powf(p)).sum::<f64>() * w).powf(1.0 / p)
}

/// `(∫_{S¹} |μ̂(Rξ)|^p dσ(ξ))^{1/p}` with arc-length `σ`.
pub fn circular_means(mu: &FrostmanMeasure, radius: f64, p: f64) -> Result<f64> {
    circular_means_with(mu, radius, p, default_angles(radius))
}

pub fn circular_means_with(mu: &FrostmanMeasure, radius: f64, p: f64, angles: usize) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(crate::Error::InvalidExponent(p));
    }
    Ok(mean_of(&circle_moduli(mu, radius, angles)?, p))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureFamily {
    Knapp,
    /// Uniform on `[0, 1] × {0}` with `40R` cells.
    Segment,
}

impl MeasureFamily {
    pub fn name(self) -> &'static str {
        match self {
            Self::Knapp => "knapp",
            Self::Segment => "segment",
        }
    }

    pub fn build(self, radius: f64) -> Result<FrostmanMeasure> {
        match self {
            Self::Knapp => frostman_knapp(radius),
            Self::Segment => frostman_segment((40.0 * radius).ceil() as usize),
        }
    }
}

/// Fitted decay exponent of the circular means of a measure family.
pub fn sigma_p_fit(family: MeasureFamily, p: f64, radii: &[f64]) -> Result<ExponentFit> {
    check_sweep(p, radii)?;
    let pairs = radii
        .iter()
        .map(|&r| Ok((r, circular_means(&family.build(r)?, r, p)?)))
        .collect::<Result<Vec<_>>>()?;
    exponent_fit(&pairs)
}

pub(crate) fn check_sweep(p: f64, radii: &[f64]) -> Result<()> {
    if !(1.8 - 1e-12..=2.0 + 1e-12).contains(&p) {
        return Err(invalid(format!("p must lie in [9/5, 2], got {p}")));
    }
    let lo = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = radii.iter().copied().fold(0.0, f64::max);
    if radii.len() < 4 || hi < 4.0 * lo {
        return Err(invalid("need at least 4 radii spanning two octaves"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    #[test]
    fn point_mass_mean_is_circumference_root() {
        let mu = FrostmanMeasure::atoms(vec![[0.0, 0.0]], vec![Complex::new(1.0, 0.0)], 1e-3).unwrap();
        for p in [1.8, 2.0] {
            let m = circular_means(&mu, 16.0, p).unwrap();
            assert!((m - (2.0 * PI).powf(1.0 / p)).abs() < 1e-12);
        }
    }

    #[test]
    fn coarse_quadrature_is_rejected() {
        let mu = frostman_segment(64).unwrap();
        assert!(circular_means_with(&mu, 64.0, 2.0, 100).is_err());
    }

    #[test]
    fn sweep_needs_two_octaves() {
        assert!(check_sweep(2.0, &[64.0, 96.0, 128.0, 200.0]).is_err());
        assert!(check_sweep(2.5, &[64.0, 128.0, 256.0, 512.0]).is_err());
        assert!(check_sweep(1.8, &[64.0, 128.0, 256.0, 512.0]).is_ok());
    }
}
