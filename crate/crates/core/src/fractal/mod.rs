//! Katz-Tao statistics, random refinement, weight generators and Frostman
//! measures.
//!
//! Ball counts use open balls `|y - x| < r` centered at the family's own
//! points, over dyadic radii `δ, 2δ, 4δ, …` below 1 together with `r = 1`.
//! Restricting centers to the family approximates the supremum over all of
//! `ℝ²` within a factor `2^{s+1}`.

mod frostman;
mod gauss;
mod generate;

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::WeightSet;

pub use frostman::{check_frostman, frostman_knapp, frostman_segment, FrostmanMeasure};
pub use gauss::GaussLattice;
pub use generate::{generate_weight, WeightKind};

/// Retry budget of [`random_refine`].
pub const REFINE_ATTEMPTS: usize = 20;
/// `C₀` in the acceptance test `C(X') ≤ C₀·ln(1/δ)`.
pub const REFINE_C0: f64 = 8.0;

const OPEN_BALL: f64 = 1.0 - 1e-9;

/// Radii `δ·2^k < 1` followed by 1.
pub fn dyadic_radii(delta: f64) -> Vec<f64> {
    let mut radii = Vec::new();
    let mut r = delta;
    while r < 1.0 * OPEN_BALL {
        radii.push(r);
        r *= 2.0;
    }
    radii.push(1.0);
    radii
}

/// Largest open-ball count `#{y : |y - x| < r}` over centers `x` in `pts`.
pub fn max_ball_count(pts: &[[f64; 2]], r: f64) -> usize {
    if pts.is_empty() {
        return 0;
    }
    let reach = r * OPEN_BALL;
    let cell_of = |p: &[f64; 2]| ((p[0] / r).floor() as i64, (p[1] / r).floor() as i64);
    let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in pts.iter().enumerate() {
        cells.entry(cell_of(p)).or_default().push(i);
    }
    pts.par_iter()
        .map(|p| {
            let (cx, cy) = cell_of(p);
            let mut count = 0;
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(members) = cells.get(&(cx + dx, cy + dy)) {
                        count += members
                            .iter()
                            .filter(|&&j| (pts[j][0] - p[0]).hypot(pts[j][1] - p[1]) < reach)
                            .count();
                    }
                }
            }
            count
        })
        .max()
        .unwrap_or(0)
}

/// `max_{x ∈ E, r} #(E ∩ B(x, r)) / (r/δ)^s`.
pub fn katz_tao_constant(pts: &[[f64; 2]], delta: f64, s: f64) -> Result<f64> {
    if pts.is_empty() {
        return Err(Error::EmptyDomain);
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("δ must lie in (0, 1), got {delta}")));
    }
    if !(s > 0.0 && s <= 2.0) {
        return Err(invalid(format!("s must lie in (0, 2], got {s}")));
    }
    let mut best = 0.0f64;
    for r in dyadic_radii(delta) {
        let scale = (r / delta).powf(s);
        // no ball holds more than every point
        if pts.len() as f64 / scale <= best {
            continue;
        }
        best = best.max(max_ball_count(pts, r) as f64 / scale);
    }
    Ok(best)
}

/// `γ_X` with `|X ∩ B|` measured as `(ball count)·πδ²`; equals `π` times
/// the `s = 1` Katz-Tao constant.
pub fn gamma_constant(pts: &[[f64; 2]], delta: f64) -> Result<f64> {
    Ok(std::f64::consts::PI * katz_tao_constant(pts, delta, 1.0)?)
}

/// Centers of a weight set dilated by `R⁻¹`, at scale `δ = R⁻¹`.
pub fn dilate(weight: &WeightSet) -> (Vec<[f64; 2]>, f64) {
    let r = weight.radius();
    (weight.centers().iter().map(|c| [c[0] / r, c[1] / r]).collect(), 1.0 / r)
}

/// Katz-Tao `(R⁻¹, 1)` constant of the `R⁻¹`-dilate of a weight set.
pub fn weight_katz_tao(weight: &WeightSet) -> Result<f64> {
    let (pts, delta) = dilate(weight);
    katz_tao_constant(&pts, delta, 1.0)
}

/// Attaches the Katz-Tao constant and `γ` of the dilate.
pub fn with_statistics(weight: WeightSet) -> Result<WeightSet> {
    let c = weight_katz_tao(&weight)?;
    Ok(weight.with_stats(c, std::f64::consts::PI * c))
}

#[derive(Clone, Debug, Serialize)]
pub struct Refinement {
    pub points: Vec<[f64; 2]>,
    pub gamma: f64,
    pub keep_probability: f64,
    pub attempts: usize,
    pub katz_tao: f64,
    /// `|X'| / (γ̃⁻¹|X|)` with `γ̃ = γ/π`.
    pub mass_ratio: f64,
}

/// Keeps each ball with probability `π/γ_X` until the survivor family is a
/// Katz-Tao `(δ, 1)`-set with constant `≤ C₀·ln(1/δ)` and mass within a
/// factor 4 of `γ̃⁻¹|X|`.
pub fn random_refine(pts: &[[f64; 2]], delta: f64, seed: u64) -> Result<Refinement> {
    let gamma = gamma_constant(pts, delta)?;
    let keep = (std::f64::consts::PI / gamma).min(1.0);
    let expected = keep * pts.len() as f64;
    let limit = REFINE_C0 * (1.0 / delta).ln();
    let mut last = String::from("no attempt");
    for attempt in 0..REFINE_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let kept: Vec<[f64; 2]> = pts.iter().copied().filter(|_| rng.gen_bool(keep)).collect();
        if kept.is_empty() {
            last = "empty refinement".into();
            continue;
        }
        let katz_tao = katz_tao_constant(&kept, delta, 1.0)?;
        let mass_ratio = kept.len() as f64 / expected;
        if katz_tao <= limit && (0.25..=4.0).contains(&mass_ratio) {
            return Ok(Refinement {
                points: kept,
                gamma,
                keep_probability: keep,
                attempts: attempt + 1,
                katz_tao,
                mass_ratio,
            });
        }
        last = format!("constant {katz_tao:.3} (limit {limit:.3}), mass ratio {mass_ratio:.3}");
    }
    Err(Error::RefinementFailed { attempts: REFINE_ATTEMPTS, diagnostics: last })
}
