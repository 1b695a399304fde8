//! Shaded lines in the unit disk and the statistics of the two-ends
//! Furstenberg bound.
//!
//! Areas of shadings are `(ball count)·πδ²` in [`density`]; unions in
//! [`furstenberg_ratio`] are measured by pixel counting at resolution `δ/2`,
//! with each line's own shading rasterized the same way so that
//! `union ≤ Σ_ℓ |Y(ℓ)|` holds exactly.

mod dual;
mod generate;
mod raster;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, precondition, Result};

pub use dual::{dual_tube_count, DualTubeFamily, DualTubeRecord};
pub use generate::{bush, random_two_ends, single_line, train_tracks};
pub use raster::Raster;

const SLACK: f64 = 1e-9;

/// The line `{b·n + t·d}` with `d = (cos θ, sin θ)`, `n = (-sin θ, cos θ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub angle: f64,
    pub offset: f64,
}

impl Line {
    /// Normalizes `angle` into `[0, π)`.
    pub fn new(angle: f64, offset: f64) -> Self {
        let a = angle.rem_euclid(2.0 * PI);
        if a >= PI {
            Self { angle: a - PI, offset: -offset }
        } else {
            Self { angle: a, offset }
        }
    }

    /// Line through `p` in direction `angle`.
    pub fn through(p: [f64; 2], angle: f64) -> Self {
        Self::new(angle, -angle.sin() * p[0] + angle.cos() * p[1])
    }

    pub fn direction(&self) -> [f64; 2] {
        [self.angle.cos(), self.angle.sin()]
    }

    pub fn normal(&self) -> [f64; 2] {
        [-self.angle.sin(), self.angle.cos()]
    }

    pub fn point(&self, t: f64) -> [f64; 2] {
        let (d, n) = (self.direction(), self.normal());
        [self.offset * n[0] + t * d[0], self.offset * n[1] + t * d[1]]
    }

    /// Coordinate along the line of the projection of `p`.
    pub fn along(&self, p: [f64; 2]) -> f64 {
        let d = self.direction();
        p[0] * d[0] + p[1] * d[1]
    }

    pub fn distance(&self, p: [f64; 2]) -> f64 {
        let n = self.normal();
        (p[0] * n[0] + p[1] * n[1] - self.offset).abs()
    }

    /// Half-length of the chord inside the unit disk; 0 if it misses.
    pub fn half_chord(&self) -> f64 {
        (1.0 - self.offset * self.offset).max(0.0).sqrt()
    }

    pub fn rotated(&self, phi: f64) -> Self {
        Self::new(self.angle + phi, self.offset)
    }
}

/// Angular distance between directions modulo `π`.
pub fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadedLine {
    pub line: Line,
    /// Centers of the `δ`-balls of `Y(ℓ)`.
    pub balls: Vec<[f64; 2]>,
}

/// Two-ends parameters `(ε₁, ε₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoEnds {
    pub eps1: f64,
    pub eps2: f64,
}

impl Default for TwoEnds {
    fn default() -> Self {
        Self { eps1: 0.5, eps2: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineShading {
    delta: f64,
    lines: Vec<ShadedLine>,
    two_ends: TwoEnds,
}

impl LineShading {
    /// Checks that every ball sits within `δ` of its line inside the unit
    /// disk and that directions are pairwise `δ`-separated.
    pub fn new(delta: f64, lines: Vec<ShadedLine>, two_ends: TwoEnds) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid(format!("δ must lie in (0, 1), got {delta}")));
        }
        if !(two_ends.eps1 > 0.0 && two_ends.eps1 < 1.0) {
            return Err(invalid(format!("ε₁ must lie in (0, 1), got {}", two_ends.eps1)));
        }
        for (k, s) in lines.iter().enumerate() {
            for c in &s.balls {
                if s.line.distance(*c) > delta * (1.0 + SLACK) {
                    return Err(precondition(format!("line {k}: ball {c:?} is farther than δ from its line")));
                }
                if c[0].hypot(c[1]) > 1.0 + SLACK {
                    return Err(precondition(format!("line {k}: ball {c:?} lies outside the unit disk")));
                }
            }
        }
        let mut angles: Vec<(f64, usize)> = lines.iter().enumerate().map(|(k, s)| (s.line.angle, k)).collect();
        angles.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = angles.len();
        // neighbors in sorted order, including the wrap from π back to 0
        for i in 0..if n > 1 { n } else { 0 } {
            let (a, b) = (angles[i], angles[(i + 1) % n]);
            if angle_gap(a.0, b.0) < delta * (1.0 - SLACK) {
                return Err(precondition(format!(
                    "lines {} and {} have directions closer than δ",
                    a.1.min(b.1),
                    a.1.max(b.1)
                )));
            }
        }
        Ok(Self { delta, lines, two_ends })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn lines(&self) -> &[ShadedLine] {
        &self.lines
    }

    pub fn two_ends(&self) -> TwoEnds {
        self.two_ends
    }

    pub fn ball_count(&self) -> usize {
        self.lines.iter().map(|s| s.balls.len()).sum()
    }

    /// Rotates the whole configuration about the origin.
    pub fn rotated(&self, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        let rot = |p: [f64; 2]| [c * p[0] - s * p[1], s * p[0] + c * p[1]];
        let lines = self
            .lines
            .iter()
            .map(|l| ShadedLine { line: l.line.rotated(phi), balls: l.balls.iter().map(|&p| rot(p)).collect() })
            .collect();
        Self { delta: self.delta, lines, two_ends: self.two_ends }
    }

    pub fn raster(&self) -> Raster {
        let mut r = Raster::unit_disk(self.delta);
        for s in &self.lines {
            for &c in &s.balls {
                r.stamp(c);
            }
        }
        r
    }
}

/// `λ = min_ℓ (#Y(ℓ)·πδ²) / (2δ·chord(ℓ))`.
pub fn density(ly: &LineShading) -> Result<f64> {
    if ly.lines.is_empty() {
        return Err(crate::Error::EmptyDomain);
    }
    let d = ly.delta;
    Ok(ly
        .lines
        .iter()
        .map(|s| {
            let tube = 2.0 * d * 2.0 * s.line.half_chord();
            if tube > 0.0 {
                s.balls.len() as f64 * PI * d * d / tube
            } else {
                0.0
            }
        })
        .fold(f64::INFINITY, f64::min))
}

/// `max_{ℓ, J} |Y(ℓ) ∩ J| / |Y(ℓ)|` over `δ × δ^{ε₁}` sub-tubes `J` slid at
/// `δ/2` steps along each chord. Unshaded lines are skipped.
pub fn two_ends_statistic(ly: &LineShading, eps1: f64) -> Result<f64> {
    if !(eps1 > 0.0 && eps1 < 1.0) {
        return Err(invalid(format!("ε₁ must lie in (0, 1), got {eps1}")));
    }
    let d = ly.delta;
    let len = d.powf(eps1);
    let step = 0.5 * d;
    Ok(ly
        .lines
        .par_iter()
        .filter(|s| !s.balls.is_empty())
        .map(|s| {
            let mut ts: Vec<f64> = s.balls.iter().map(|&p| s.line.along(p)).collect();
            ts.sort_by(f64::total_cmp);
            let (lo, hi) = (ts[0], ts[ts.len() - 1]);
            let steps = ((hi - lo + len) / step).ceil() as usize + 1;
            let (mut a, mut b, mut best) = (0, 0, 0);
            for k in 0..=steps {
                let start = lo - len + k as f64 * step;
                while a < ts.len() && ts[a] < start {
                    a += 1;
                }
                while b < ts.len() && ts[b] < start + len {
                    b += 1;
                }
                best = best.max(b.saturating_sub(a));
            }
            best as f64 / ts.len() as f64
        })
        .reduce(|| 0.0, f64::max))
}

/// `(ε₁, ε₂)`-two-ends with constant `c`.
pub fn is_two_ends(ly: &LineShading, c: f64) -> Result<bool> {
    let TwoEnds { eps1, eps2 } = ly.two_ends;
    Ok(two_ends_statistic(ly, eps1)? <= c * ly.delta.powf(eps2))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FurstenbergRecord {
    /// `|∪ Y(ℓ)|` by pixel counting.
    pub union: f64,
    /// `Σ_ℓ |Y(ℓ)|`, each shading rasterized on its own.
    pub total: f64,
    pub density: f64,
    /// `δ^{ε₁/2}·min(λ, 1)^{1/2}·Σ_ℓ |Y(ℓ)|`.
    pub lower: f64,
    pub ratio: f64,
}

pub fn furstenberg_ratio(ly: &LineShading, eps1: f64) -> Result<FurstenbergRecord> {
    if !(eps1 > 0.0 && eps1 < 1.0) {
        return Err(invalid(format!("ε₁ must lie in (0, 1), got {eps1}")));
    }
    let lambda = density(ly)?;
    let template = Raster::unit_disk(ly.delta);
    let pixel_area = template.pixel_area();
    let per_line: usize = ly
        .lines
        .par_iter()
        .map(|s| {
            let mut cells: Vec<usize> = s.balls.iter().flat_map(|&c| template.cells_of(c)).collect();
            cells.sort_unstable();
            cells.dedup();
            cells.len()
        })
        .sum();
    let union = ly.raster().filled() as f64 * pixel_area;
    let total = per_line as f64 * pixel_area;
    let lower = ly.delta.powf(0.5 * eps1) * lambda.min(1.0).sqrt() * total;
    let ratio = if lower > 0.0 { union / lower } else { f64::INFINITY };
    Ok(FurstenbergRecord { union, total, density: lambda, lower, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_normalization_keeps_points() {
        let l = Line::new(1.3 * PI, 0.2);
        let m = Line { angle: 1.3 * PI, offset: 0.2 };
        assert!(l.angle < PI);
        let p = m.point(0.0);
        assert!(l.distance(p) < 1e-12);
    }

    #[test]
    fn through_contains_the_point() {
        let l = Line::through([0.3, -0.2], 0.7);
        assert!(l.distance([0.3, -0.2]) < 1e-12);
    }

    #[test]
    fn close_directions_are_rejected() {
        let d = 1.0 / 64.0;
        let lines = vec![
            ShadedLine { line: Line::new(0.1, 0.0), balls: vec![] },
            ShadedLine { line: Line::new(0.1 + 0.5 * d, 0.2), balls: vec![] },
        ];
        assert!(LineShading::new(d, lines, TwoEnds::default()).is_err());
    }

    #[test]
    fn wraparound_directions_are_checked() {
        let d = 1.0 / 64.0;
        let lines = vec![
            ShadedLine { line: Line::new(0.001, 0.0), balls: vec![] },
            ShadedLine { line: Line::new(1.0, 0.0), balls: vec![] },
            ShadedLine { line: Line::new(PI - 0.001, 0.0), balls: vec![] },
        ];
        assert!(LineShading::new(d, lines, TwoEnds::default()).is_err());
    }

    #[test]
    fn stray_ball_is_rejected() {
        let d = 1.0 / 32.0;
        let lines = vec![ShadedLine { line: Line::new(0.0, 0.0), balls: vec![[0.0, 2.0 * d]] }];
        assert!(LineShading::new(d, lines, TwoEnds::default()).is_err());
    }
}
