use std::collections::HashSet;

use serde::Serialize;

use super::Line;
use crate::error::{invalid, precondition, Result};
use crate::fractal::katz_tao_constant;

/// Balls `𝒬` with the tubes `𝒯(Q)` through each.
#[derive(Clone, Debug, PartialEq)]
pub struct DualTubeFamily {
    pub delta: f64,
    pub balls: Vec<[f64; 2]>,
    pub tubes: Vec<Vec<Line>>,
    /// Lower bound `M` on every `#𝒯(Q)`.
    pub multiplicity: usize,
    /// Number of equal direction arcs `σ` in `[0, π)`.
    pub arcs: usize,
    pub eps2: f64,
    /// Bound on the Katz-Tao `(δ, 1)` constant of `𝒬`.
    pub katz_tao_limit: f64,
}

impl DualTubeFamily {
    /// Tubes through each ball at the directions `angles(q)`.
    pub fn through_balls(
        delta: f64,
        balls: Vec<[f64; 2]>,
        multiplicity: usize,
        angles: impl Fn(usize) -> Vec<f64>,
    ) -> Self {
        let tubes = balls
            .iter()
            .enumerate()
            .map(|(q, &c)| angles(q).into_iter().map(|a| Line::through(c, a)).collect())
            .collect();
        Self {
            delta,
            balls,
            tubes,
            multiplicity,
            arcs: 4,
            eps2: 0.1,
            katz_tao_limit: 8.0 * (1.0 / delta).ln(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DualTubeRecord {
    pub distinct_tubes: usize,
    /// `δ^{ε₁/2}·M^{3/2}·δ^{1/2}·#𝒬`.
    pub lower: f64,
    pub ratio: f64,
    pub katz_tao: f64,
    /// Largest share of one ball's tubes in a single arc.
    pub arc_share: f64,
}

/// Counts distinct tubes, bucketed by direction and offset at granularity
/// `δ`, after checking every hypothesis of the count.
pub fn dual_tube_count(family: &DualTubeFamily, eps1: f64) -> Result<DualTubeRecord> {
    let DualTubeFamily { delta, ref balls, ref tubes, multiplicity, arcs, eps2, katz_tao_limit } = *family;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("δ must lie in (0, 1), got {delta}")));
    }
    if balls.len() != tubes.len() {
        return Err(invalid("one tube list per ball"));
    }
    if arcs == 0 {
        return Err(invalid("at least one direction arc"));
    }
    let katz_tao = katz_tao_constant(balls, delta, 1.0)?;
    if katz_tao > katz_tao_limit {
        return Err(precondition(format!("ball family has Katz-Tao constant {katz_tao:.3} > {katz_tao_limit:.3}")));
    }
    let arc_len = std::f64::consts::PI / arcs as f64;
    let mut arc_share = 0.0f64;
    for (q, (c, ts)) in balls.iter().zip(tubes).enumerate() {
        if ts.len() < multiplicity {
            return Err(precondition(format!("ball {q} has {} tubes < M = {multiplicity}", ts.len())));
        }
        if let Some(t) = ts.iter().find(|t| t.distance(*c) > delta) {
            return Err(precondition(format!("ball {q}: tube {t:?} misses its ball")));
        }
        let mut per_arc = vec![0usize; arcs];
        for t in ts {
            per_arc[((t.angle / arc_len) as usize).min(arcs - 1)] += 1;
        }
        let worst = *per_arc.iter().max().unwrap_or(&0);
        if !ts.is_empty() {
            let share = worst as f64 / ts.len() as f64;
            arc_share = arc_share.max(share);
            if share > delta.powf(eps2) {
                return Err(precondition(format!(
                    "ball {q}: {worst} of {} tubes in one arc exceeds δ^ε₂ = {:.3}",
                    ts.len(),
                    delta.powf(eps2)
                )));
            }
        }
    }
    let buckets: HashSet<(i64, i64)> = tubes
        .iter()
        .flatten()
        .map(|t| ((t.angle / delta).floor() as i64, (t.offset / delta).floor() as i64))
        .collect();
    let distinct_tubes = buckets.len();
    let lower = delta.powf(0.5 * eps1) * (multiplicity as f64).powf(1.5) * delta.sqrt() * balls.len() as f64;
    Ok(DualTubeRecord { distinct_tubes, lower, ratio: distinct_tubes as f64 / lower, katz_tao, arc_share })
}
