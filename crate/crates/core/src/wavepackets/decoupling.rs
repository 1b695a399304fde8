//! Measured constant in the refined `L⁶` decoupling inequality.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use super::Packet;
use crate::error::{invalid, Error, Result};
use crate::extension::rows::ShiftedRows;

type C64 = Complex<f64>;

/// Spacing of `x₂` rows in the weighted tube integrals.
const ROW_STEP: f64 = 4.0;
/// Transverse reach of the tube integrals, in halfwidths, on top of two
/// translate spacings.
const TUBE_REACH: f64 = 5.0;
/// Integrals over the weight stop at `|x| = OUTER·R`.
const OUTER: f64 = 1.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecouplingRecord {
    pub lhs: f64,
    #[serde(rename = "M")]
    pub multiplicity: usize,
    pub rhs: f64,
    pub c_obs: f64,
    pub lattice_points: usize,
}

/// `1` on `B_R`, `(1 + (|x| - R)/R)^{-200}` outside.
pub fn ball_weight(x: [f64; 2], radius: f64) -> f64 {
    let r = x[0].hypot(x[1]);
    if r <= radius {
        1.0
    } else {
        (1.0 + (r - radius) / radius).powi(-200)
    }
}

/// Compares `‖Ef‖_{L⁶(X)}` with `M^{1/3}(Σ_T ‖Ef_T‖⁶_{L⁶(w_{B_R})})^{1/6}`.
///
/// `X` is the union of the `√R`-balls centered at `balls`, sampled on the
/// unit lattice inside `B_R`. Packet norms must agree within a factor 2.
pub fn refined_decoupling_ratio(packets: &[Packet], balls: &[[f64; 2]], radius: f64) -> Result<DecouplingRecord> {
    if !(radius > 0.0) {
        return Err(invalid("radius must be positive"));
    }
    let norms: Vec<f64> = packets.iter().map(Packet::norm).collect();
    let hi = norms.iter().copied().fold(0.0, f64::max);
    let lo = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let zero = DecouplingRecord { lhs: 0.0, multiplicity: 0, rhs: 0.0, c_obs: 0.0, lattice_points: 0 };
    if hi == 0.0 {
        return Ok(zero);
    }
    if hi > 2.0 * lo {
        return Err(Error::UnequalPackets { spread: hi / lo });
    }

    let ball_r = radius.sqrt();
    let rows = lattice_rows(balls, ball_r, radius);
    let lattice_points: usize = rows.values().map(Vec::len).sum();
    let multiplicity = balls
        .iter()
        .map(|&q| packets.iter().filter(|p| p.tube.meets_ball(q, ball_r)).count())
        .max()
        .unwrap_or(0);

    // a lattice row inside B_R spans at most 2R + 1 points
    let chunk = 2 * radius.ceil() as usize + 1;
    let parts: Vec<(Vec<C64>, f64)> = packets
        .par_iter()
        .map(|p| -> Result<(Vec<C64>, f64)> { Ok((lattice_values(p, &rows, chunk)?, weighted_l6(p, radius)?)) })
        .collect::<Result<_>>()?;

    let mut total = vec![C64::zero(); lattice_points];
    let mut rhs6 = 0.0;
    for (vals, l6) in &parts {
        for (t, v) in total.iter_mut().zip(vals) {
            *t += v;
        }
        rhs6 += l6;
    }
    let lhs = total.iter().map(|z| z.norm_sqr().powi(3)).sum::<f64>().powf(1.0 / 6.0);
    let rhs = (multiplicity as f64).cbrt() * rhs6.powf(1.0 / 6.0);
    let c_obs = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(DecouplingRecord { lhs, multiplicity, rhs, c_obs, lattice_points })
}

/// Integer points of the union of balls inside `B_R`, grouped by `x₂` and
/// sorted by `x₁`.
fn lattice_rows(balls: &[[f64; 2]], r: f64, radius: f64) -> BTreeMap<i64, Vec<i64>> {
    let mut rows: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
    for q in balls {
        for x2 in (q[1] - r).ceil() as i64..=(q[1] + r).floor() as i64 {
            let dy = x2 as f64 - q[1];
            let half = (r * r - dy * dy).max(0.0).sqrt();
            let row = rows.entry(x2).or_default();
            for x1 in (q[0] - half).ceil() as i64..=(q[0] + half).floor() as i64 {
                if (x1 as f64).hypot(x2 as f64) <= radius {
                    row.push(x1);
                }
            }
        }
    }
    rows.retain(|_, row| {
        row.sort_unstable();
        row.dedup();
        !row.is_empty()
    });
    rows
}

fn lattice_values(p: &Packet, rows: &BTreeMap<i64, Vec<i64>>, chunk: usize) -> Result<Vec<C64>> {
    let total: usize = rows.values().map(Vec::len).sum();
    let mut out = Vec::with_capacity(total);
    if p.density.is_zero() {
        out.resize(total, C64::zero());
        return Ok(out);
    }
    let plan = ShiftedRows::new(&p.density, p.curve, chunk)?;
    for (&x2, row) in rows {
        let mut k = 0;
        while k < row.len() {
            // every lattice point within one chunk of `start` comes from one row evaluation
            let start = row[k];
            let vals = plan.row(x2 as f64, start as f64)?;
            while k < row.len() && ((row[k] - start) as usize) < chunk {
                out.push(vals[(row[k] - start) as usize]);
                k += 1;
            }
        }
    }
    Ok(out)
}

/// `‖Ef_T‖⁶_{L⁶(w_{B_R})}` over tube-aligned rows.
fn weighted_l6(p: &Packet, radius: f64) -> Result<f64> {
    if p.density.is_zero() {
        return Ok(0.0);
    }
    let reach = (TUBE_REACH * p.tube.halfwidth + 2.0 * p.spacing).ceil();
    let width = 2 * reach as usize + 1;
    let plan = ShiftedRows::new(&p.density, p.curve, width)?;
    let outer = OUTER * radius;
    let rows = (2.0 * outer / ROW_STEP).floor() as i64;
    let mut acc = 0.0;
    for i in 0..=rows {
        let x2 = -outer + i as f64 * ROW_STEP;
        let start = (p.tube.center - x2 * p.tube.slope - reach).round();
        if start > outer || start + ((width - 1) as f64) < -outer {
            continue;
        }
        let vals = plan.row(x2, start)?;
        for (k, z) in vals.iter().enumerate() {
            let x = [start + k as f64, x2];
            if x[0].hypot(x[1]) <= outer {
                acc += ball_weight(x, radius) * z.norm_sqr().powi(3);
            }
        }
    }
    Ok(acc * ROW_STEP)
}
