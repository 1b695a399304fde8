use std::f64::consts::PI;

use serde::Serialize;

use super::fit::{exponent_fit, ExponentFit};
use crate::broad::{CapDecomposition, CapFields};
use crate::error::{invalid, Result};
use crate::extension::Curve;
use crate::fractal::GaussLattice;

/// Cap scale of the sweep: three caps, so `Br₂` ignores one dominant cap.
pub const GAUSS_K: f64 = 1.5;
/// `c` in `|Ef(x)| ≥ c·R^{-7/12}`: half the median of `|Ef|·R^{7/12}` at
/// `q₀ = 3`, frozen.
pub const GAUSS_POINTWISE_C: f64 = 0.00626;
/// Largest tolerated relative gap between quadrature and the exponential sum.
pub const ORACLE_TOLERANCE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussRow {
    pub q0: u32,
    pub radius: f64,
    pub centers: usize,
    pub area: f64,
    pub f_l2: f64,
    pub broad_l2: f64,
    pub ratio: f64,
    pub median_field: f64,
    /// Share of centers with `|Ef| ≥ c·R^{-7/12}`.
    pub pointwise_share: f64,
    pub oracle_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussSweep {
    pub a: usize,
    pub k: f64,
    pub rows: Vec<GaussRow>,
    /// `‖Br_A Ef‖_{L²(X)}/‖f‖₂` against `|X|`.
    pub fit: ExponentFit,
    /// Median `|Ef|` on `X` against `R`.
    pub pointwise_fit: ExponentFit,
    pub worst_oracle_error: f64,
}

/// Evaluates the Gauss example at the centers of `X` only.
pub fn gauss_row(q0: u32, a: usize) -> Result<GaussRow> {
    let lattice = GaussLattice::new(q0)?;
    let f = lattice.density()?;
    let centers = lattice.centers();
    let pts: Vec<[f64; 2]> = centers.iter().map(|c| c.x).collect();
    let caps = CapDecomposition::disjoint(GAUSS_K)?;
    let fields = CapFields::evaluate(&f, Curve::Parabola, &caps, &pts)?;
    let broad = fields.broad(a)?;
    let total: Vec<f64> = fields.total().expect("disjoint caps keep the sum").iter().map(|v| v.norm()).collect();
    let oracle_error = pts
        .iter()
        .zip(&total)
        .map(|(x, v)| {
            let o = lattice.oracle(*x);
            (v - o).abs() / o
        })
        .fold(0.0, f64::max);
    let mut sorted = total.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median_field = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
    let floor = GAUSS_POINTWISE_C * lattice.radius.powf(-7.0 / 12.0);
    let pointwise_share = total.iter().filter(|&&v| v >= floor).count() as f64 / n as f64;
    let area = PI * n as f64;
    let broad_l2 = (broad.iter().map(|b| b * b).sum::<f64>() * PI).sqrt();
    let f_l2 = f.l2_norm();
    Ok(GaussRow {
        q0,
        radius: lattice.radius,
        centers: n,
        area,
        f_l2,
        broad_l2,
        ratio: broad_l2 / f_l2,
        median_field,
        pointwise_share,
        oracle_error,
    })
}

pub fn gauss_sharpness_sweep(q0s: &[u32], a: usize) -> Result<GaussSweep> {
    if a < 2 {
        return Err(invalid("the sweep needs A >= 2"));
    }
    let rows = q0s.iter().map(|&q| gauss_row(q, a)).collect::<Result<Vec<_>>>()?;
    let fit = exponent_fit(&rows.iter().map(|r| (r.area, r.ratio)).collect::<Vec<_>>())?;
    let pointwise_fit = exponent_fit(&rows.iter().map(|r| (r.radius, r.median_field)).collect::<Vec<_>>())?;
    let worst_oracle_error = rows.iter().map(|r| r.oracle_error).fold(0.0, f64::max);
    Ok(GaussSweep { a, k: GAUSS_K, rows, fit, pointwise_fit, worst_oracle_error })
}
