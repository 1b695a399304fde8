use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::extension::rows::ExtensionRows;
use crate::extension::Curve;
use crate::grid::{FrequencyGrid, SampledDensity};

/// Which mixed norm is taken. Both evaluate `∫ e^{i(xξ + tΦ(ξ))} f̂(ξ) dξ`
/// and take the sup over the second variable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaximalVariant {
    /// `e^{itΔ}f` with `Φ(ξ) = ξ²`, sup over `t`.
    #[default]
    Schrodinger,
    /// `Ef` for a general curve, sup over `x₂`.
    Extension(Curve),
}

impl MaximalVariant {
    pub fn curve(self) -> Curve {
        match self {
            Self::Schrodinger => Curve::Parabola,
            Self::Extension(c) => c,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MaximalRecord {
    /// `‖u‖_{L^q_x L^∞_t}` over integer `x ∈ [-4R, 4R]`, `t ∈ [-R, R]`.
    pub lhs: f64,
    /// `‖f‖_p` on the step-1/4 grid of `[-8R, 8R]`.
    pub f_p: f64,
    /// `R^{1/2 - 1/p}·‖f‖_p`.
    pub bound: f64,
    pub ratio: f64,
    /// `‖f̂‖₁`, a pointwise bound on the truncated tail.
    pub tail_bound: f64,
    /// `sup_t |u|` at `x = ±4R`.
    pub edge: f64,
}

/// Grid on `[-1, 1]` resolving both the maximal rows and `f` on `[-8R, 8R]`.
pub fn maximal_grid(radius: f64, curve: Curve) -> FrequencyGrid<f64> {
    let slope = curve.max_slope(-1.0, 1.0);
    let extent = (8.0 * radius).max(radius * (4.0 + slope));
    FrequencyGrid::unit((2.0 * extent / crate::extension::PHASE_STEP_LIMIT).ceil() as usize)
}

pub fn maximal_schrodinger_norm(
    fhat: &SampledDensity<f64>,
    radius: f64,
    q: f64,
    p: f64,
    variant: MaximalVariant,
) -> Result<MaximalRecord> {
    if !(q >= 1.0) || !(p >= 1.0) {
        return Err(crate::Error::InvalidExponent(if q >= 1.0 { p } else { q }));
    }
    if !(radius >= 1.0) {
        return Err(invalid(format!("R must be at least 1, got {radius}")));
    }
    let g = fhat.grid();
    if g.lo() < -1.0 - 1e-12 || g.hi() > 1.0 + 1e-12 {
        return Err(invalid("f̂ must be supported in [-1, 1]"));
    }
    let curve = variant.curve();
    let n = (4.0 * radius).round() as usize;
    let width = 2 * n + 1;
    let rows = ExtensionRows::new(fhat, curve, -(n as f64), 1.0, width, radius)?;
    let times = (2.0 * radius).round() as usize + 1;
    let sup = (0..times)
        .into_par_iter()
        .map(|k| rows.row(-radius + k as f64).into_iter().map(|v| v.norm()).collect::<Vec<f64>>())
        .reduce(
            || vec![0.0; width],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x = x.max(*y));
                a
            },
        );
    let lhs = sup.iter().map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q);
    let edge = sup[0].max(sup[width - 1]);

    let m = (64.0 * radius).round() as usize + 1;
    let f_rows = ExtensionRows::new(fhat, curve, -8.0 * radius, 0.25, m, 0.0)?;
    let f_p = (f_rows.row(0.0).iter().map(|v| v.norm().powf(p)).sum::<f64>() * 0.25).powf(1.0 / p);
    let bound = radius.powf(0.5 - 1.0 / p) * f_p;
    Ok(MaximalRecord { lhs, f_p, bound, ratio: lhs / bound, tail_bound: fhat.l1_norm(), edge })
}
