//! The extension operator `Ef(x) = Σ e^{i(x₁ξ + x₂Φ(ξ))} f(ξ) h` on graph curves.

mod kernel;
mod rescale;
pub mod rows;

use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Field, ProductField, SampledDensity, SpatialPointSet};
use crate::scalar::Real;

pub use kernel::SupportRuns;
pub use rescale::{parabolic_rescale, rescale_identity_residual, rescaled_density};

/// Largest admissible phase increment per frequency cell, in radians.
pub const PHASE_STEP_LIMIT: f64 = 0.1;

/// Curve given as the graph of a phase function on `[-1, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    /// `Φ(ξ) = ξ²`
    #[default]
    Parabola,
    /// `Φ(ξ) = -√(1 - (ξ/2)²)`, a circular arc rescaled to unit frequency range.
    CircleGraph,
}

impl Curve {
    #[inline]
    pub fn phase<T: Real>(self, xi: T) -> T {
        match self {
            Curve::Parabola => xi * xi,
            Curve::CircleGraph => {
                let u = xi * T::lit(0.5);
                -(T::one() - u * u).sqrt()
            }
        }
    }

    #[inline]
    pub fn slope<T: Real>(self, xi: T) -> T {
        match self {
            Curve::Parabola => xi + xi,
            Curve::CircleGraph => {
                let u = xi * T::lit(0.5);
                xi * T::lit(0.25) / (T::one() - u * u).sqrt()
            }
        }
    }

    #[inline]
    pub fn curvature<T: Real>(self, xi: T) -> T {
        match self {
            Curve::Parabola => T::lit(2.0),
            Curve::CircleGraph => {
                let u = xi * T::lit(0.5);
                T::lit(0.25) / (T::one() - u * u).powf(T::lit(1.5))
            }
        }
    }

    /// `sup |Φ′|` over `[lo, hi]`; `Φ′` is increasing for both curves.
    pub fn max_slope<T: Real>(self, lo: T, hi: T) -> T {
        self.slope(lo).abs().max(self.slope(hi).abs())
    }

    pub fn name(self) -> &'static str {
        match self {
            Curve::Parabola => "parabola",
            Curve::CircleGraph => "circle_graph",
        }
    }
}

impl std::str::FromStr for Curve {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parabola" => Ok(Curve::Parabola),
            "circle_graph" => Ok(Curve::CircleGraph),
            other => Err(invalid(format!("unknown curve `{other}`"))),
        }
    }
}

/// A frequency interval of length `1/K` centered at `center`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cap<T> {
    center: T,
    halfwidth: T,
}

impl<T: Real> Cap<T> {
    /// Cap of scale `k` (halfwidth `1/(2k)`) contained in `[-1, 1]`.
    pub fn new(center: T, k: T) -> Result<Self> {
        if !(k > T::zero()) {
            return Err(invalid("cap scale must be positive"));
        }
        let halfwidth = (k + k).recip();
        let slack = T::lit(1e-12);
        if center - halfwidth < -T::one() - slack || center + halfwidth > T::one() + slack {
            return Err(invalid(format!("cap [{}, {}] leaves [-1, 1]", center - halfwidth, center + halfwidth)));
        }
        Ok(Self { center, halfwidth })
    }

    pub fn center(&self) -> T {
        self.center
    }

    pub fn halfwidth(&self) -> T {
        self.halfwidth
    }

    pub fn k(&self) -> T {
        (self.halfwidth + self.halfwidth).recip()
    }

    pub fn lo(&self) -> T {
        self.center - self.halfwidth
    }

    pub fn hi(&self) -> T {
        self.center + self.halfwidth
    }
}

/// Largest phase increment per cell over the support of `f` and the points.
pub fn phase_step<T: Real>(f: &SampledDensity<T>, curve: Curve, pts: &[[T; 2]]) -> T {
    let Some((lo, hi)) = f.support_range() else {
        return T::zero();
    };
    let slope = curve.max_slope(lo, hi);
    let reach = pts
        .iter()
        .fold(T::zero(), |m, x| m.max(x[0].abs() + x[1].abs() * slope));
    reach * f.grid().step()
}

pub(crate) fn check_resolution<T: Real>(f: &SampledDensity<T>, curve: Curve, pts: &[[T; 2]]) -> Result<()> {
    let step = phase_step(f, curve, pts).as_f64();
    if step > PHASE_STEP_LIMIT * (1.0 + 1e-12) {
        return Err(Error::GridTooCoarse { phase_step: step, limit: PHASE_STEP_LIMIT });
    }
    Ok(())
}

/// Values of `Ef` at every point, summing support nodes in index order.
pub fn extension_evaluate<T: Real>(
    f: &SampledDensity<T>,
    curve: Curve,
    pts: &Arc<SpatialPointSet<T>>,
) -> Result<Field<T>> {
    let values = extension_values(f, curve, pts.points())?;
    Field::new(pts.clone(), values)
}

/// Raw values of `Ef` at `pts`, after the resolution check.
pub fn extension_values<T: Real>(
    f: &SampledDensity<T>,
    curve: Curve,
    pts: &[[T; 2]],
) -> Result<Vec<Complex<T>>> {
    if f.is_zero() {
        return Ok(vec![Complex::zero(); pts.len()]);
    }
    check_resolution(f, curve, pts)?;
    let runs = SupportRuns::new(f);
    Ok(pts.par_iter().map(|x| runs.evaluate(curve, x[0], x[1])).collect())
}

/// `u(x, t) = ∫ e^{i(xξ + tξ²)} f̂(ξ) dξ` on the product grid `x_nodes × t_nodes`.
///
/// Identical, bit for bit, to [`extension_evaluate`] with the parabola.
pub fn schrodinger_evaluate<T: Real>(
    fhat: &SampledDensity<T>,
    x_nodes: &[T],
    t_nodes: &[T],
) -> Result<ProductField<T>> {
    let pts: Vec<[T; 2]> = x_nodes
        .iter()
        .flat_map(|&x| t_nodes.iter().map(move |&t| [x, t]))
        .collect();
    let set = Arc::new(SpatialPointSet::enclosing(pts, T::one())?);
    let field = extension_evaluate(fhat, Curve::Parabola, &set)?;
    ProductField::new(x_nodes.to_vec(), t_nodes.to_vec(), field.values().to_vec())
}
