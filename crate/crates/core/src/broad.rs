//! Cap decompositions and the broad operator `Br_A`.
//!
//! `Br_A Ef(x)` is the largest value of `min_{σ∈S} |Ef_σ(x)|` over sets `S`
//! of `A` caps, which is the `A`-th largest cap modulus. It is zero when
//! there are fewer than `A` caps.

use std::cmp::Ordering;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::extension::{extension_values, Cap, Curve};
use crate::grid::{Field, SampledDensity, SpatialPointSet};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CapMode {
    /// Caps partition `[-1, 1]`; a node on a shared edge belongs to the left cap.
    Disjoint,
    /// Disjoint caps plus half-shifted caps; each point is covered once or twice.
    Overlapping,
}

/// Covering of `[-1, 1]` by caps of length `1/K`.
///
/// The requested scale is rounded so that `n = ⌈2K⌉` caps tile `[-1, 1]`;
/// the effective scale is `n/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct CapDecomposition<T> {
    requested_k: T,
    caps: Vec<Cap<T>>,
    base: usize,
    mode: CapMode,
}

impl<T: Real> CapDecomposition<T> {
    pub fn disjoint(k: T) -> Result<Self> {
        Self::build(k, CapMode::Disjoint)
    }

    pub fn overlapping(k: T) -> Result<Self> {
        Self::build(k, CapMode::Overlapping)
    }

    fn build(k: T, mode: CapMode) -> Result<Self> {
        if !(k >= T::lit(0.5)) || !k.is_finite() {
            return Err(invalid(format!("cap scale K = {k} must be at least 1/2")));
        }
        let base = ((k + k).as_f64() - 1e-9).ceil().max(1.0) as usize;
        let eff = T::from_usize(base) * T::lit(0.5);
        let width = T::lit(2.0) / T::from_usize(base);
        let mut caps = Vec::new();
        for i in 0..base {
            let center = -T::one() + (T::from_usize(i) + T::lit(0.5)) * width;
            caps.push(Cap::new(center, eff)?);
            if mode == CapMode::Overlapping && i + 1 < base {
                let edge = -T::one() + T::from_usize(i + 1) * width;
                caps.push(Cap::new(edge, eff)?);
            }
        }
        Ok(Self { requested_k: k, caps, base, mode })
    }

    pub fn requested_k(&self) -> T {
        self.requested_k
    }

    /// Effective `K`, equal to half the number of base caps.
    pub fn k(&self) -> T {
        T::from_usize(self.base) * T::lit(0.5)
    }

    pub fn caps(&self) -> &[Cap<T>] {
        &self.caps
    }

    pub fn len(&self) -> usize {
        self.caps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.caps.is_empty()
    }

    pub fn mode(&self) -> CapMode {
        self.mode
    }

    /// Index of the base cap containing `xi`; ties go to the left cap.
    pub fn base_cap_of(&self, xi: T) -> usize {
        let n = T::from_usize(self.base);
        let u = ((xi + T::one()) * n * T::lit(0.5)).ceil().as_f64() - 1.0;
        u.clamp(0.0, (self.base - 1) as f64) as usize
    }

    /// Cap indices containing `xi`: one in disjoint mode, one or two otherwise.
    pub fn caps_of(&self, xi: T) -> Vec<usize> {
        let b = self.base_cap_of(xi);
        match self.mode {
            CapMode::Disjoint => vec![b],
            CapMode::Overlapping => {
                let mut out = Vec::with_capacity(2);
                if b > 0 && self.in_cap(2 * b - 1, xi) {
                    out.push(2 * b - 1);
                }
                out.push(2 * b);
                if 2 * b + 1 < self.caps.len() && self.in_cap(2 * b + 1, xi) {
                    out.push(2 * b + 1);
                }
                out
            }
        }
    }

    fn in_cap(&self, s: usize, xi: T) -> bool {
        let c = &self.caps[s];
        xi > c.lo() && xi <= c.hi()
    }

    /// Per-cap densities `f_σ = f·1_σ`.
    pub fn split(&self, f: &SampledDensity<T>) -> Vec<SampledDensity<T>> {
        let mut parts: Vec<Vec<(usize, Complex<T>)>> = vec![Vec::new(); self.caps.len()];
        for (i, xi, v) in f.iter() {
            for c in self.caps_of(xi) {
                parts[c].push((i, v));
            }
        }
        parts
            .into_iter()
            .map(|e| SampledDensity::from_sparse(*f.grid(), e).expect("split preserves order"))
            .collect()
    }
}

/// `|Ef_σ(x)|` for every cap and point, plus the summed field in disjoint mode.
#[derive(Clone, Debug)]
pub struct CapFields<T> {
    caps: usize,
    moduli: Vec<T>,
    total: Option<Vec<Complex<T>>>,
}

impl<T: Real> CapFields<T> {
    pub fn evaluate(
        f: &SampledDensity<T>,
        curve: Curve,
        caps: &CapDecomposition<T>,
        pts: &[[T; 2]],
    ) -> Result<Self> {
        let parts = caps.split(f);
        let fields = parts
            .iter()
            .map(|p| extension_values(p, curve, pts))
            .collect::<Result<Vec<_>>>()?;
        let n = caps.len();
        let moduli = (0..pts.len())
            .into_par_iter()
            .flat_map_iter(|k| fields.iter().map(move |col| col[k].norm()))
            .collect();
        let total = (caps.mode() == CapMode::Disjoint).then(|| {
            (0..pts.len())
                .map(|k| fields.iter().fold(Complex::zero(), |acc, col| acc + col[k]))
                .collect()
        });
        Ok(Self { caps: n, moduli, total })
    }

    pub fn cap_count(&self) -> usize {
        self.caps
    }

    pub fn point_count(&self) -> usize {
        if self.caps == 0 {
            0
        } else {
            self.moduli.len() / self.caps
        }
    }

    /// Cap moduli at point `k`.
    pub fn at(&self, k: usize) -> &[T] {
        &self.moduli[k * self.caps..(k + 1) * self.caps]
    }

    /// `Σ_σ Ef_σ` per point; present in disjoint mode only.
    pub fn total(&self) -> Option<&[Complex<T>]> {
        self.total.as_deref()
    }

    pub fn broad(&self, a: usize) -> Result<Vec<T>> {
        (0..self.point_count()).map(|k| ath_largest(self.at(k), a)).collect()
    }

    pub fn max(&self) -> Vec<T> {
        (0..self.point_count())
            .map(|k| self.at(k).iter().copied().fold(T::zero(), T::max))
            .collect()
    }
}

/// `A`-th largest entry; `0` when `A` exceeds the length.
pub fn ath_largest<T: Real>(values: &[T], a: usize) -> Result<T> {
    if a == 0 {
        return Err(invalid("A must be a positive integer"));
    }
    if a > values.len() {
        return Ok(T::zero());
    }
    let mut buf = values.to_vec();
    let desc = |x: &T, y: &T| y.partial_cmp(x).unwrap_or(Ordering::Equal);
    let (_, nth, _) = buf.select_nth_unstable_by(a - 1, desc);
    Ok(*nth)
}

/// `Br_A Ef` at every point, stored as real parts.
pub fn broad_field<T: Real>(
    f: &SampledDensity<T>,
    curve: Curve,
    caps: &CapDecomposition<T>,
    a: usize,
    pts: &Arc<SpatialPointSet<T>>,
) -> Result<Field<T>> {
    if a == 0 {
        return Err(invalid("A must be a positive integer"));
    }
    let fields = CapFields::evaluate(f, curve, caps, pts.points())?;
    Field::from_moduli(pts.clone(), fields.broad(a)?)
}

/// `max_x (|Ef(x)| − A·max_σ|Ef_σ(x)| − #Σ·Br_A Ef(x))⁺ / ‖f‖₂`.
pub fn broad_narrow_residual<T: Real>(
    f: &SampledDensity<T>,
    curve: Curve,
    caps: &CapDecomposition<T>,
    a: usize,
    pts: &Arc<SpatialPointSet<T>>,
) -> Result<T> {
    if caps.mode() != CapMode::Disjoint {
        return Err(Error::OverlappingCaps);
    }
    if a == 0 {
        return Err(invalid("A must be a positive integer"));
    }
    if f.is_zero() {
        return Ok(T::zero());
    }
    let whole = extension_values(f, curve, pts.points())?;
    let fields = CapFields::evaluate(f, curve, caps, pts.points())?;
    let broad = fields.broad(a)?;
    let max = fields.max();
    let weight_a = T::from_usize(a);
    let weight_caps = T::from_usize(caps.len());
    let worst = (0..pts.len()).fold(T::zero(), |m, k| {
        m.max(whole[k].norm() - weight_a * max[k] - weight_caps * broad[k])
    });
    Ok(worst.max(T::zero()) / f.l2_norm())
}

/// `max_x (Br_{A₁+A₂}E(f₁+f₂) − Br_{A₁}Ef₁ − Br_{A₂}Ef₂)⁺`.
pub fn broad_triangle_residual<T: Real>(
    f1: &SampledDensity<T>,
    f2: &SampledDensity<T>,
    curve: Curve,
    caps: &CapDecomposition<T>,
    a1: usize,
    a2: usize,
    pts: &Arc<SpatialPointSet<T>>,
) -> Result<T> {
    let sum = f1.add(f2)?;
    let b1 = CapFields::evaluate(f1, curve, caps, pts.points())?.broad(a1)?;
    let b2 = CapFields::evaluate(f2, curve, caps, pts.points())?.broad(a2)?;
    let b12 = CapFields::evaluate(&sum, curve, caps, pts.points())?.broad(a1 + a2)?;
    let worst = (0..pts.len()).fold(T::zero(), |m, k| m.max(b12[k] - b1[k] - b2[k]));
    Ok(worst.max(T::zero()))
}
