use std::cmp::Reverse;
use std::f64::consts::PI;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::broad::{CapDecomposition, CapFields};
use crate::error::{invalid, precondition, Result};
use crate::extension::{extension_values, Curve, PHASE_STEP_LIMIT};
use crate::fractal::{weight_katz_tao, GaussLattice};
use crate::grid::{FrequencyGrid, SampledDensity, WeightSet};
use crate::scalar::cis;
use crate::wavepackets::bumps::mollifier;

type C64 = Complex<f64>;

/// Smallest exponent of the weighted `L^q` and Mizohata-Takeuchi bounds.
pub const CRITICAL_EXPONENT: f64 = 18.0 / 5.0;

/// Whether an exponent below [`CRITICAL_EXPONENT`] is accepted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExponentRange {
    #[default]
    Theorem,
    Exploratory,
}

impl ExponentRange {
    fn check(self, q: f64) -> Result<()> {
        if q.is_nan() || q < 1.0 {
            return Err(crate::Error::InvalidExponent(q));
        }
        if self == Self::Theorem && q < CRITICAL_EXPONENT - 1e-12 {
            return Err(invalid(format!("exponent {q} below 18/5 needs the exploratory flag")));
        }
        Ok(())
    }
}

/// Grid on `[-1, 1]` fine enough for every `|x| ≤ reach·R` with this curve.
pub fn grid_for(radius: f64, curve: Curve, reach: f64) -> FrequencyGrid<f64> {
    let slope = curve.max_slope(-1.0, 1.0);
    let extent = reach * radius * (1.0 + slope);
    let cells = (2.0 * extent / PHASE_STEP_LIMIT).ceil() as usize;
    FrequencyGrid::unit(cells.max(2))
}

/// Test densities used by the sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    /// Independent complex values on blocks of width `1/R`.
    Random,
    /// [`DensityKind::Random`] restricted to one cap of the decomposition.
    SingleCap,
    /// The Gauss-example lattice indicator; needs `R = q₀⁶`.
    Gauss,
    /// A single wave packet at frequency `ξ_c`, modulated onto a given line.
    Packet,
    /// `f̂ ≡ 1` on `[-1, 1]`, the Knapp example at unit frequency scale.
    Constant,
}

impl DensityKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Random => "random",
            Self::SingleCap => "single_cap",
            Self::Gauss => "gauss",
            Self::Packet => "packet",
            Self::Constant => "constant",
        }
    }
}

pub fn random_density(grid: FrequencyGrid<f64>, radius: f64, seed: u64) -> Result<SampledDensity<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = (2.0 * radius).ceil() as usize;
    let values: Vec<C64> = (0..blocks)
        .map(|_| {
            let (r, a): (f64, f64) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..2.0 * PI));
            C64::from_polar(r.sqrt(), a)
        })
        .collect();
    SampledDensity::from_fn(grid, |xi| {
        let b = (((xi + 1.0) * 0.5 * blocks as f64) as usize).min(blocks - 1);
        values[b]
    })
}

pub fn constant_density(grid: FrequencyGrid<f64>) -> Result<SampledDensity<f64>> {
    SampledDensity::from_fn(grid, |_| C64::new(1.0, 0.0))
}

pub fn single_cap_density(
    grid: FrequencyGrid<f64>,
    radius: f64,
    caps: &CapDecomposition<f64>,
    seed: u64,
) -> Result<SampledDensity<f64>> {
    let f = random_density(grid, radius, seed)?;
    let cap = caps.caps()[(seed as usize) % caps.len()];
    Ok(f.restricted(|_, xi| xi > cap.lo() && xi <= cap.hi()))
}

/// `φ((ξ - ξ_c)√R)·e^{-i c ξ}` with `c` chosen so that `Ef` concentrates on
/// the line `x₁ + x₂Φ′(ξ_c) = c`.
pub fn packet_density(grid: FrequencyGrid<f64>, radius: f64, xi_c: f64, c: f64) -> Result<SampledDensity<f64>> {
    let scale = radius.sqrt();
    SampledDensity::from_fn(grid, |xi| {
        let w = mollifier((xi - xi_c) * scale);
        if w == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            cis(-c * xi) * w
        }
    })
}

/// `Ef`, cap moduli and `Br_A Ef` at the centers of a weight set.
#[derive(Clone, Debug)]
pub struct WeightedSample {
    pub area: f64,
    pub f_l2: f64,
    pub broad: Vec<f64>,
    pub field: Vec<f64>,
}

impl WeightedSample {
    /// Checks the Katz-Tao precondition `C ≤ 8 ln R` on the `R⁻¹`-dilate.
    pub fn evaluate(
        f: &SampledDensity<f64>,
        weight: &WeightSet,
        caps: &CapDecomposition<f64>,
        a: usize,
        curve: Curve,
    ) -> Result<Self> {
        check_katz_tao(weight)?;
        let area = weight.area();
        let f_l2 = f.l2_norm();
        if f.is_zero() {
            let zeros = vec![0.0; weight.len()];
            return Ok(Self { area, f_l2, broad: zeros.clone(), field: zeros });
        }
        let fields = CapFields::evaluate(f, curve, caps, weight.centers())?;
        let broad = fields.broad(a)?;
        let field = match fields.total() {
            Some(total) => total.iter().map(|v| v.norm()).collect(),
            None => extension_values(f, curve, weight.centers())?.iter().map(|v| v.norm()).collect(),
        };
        Ok(Self { area, f_l2, broad, field })
    }

    fn lp(values: &[f64], p: f64) -> f64 {
        (values.iter().map(|v| v.powf(p)).sum::<f64>() * PI).powf(1.0 / p)
    }

    /// `‖Br_A Ef‖_{L²(X)} / (|X|^{2/9}‖f‖₂)`.
    pub fn l2_ratio(&self) -> f64 {
        if self.f_l2 == 0.0 {
            return 0.0;
        }
        Self::lp(&self.broad, 2.0) / (self.area.powf(2.0 / 9.0) * self.f_l2)
    }

    /// `‖Br_A Ef‖_{L^q(X)} / ‖f‖₂`.
    pub fn lq_ratio(&self, q: f64) -> f64 {
        if self.f_l2 == 0.0 {
            return 0.0;
        }
        if q.is_infinite() {
            return self.broad.iter().copied().fold(0.0, f64::max) / self.f_l2;
        }
        Self::lp(&self.broad, q) / self.f_l2
    }

    /// `‖Ef‖^p_{L^p(X)} / (w·‖f‖₂^p)`.
    pub fn mt_ratio(&self, p: f64, w: f64) -> f64 {
        if self.f_l2 == 0.0 {
            return 0.0;
        }
        self.field.iter().map(|v| v.powf(p)).sum::<f64>() * PI / (w * self.f_l2.powf(p))
    }
}

fn check_katz_tao(weight: &WeightSet) -> Result<f64> {
    let c = match weight.katz_tao_c() {
        Some(c) => c,
        None => weight_katz_tao(weight)?,
    };
    let limit = 8.0 * weight.radius().ln();
    if c > limit {
        return Err(precondition(format!("weight set Katz-Tao constant {c:.3} exceeds 8 ln R = {limit:.3}")));
    }
    Ok(c)
}

pub fn weighted_l2_ratio(
    f: &SampledDensity<f64>,
    weight: &WeightSet,
    k: f64,
    a: usize,
    curve: Curve,
) -> Result<f64> {
    let caps = CapDecomposition::disjoint(k)?;
    Ok(WeightedSample::evaluate(f, weight, &caps, a, curve)?.l2_ratio())
}

pub fn weighted_lq_ratio(
    f: &SampledDensity<f64>,
    weight: &WeightSet,
    k: f64,
    a: usize,
    q: f64,
    range: ExponentRange,
    curve: Curve,
) -> Result<f64> {
    if !q.is_infinite() {
        range.check(q)?;
    }
    let caps = CapDecomposition::disjoint(k)?;
    Ok(WeightedSample::evaluate(f, weight, &caps, a, curve)?.lq_ratio(q))
}

/// The extremal `1 × R` tube of [`mt_weight`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MtWeight {
    /// `w_R(X) = π·count`.
    pub value: f64,
    pub count: usize,
    /// Direction of the tube axis.
    pub angle: f64,
    /// Signed distance of the axis from the origin.
    pub offset: f64,
    /// A point on the axis at the tube's midpoint.
    pub midpoint: [f64; 2],
}

/// `w_R(X)` over directions `1/(4R)` apart and offsets `1/2` apart.
pub fn mt_weight(weight: &WeightSet) -> Result<MtWeight> {
    let r = weight.radius();
    mt_weight_with(weight, 1.0 / (4.0 * r), 0.5)
}

pub fn mt_weight_with(weight: &WeightSet, angle_step: f64, offset_step: f64) -> Result<MtWeight> {
    if weight.is_empty() {
        return Err(crate::Error::EmptyDomain);
    }
    if !(angle_step > 0.0 && offset_step > 0.0 && offset_step <= 1.0) {
        return Err(invalid("mt_weight needs positive steps with offset step at most 1"));
    }
    let r = weight.radius();
    let pts = weight.centers();
    let directions = (PI / angle_step).ceil() as usize;
    // tube of width 1 = `span` consecutive offset bins
    let span = (1.0 / offset_step).round().max(1.0) as usize;
    let bins = (2.0 * (r + 2.0) / offset_step).ceil() as usize + span;
    let best = (0..directions)
        .into_par_iter()
        .map(|d| {
            let angle = d as f64 * angle_step;
            let (s, c) = angle.sin_cos();
            let bin: Vec<usize> =
                pts.iter().map(|p| (((-s * p[0] + c * p[1]) + r + 1.0) / offset_step) as usize).collect();
            // per-bin linked lists of point indices
            let mut hist = vec![0u32; bins + 1];
            let mut head = vec![usize::MAX; bins + 1];
            let mut next = vec![usize::MAX; pts.len()];
            for (i, &b) in bin.iter().enumerate() {
                hist[b] += 1;
                next[i] = head[b];
                head[b] = i;
            }
            let mut top = (0usize, 0usize, 0.0f64);
            let mut strip = hist[..span].iter().sum::<u32>() as usize;
            for b in 0..bins - span {
                if b > 0 {
                    strip = strip + hist[b + span - 1] as usize - hist[b - 1] as usize;
                }
                // the strip count bounds every tube inside it
                if strip <= top.0 {
                    continue;
                }
                let mut along = Vec::with_capacity(strip);
                for k in b..b + span {
                    let mut i = head[k];
                    while i != usize::MAX {
                        along.push(c * pts[i][0] + s * pts[i][1]);
                        i = next[i];
                    }
                }
                along.sort_by(f64::total_cmp);
                let mut lo = 0;
                for hi in 0..along.len() {
                    while along[hi] - along[lo] > r {
                        lo += 1;
                    }
                    if hi + 1 - lo > top.0 {
                        top = (hi + 1 - lo, b, 0.5 * (along[lo] + along[hi]));
                    }
                }
            }
            (top.0, d, top.1, top.2)
        })
        .reduce(|| (0, 0, 0, 0.0), |x, y| if (y.0, Reverse(y.1)) > (x.0, Reverse(x.1)) { y } else { x });
    let (count, d, b, mid) = best;
    let angle = d as f64 * angle_step;
    let offset = (b as f64 + 0.5 * span as f64) * offset_step - r - 1.0;
    let (s, c) = angle.sin_cos();
    let midpoint = [-s * offset + c * mid, c * offset + s * mid];
    Ok(MtWeight { value: PI * count as f64, count, angle, offset, midpoint })
}

/// `‖Ef‖^p_{L^p(X)} / (w_R(X)·‖f‖₂^p)`.
pub fn mt_ratio(f: &SampledDensity<f64>, weight: &WeightSet, p: f64, range: ExponentRange, curve: Curve) -> Result<f64> {
    range.check(p)?;
    if f.is_zero() {
        return Ok(0.0);
    }
    let w = mt_weight(weight)?.value;
    let field = extension_values(f, curve, weight.centers())?;
    let sum: f64 = field.iter().map(|v| v.norm().powf(p)).sum::<f64>() * PI;
    Ok(sum / (w * f.l2_norm().powf(p)))
}

/// A packet density whose `Ef` runs along the extremal tube, when the tube
/// direction is a normal direction of the curve.
pub fn aligned_packet(tube: &MtWeight, radius: f64, curve: Curve, grid: FrequencyGrid<f64>) -> Result<SampledDensity<f64>> {
    // axis x₁ + x₂Φ′(ξ) = c has direction (-Φ′(ξ), 1)
    let (s, c) = tube.angle.sin_cos();
    let target = if s.abs() < 1e-12 { f64::INFINITY } else { -c / s };
    let xi_c = bisect_slope(curve, target);
    let line_c = tube.midpoint[0] + tube.midpoint[1] * curve.slope(xi_c);
    packet_density(grid, radius, xi_c, line_c)
}

/// `ξ ∈ [-1, 1]` with `Φ′(ξ)` closest to `target`.
fn bisect_slope(curve: Curve, target: f64) -> f64 {
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    if target <= curve.slope(lo) {
        return lo;
    }
    if target >= curve.slope(hi) {
        return hi;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if curve.slope(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The Gauss-example density for `R = q₀⁶`.
pub fn gauss_density(radius: f64) -> Result<SampledDensity<f64>> {
    GaussLattice::from_radius(radius)?.density()
}
