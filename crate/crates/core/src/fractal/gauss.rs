//! The Gauss-sum example: `f` is the indicator of thin neighborhoods of a
//! frequency lattice `sℤ ∩ [-1, 1]` with `s ≈ (2π/R)^{1/2}`, and `X` is a
//! union of unit balls at rational points where `Ef` is a complete Gauss sum.
//!
//! With phase `x₁ξ + x₂ξ²` and `ξ = ks`, the centers
//! `x₁ = (2π/s)(a/q + m)`, `x₂ = (2π/s²)(b/q)` turn `e^{i(x₁ks + x₂k²s²)}`
//! into `e(ak/q + bk²/q)`.

use num_complex::Complex;
use num_integer::Integer;

use crate::error::{invalid, Result};
use crate::grid::{FrequencyGrid, SampledDensity};

/// Frequency cells per `R⁻¹`.
const CELLS_PER_INV_R: f64 = 400.0;
/// Cells in each lattice neighborhood; width `8h = 1/(50R)`.
const WIDTH_CELLS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussLattice {
    pub q0: u32,
    pub radius: f64,
    /// Frequency grid step `h = 1/(400R)`.
    pub step: f64,
    /// Lattice spacing, an integer multiple of `step`.
    pub spacing: f64,
    spacing_cells: usize,
}

/// A Gauss-example center with its rational data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussCenter {
    pub x: [f64; 2],
    pub a: u32,
    pub b: u32,
    pub q: u32,
}

impl GaussLattice {
    pub fn new(q0: u32) -> Result<Self> {
        if q0 < 3 {
            return Err(invalid(format!("Gauss example needs q0 >= 3, got {q0}")));
        }
        let radius = f64::from(q0).powi(6);
        let step = 1.0 / (CELLS_PER_INV_R * radius);
        let spacing_cells = (CELLS_PER_INV_R * (2.0 * std::f64::consts::PI * radius).sqrt()).round() as usize;
        Ok(Self { q0, radius, step, spacing: spacing_cells as f64 * step, spacing_cells })
    }

    /// Recovers `q₀` from `R = q₀⁶`.
    pub fn from_radius(radius: f64) -> Result<Self> {
        let q0 = radius.powf(1.0 / 6.0).round();
        if q0 < 3.0 || (q0.powi(6) - radius).abs() > 1e-6 {
            return Err(invalid(format!("Gauss example needs R = q0^6 with q0 >= 3, got R = {radius}")));
        }
        Self::new(q0 as u32)
    }

    pub fn width(&self) -> f64 {
        WIDTH_CELLS as f64 * self.step
    }

    /// Lattice indices `k` with the whole neighborhood of `ks` inside `[-1, 1]`.
    pub fn lattice(&self) -> std::ops::RangeInclusive<i64> {
        let kmax = ((1.0 - 0.5 * self.width()) / self.spacing).floor() as i64;
        -kmax..=kmax
    }

    pub fn grid(&self) -> FrequencyGrid<f64> {
        FrequencyGrid::unit((2.0 / self.step).round() as usize)
    }

    /// Indicator of the width-`8h` neighborhoods of the lattice.
    pub fn density(&self) -> Result<SampledDensity<f64>> {
        let grid = self.grid();
        let centre = grid.len() / 2;
        let mut entries = Vec::new();
        for k in self.lattice() {
            // cells [c - 4, c + 4) around the node boundary at ks
            let c = centre as i64 + k * self.spacing_cells as i64;
            for i in c - (WIDTH_CELLS / 2) as i64..c + (WIDTH_CELLS / 2) as i64 {
                entries.push((i as usize, Complex::new(1.0, 0.0)));
            }
        }
        SampledDensity::from_sparse(grid, entries)
    }

    /// Rational centers inside `B_R`, with `q` odd in `[q₀, 2q₀]` and
    /// `a, b ∈ [q₀, 2q₀]` coprime to `q`; residues `a mod q` are merged.
    pub fn centers(&self) -> Vec<GaussCenter> {
        let (q0, r) = (self.q0, self.radius);
        let period = 2.0 * std::f64::consts::PI / self.spacing;
        let mut out = Vec::new();
        for q in (q0..=2 * q0).filter(|q| q % 2 == 1) {
            for b in (q0..=2 * q0).filter(|b| b.gcd(&q) == 1) {
                let x2 = period / self.spacing * f64::from(b) / f64::from(q);
                if x2 > r {
                    continue;
                }
                let reach = (r * r - x2 * x2).sqrt();
                let mut residues: Vec<u32> =
                    (q0..=2 * q0).filter(|a| a.gcd(&q) == 1).map(|a| a % q).collect();
                residues.sort_unstable();
                residues.dedup();
                for a in residues {
                    let frac = f64::from(a) / f64::from(q);
                    let lo = (-reach / period - frac).ceil() as i64;
                    let hi = (reach / period - frac).floor() as i64;
                    for m in lo..=hi {
                        let x1 = period * (frac + m as f64);
                        out.push(GaussCenter { x: [x1, x2], a, b, q });
                    }
                }
            }
        }
        out
    }

    /// `w·|Σ_k e^{i(x₁ks + x₂k²s²)}|`, the lattice exponential sum without
    /// quadrature.
    pub fn oracle(&self, x: [f64; 2]) -> f64 {
        let s = self.spacing;
        let sum: Complex<f64> = self
            .lattice()
            .map(|k| {
                let xi = k as f64 * s;
                Complex::from_polar(1.0, x[0] * xi + x[1] * xi * xi)
            })
            .sum();
        self.width() * sum.norm()
    }
}
