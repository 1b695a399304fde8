//! Row evaluation of `Ef` on uniform `x₁` grids by a chirp-z transform.
//!
//! For fixed `x₂` the sum over a uniform frequency grid evaluated at uniform
//! `x₁` nodes is a chirp-z transform, computed with Bluestein's convolution.
//! Results agree with the direct sum to rounding.

use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rustfft::{Fft, FftPlanner};

use super::{check_resolution, Curve, PHASE_STEP_LIMIT};
use crate::error::{invalid, Error, Result};
use crate::grid::SampledDensity;
use crate::scalar::cis;

type C64 = Complex<f64>;

/// Plan for `S(x_k) = Σ_j c_j e^{i x_k ξ_j} h` with `ξ_j = ξ₀ + jh`, `x_k = x₀ + k·dx`.
pub struct ChirpRows {
    n: usize,
    m: usize,
    xi0: f64,
    h: f64,
    x0: f64,
    dx: f64,
    pre: Vec<C64>,
    post: Vec<C64>,
    kernel_hat: Vec<C64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl ChirpRows {
    pub fn new(xi0: f64, h: f64, n: usize, x0: f64, dx: f64, m: usize) -> Result<Self> {
        if n == 0 || m == 0 || !(h > 0.0) || !(dx > 0.0) {
            return Err(invalid("chirp rows need nonempty grids with positive steps"));
        }
        let len = (n + m - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let half_a = 0.5 * dx * h;
        let chirp = |j: usize| cis(half_a * (j as f64) * (j as f64));
        let pre = (0..n).map(|j| cis(x0 * h * j as f64) * chirp(j)).collect();
        let post = (0..m).map(|k| cis((x0 + dx * k as f64) * xi0) * chirp(k) * h).collect();
        let mut kernel = vec![C64::zero(); len];
        for (k, slot) in kernel.iter_mut().enumerate().take(m) {
            *slot = chirp(k).conj();
        }
        for j in 1..n {
            kernel[len - j] = chirp(j).conj();
        }
        forward.process(&mut kernel);
        Ok(Self { n, m, xi0, h, x0, dx, pre, post, kernel_hat: kernel, forward, inverse })
    }

    pub fn len_in(&self) -> usize {
        self.n
    }

    pub fn len_out(&self) -> usize {
        self.m
    }

    pub fn x_node(&self, k: usize) -> f64 {
        self.x0 + self.dx * k as f64
    }

    pub fn xi_node(&self, j: usize) -> f64 {
        self.xi0 + self.h * j as f64
    }

    /// Evaluates the row for `n` coefficients.
    pub fn evaluate(&self, coeffs: &[C64]) -> Vec<C64> {
        assert_eq!(coeffs.len(), self.n, "coefficient count must match the plan");
        let len = self.kernel_hat.len();
        let mut buf = vec![C64::zero(); len];
        for ((slot, &c), &p) in buf.iter_mut().zip(coeffs).zip(&self.pre) {
            *slot = c * p;
        }
        self.forward.process(&mut buf);
        for (b, &k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / len as f64;
        buf.truncate(self.m);
        for (b, &p) in buf.iter_mut().zip(&self.post) {
            *b = *b * p * scale;
        }
        buf
    }
}

/// Rows of `Ef(x₁, x₂)` for a density, each row a uniform `x₁` grid at fixed `x₂`.
pub struct ExtensionRows<'a> {
    f: &'a SampledDensity<f64>,
    curve: Curve,
    first: usize,
    plan: ChirpRows,
    dense: Vec<C64>,
}

impl<'a> ExtensionRows<'a> {
    /// `x₁` nodes `x0 + k·dx`, `k < m`; rows at any `|x₂| ≤ max_row`.
    pub fn new(f: &'a SampledDensity<f64>, curve: Curve, x0: f64, dx: f64, m: usize, max_row: f64) -> Result<Self> {
        let (first, last) = match (f.indices().first(), f.indices().last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(invalid("density has empty support")),
        };
        let x_end = x0 + dx * (m.saturating_sub(1)) as f64;
        let corners = [[x0, max_row], [x_end, max_row], [x0, -max_row], [x_end, -max_row]];
        check_resolution(f, curve, &corners)?;
        let n = last - first + 1;
        let grid = f.grid();
        let plan = ChirpRows::new(grid.node(first), grid.step(), n, x0, dx, m)?;
        let mut dense = vec![C64::zero(); n];
        for (i, _, v) in f.iter() {
            dense[i - first] = v;
        }
        Ok(Self { f, curve, first, plan, dense })
    }

    pub fn plan(&self) -> &ChirpRows {
        &self.plan
    }

    pub fn row(&self, x2: f64) -> Vec<C64> {
        let grid = self.f.grid();
        let coeffs: Vec<C64> = self
            .dense
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                if v.is_zero() {
                    v
                } else {
                    v * cis(x2 * self.curve.phase(grid.node(self.first + j)))
                }
            })
            .collect();
        self.plan.evaluate(&coeffs)
    }
}

/// Rows of `Ef` with a fixed length `m` and unit `x₁` step whose starting
/// point varies per row.
pub struct ShiftedRows<'a> {
    f: &'a SampledDensity<f64>,
    curve: Curve,
    first: usize,
    slope: f64,
    plan: ChirpRows,
    dense: Vec<C64>,
}

impl<'a> ShiftedRows<'a> {
    pub fn new(f: &'a SampledDensity<f64>, curve: Curve, m: usize) -> Result<Self> {
        let (first, last) = match (f.indices().first(), f.indices().last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(invalid("density has empty support")),
        };
        let grid = f.grid();
        let n = last - first + 1;
        let plan = ChirpRows::new(grid.node(first), grid.step(), n, 0.0, 1.0, m)?;
        let mut dense = vec![C64::zero(); n];
        for (i, _, v) in f.iter() {
            dense[i - first] = v;
        }
        let slope = curve.max_slope(grid.node(first), grid.node(last));
        Ok(Self { f, curve, first, slope, plan, dense })
    }

    pub fn len(&self) -> usize {
        self.plan.len_out()
    }

    pub fn is_empty(&self) -> bool {
        self.plan.len_out() == 0
    }

    /// `Ef(x₁₀ + k, x₂)` for `k < m`.
    pub fn row(&self, x2: f64, x1_start: f64) -> Result<Vec<C64>> {
        let grid = self.f.grid();
        let x1_end = x1_start + (self.len() - 1) as f64;
        let step = grid.step() * (x1_start.abs().max(x1_end.abs()) + x2.abs() * self.slope);
        if step > PHASE_STEP_LIMIT * (1.0 + 1e-12) {
            return Err(Error::GridTooCoarse { phase_step: step, limit: PHASE_STEP_LIMIT });
        }
        let coeffs: Vec<C64> = match self.curve {
            Curve::Parabola => {
                // x₁ξ_j + x₂ξ_j² is quadratic in j
                let (xi0, h) = (grid.node(self.first), grid.step());
                let a = x1_start * xi0 + x2 * xi0 * xi0;
                let b = (x1_start + 2.0 * x2 * xi0) * h;
                let phases = quadratic_cis(a, b, x2 * h * h, self.dense.len());
                self.dense.iter().zip(phases).map(|(&v, z)| v * z).collect()
            }
            Curve::CircleGraph => self
                .dense
                .iter()
                .enumerate()
                .map(|(j, &v)| {
                    if v.is_zero() {
                        v
                    } else {
                        let xi = grid.node(self.first + j);
                        v * cis(x1_start * xi + x2 * self.curve.phase(xi))
                    }
                })
                .collect(),
        };
        Ok(self.plan.evaluate(&coeffs))
    }
}

/// Terms between exact reseeds in [`quadratic_cis`].
const RESEED: usize = 64;

/// `cis(a + b·j + c·j²)` for `j < n`, by a multiplicative recurrence that is
/// reseeded exactly every [`RESEED`] terms.
fn quadratic_cis(a: f64, b: f64, c: f64, n: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(n);
    let turn = cis(2.0 * c);
    let (mut z, mut w) = (C64::zero(), C64::zero());
    for j in 0..n {
        if j % RESEED == 0 {
            let t = j as f64;
            z = cis(a + t * (b + c * t));
            w = cis(b + c * (2.0 * t + 1.0));
        }
        out.push(z);
        z *= w;
        w *= turn;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::extension_values;
    use crate::grid::FrequencyGrid;

    #[test]
    fn chirp_matches_direct_sum() {
        let (xi0, h, n) = (-0.7, 1e-3, 900);
        let (x0, dx, m) = (-40.0, 0.5, 161);
        let coeffs: Vec<C64> = (0..n).map(|j| C64::new((j as f64 * 0.01).cos(), (j as f64 * 0.003).sin())).collect();
        let plan = ChirpRows::new(xi0, h, n, x0, dx, m).unwrap();
        let fast = plan.evaluate(&coeffs);
        for k in (0..m).step_by(7) {
            let x = x0 + dx * k as f64;
            let direct: C64 = coeffs
                .iter()
                .enumerate()
                .map(|(j, &c)| c * cis(x * (xi0 + h * j as f64)) * h)
                .sum();
            assert!((fast[k] - direct).norm() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn extension_rows_match_kernel() {
        let g = FrequencyGrid::<f64>::unit(4000);
        let f = SampledDensity::from_fn(g, |xi| C64::new(1.0 - xi * xi, 0.5 * xi)).unwrap();
        for curve in [Curve::Parabola, Curve::CircleGraph] {
            let rows = ExtensionRows::new(&f, curve, -64.0, 1.0, 129, 32.0).unwrap();
            for &x2 in &[-32.0, 0.0, 17.0] {
                let fast = rows.row(x2);
                let pts: Vec<[f64; 2]> = (0..129).map(|k| [-64.0 + k as f64, x2]).collect();
                let direct = extension_values(&f, curve, &pts).unwrap();
                let err = fast.iter().zip(&direct).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                assert!(err < 1e-11, "{curve:?} x2={x2} err={err}");
            }
        }
    }

    #[test]
    fn shifted_rows_match_kernel() {
        let g = FrequencyGrid::<f64>::unit(3000);
        let f = SampledDensity::from_fn(g, |xi| C64::new(xi.cos(), xi * xi)).unwrap();
        for curve in [Curve::Parabola, Curve::CircleGraph] {
            let rows = ShiftedRows::new(&f, curve, 40).unwrap();
            for &(x2, x0) in &[(5.0, -30.5), (-40.0, 12.0)] {
                let fast = rows.row(x2, x0).unwrap();
                let pts: Vec<[f64; 2]> = (0..40).map(|k| [x0 + k as f64, x2]).collect();
                let direct = extension_values(&f, curve, &pts).unwrap();
                let err = fast.iter().zip(&direct).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                assert!(err < 1e-11, "{curve:?} err={err}");
            }
            assert!(rows.row(1e4, 0.0).is_err());
        }
    }

    #[test]
    fn quadratic_phases_match_direct() {
        let (a, b, c) = (3.7, -0.41, 2.3e-4);
        let fast = quadratic_cis(a, b, c, 5000);
        for (j, z) in fast.iter().enumerate() {
            let t = j as f64;
            let theta = a + b * t + c * t * t;
            // the reference phase itself carries |θ|·ε of rounding
            assert!((z - cis(theta)).norm() < 1e-12 + 1e-15 * theta.abs(), "j={j}");
        }
    }
}
