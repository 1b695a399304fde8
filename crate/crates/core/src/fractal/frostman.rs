use std::io::Write;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use super::OPEN_BALL;
use crate::error::{invalid, precondition, Result};
use crate::grid::sig;
use crate::scalar::cis;
use crate::wavepackets::bumps::mollifier;

type C64 = Complex<f64>;

/// Exact exponentials between recurrence steps in [`Axis::transform`].
const REFRESH: usize = 64;

/// Complex masses at `start + i·step`.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub weights: Vec<C64>,
}

impl Axis {
    fn node(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    fn total_variation(&self) -> f64 {
        self.weights.iter().map(|w| w.norm()).sum()
    }

    /// `Σ_i w_i e^{-iωx_i}`.
    fn transform(&self, omega: f64) -> C64 {
        let rho = cis(-omega * self.step);
        let mut acc = C64::zero();
        for (block, chunk) in self.weights.chunks(REFRESH).enumerate() {
            let mut z = cis(-omega * self.node(block * REFRESH));
            for &w in chunk {
                acc += w * z;
                z *= rho;
            }
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Representation {
    /// Product of two axis measures.
    Separable { x1: Axis, x2: Axis },
    Atoms { points: Vec<[f64; 2]>, masses: Vec<C64> },
}

/// Complex measure on `[0, 1]²` normalized to total variation 1.
#[derive(Clone, Debug, PartialEq)]
pub struct FrostmanMeasure {
    repr: Representation,
    r_min: f64,
}

impl FrostmanMeasure {
    pub fn separable(mut x1: Axis, mut x2: Axis, r_min: f64) -> Result<Self> {
        for axis in [&mut x1, &mut x2] {
            let tv = axis.total_variation();
            if !(tv > 0.0) || !(axis.step > 0.0) {
                return Err(invalid("axis measure must be nonzero with positive step"));
            }
            axis.weights.iter_mut().for_each(|w| *w /= tv);
        }
        Self::checked(Representation::Separable { x1, x2 }, r_min)
    }

    pub fn atoms(points: Vec<[f64; 2]>, masses: Vec<C64>, r_min: f64) -> Result<Self> {
        if points.len() != masses.len() || points.is_empty() {
            return Err(invalid("atoms need one mass per point"));
        }
        let tv: f64 = masses.iter().map(|m| m.norm()).sum();
        if !(tv > 0.0) {
            return Err(invalid("atomic measure must be nonzero"));
        }
        let masses = masses.into_iter().map(|m| m / tv).collect();
        Self::checked(Representation::Atoms { points, masses }, r_min)
    }

    fn checked(repr: Representation, r_min: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_min <= 1.0) {
            return Err(invalid(format!("r_min must lie in (0, 1], got {r_min}")));
        }
        let measure = Self { repr, r_min };
        let outside = measure
            .support()
            .into_iter()
            .any(|(p, _)| !(-1e-12..=1.0 + 1e-12).contains(&p[0]) || !(-1e-12..=1.0 + 1e-12).contains(&p[1]));
        if outside {
            return Err(invalid("measure must be supported in [0, 1]²"));
        }
        Ok(measure)
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    /// Atom positions with complex masses.
    pub fn support(&self) -> Vec<([f64; 2], C64)> {
        match &self.repr {
            Representation::Separable { x1, x2 } => {
                let mut out = Vec::with_capacity(x1.weights.len() * x2.weights.len());
                for (j, &b) in x2.weights.iter().enumerate() {
                    for (i, &a) in x1.weights.iter().enumerate() {
                        out.push(([x1.node(i), x2.node(j)], a * b));
                    }
                }
                out
            }
            Representation::Atoms { points, masses } => points.iter().copied().zip(masses.iter().copied()).collect(),
        }
    }

    pub fn total_variation(&self) -> f64 {
        match &self.repr {
            Representation::Separable { x1, x2 } => x1.total_variation() * x2.total_variation(),
            Representation::Atoms { masses, .. } => masses.iter().map(|m| m.norm()).sum(),
        }
    }

    /// `μ̂(ξ) = ∫ e^{-iξ·x} dμ(x)`.
    pub fn fourier(&self, xi: [f64; 2]) -> C64 {
        match &self.repr {
            Representation::Separable { x1, x2 } => x1.transform(xi[0]) * x2.transform(xi[1]),
            Representation::Atoms { points, masses } => points
                .iter()
                .zip(masses)
                .map(|(p, &m)| m * cis(-(xi[0] * p[0] + xi[1] * p[1])))
                .sum(),
        }
    }

    /// Rows `x1,x2,re,im,mass` with `mass = |μ({x})|`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x1", "x2", "re", "im", "mass"])?;
        for (p, m) in self.support() {
            w.write_record([sig(p[0]), sig(p[1]), sig(m.re), sig(m.im), sig(m.norm())])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The Knapp measure `R e^{iRx₁} φ(2x₁ - 1) φ(R(x₂ - 1/2))` on `[0, 1]²`,
/// with `10R` cells in `x₁` and 20 cells across its `2/R`-thick support.
pub fn frostman_knapp(radius: f64) -> Result<FrostmanMeasure> {
    let n1 = (10.0 * radius).ceil() as usize;
    frostman_knapp_grid(radius, n1, 20)
}

/// [`frostman_knapp`] with explicit cell counts; `x₂` cells must not exceed
/// `(10R)⁻¹`.
pub fn frostman_knapp_grid(radius: f64, x1_cells: usize, x2_cells: usize) -> Result<FrostmanMeasure> {
    if !(radius >= 4.0) {
        return Err(invalid(format!("Knapp measure needs R >= 4, got {radius}")));
    }
    let h1 = 1.0 / x1_cells.max(1) as f64;
    let h2 = 2.0 / (radius * x2_cells.max(1) as f64);
    if h2 > 1.0 / (10.0 * radius) * (1.0 + 1e-12) {
        return Err(precondition(format!("x2 resolution {h2:.3e} coarser than 1/(10R)")));
    }
    if h1 * radius > 0.1 * (1.0 + 1e-12) {
        return Err(precondition(format!("x1 resolution {h1:.3e} coarser than 1/(10R)")));
    }
    let x1 = Axis {
        start: 0.5 * h1,
        step: h1,
        weights: (0..x1_cells)
            .map(|i| {
                let x = (i as f64 + 0.5) * h1;
                cis(radius * x) * (mollifier(2.0 * x - 1.0) * h1)
            })
            .collect(),
    };
    let lo = 0.5 - 1.0 / radius;
    let x2 = Axis {
        start: lo + 0.5 * h2,
        step: h2,
        weights: (0..x2_cells)
            .map(|j| {
                let x = lo + (j as f64 + 0.5) * h2;
                C64::new(radius * mollifier(radius * (x - 0.5)) * h2, 0.0)
            })
            .collect(),
    };
    FrostmanMeasure::separable(x1, x2, h1.min(h2))
}

/// Uniform probability measure on `[0, 1] × {0}` with `cells` atoms.
pub fn frostman_segment(cells: usize) -> Result<FrostmanMeasure> {
    let h = 1.0 / cells.max(1) as f64;
    let x1 = Axis { start: 0.5 * h, step: h, weights: vec![C64::new(h, 0.0); cells.max(1)] };
    let x2 = Axis { start: 0.0, step: 1.0, weights: vec![C64::new(1.0, 0.0)] };
    FrostmanMeasure::separable(x1, x2, h)
}

fn frostman_radii(r_min: f64) -> Vec<f64> {
    let mut radii = Vec::new();
    let mut r = r_min;
    while r < OPEN_BALL {
        radii.push(r);
        r *= 2.0;
    }
    radii.push(1.0);
    radii
}

/// `C_F = max |μ|(B(c, r)) / r` over support centers `c` and dyadic radii
/// from `r_min` to 1, with open balls.
pub fn check_frostman(mu: &FrostmanMeasure) -> f64 {
    let radii = frostman_radii(mu.r_min);
    match &mu.repr {
        Representation::Separable { x1, x2 } => separable_constant(x1, x2, &radii),
        Representation::Atoms { points, masses } => atom_constant(points, masses, &radii),
    }
}

fn separable_constant(x1: &Axis, x2: &Axis, radii: &[f64]) -> f64 {
    let mut prefix = vec![0.0];
    for w in &x1.weights {
        prefix.push(prefix.last().unwrap() + w.norm());
    }
    let n1 = x1.weights.len();
    // open interval (c - a, c + a) in node indices
    let interval_mass = |c: f64, a: f64| -> f64 {
        let lo = ((c - a * OPEN_BALL - x1.start) / x1.step).ceil().max(0.0) as usize;
        let hi_f = ((c + a * OPEN_BALL - x1.start) / x1.step).floor();
        if hi_f < 0.0 {
            return 0.0;
        }
        let hi = (hi_f as usize).min(n1 - 1);
        if lo > hi {
            0.0
        } else {
            prefix[hi + 1] - prefix[lo]
        }
    };
    let centers: Vec<(usize, usize)> =
        (0..x2.weights.len()).flat_map(|j| (0..n1).map(move |i| (i, j))).collect();
    radii
        .iter()
        .map(|&r| {
            centers
                .par_iter()
                .map(|&(i, j)| {
                    let (c1, c2) = (x1.node(i), x2.node(j));
                    let mass: f64 = x2
                        .weights
                        .iter()
                        .enumerate()
                        .map(|(k, w)| {
                            let dy = (x2.node(k) - c2).abs();
                            if dy >= r * OPEN_BALL {
                                0.0
                            } else {
                                w.norm() * interval_mass(c1, (r * r - dy * dy).sqrt())
                            }
                        })
                        .sum();
                    mass / r
                })
                .reduce(|| 0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

fn atom_constant(points: &[[f64; 2]], masses: &[C64], radii: &[f64]) -> f64 {
    let tv: Vec<f64> = masses.iter().map(|m| m.norm()).collect();
    let mut best = 0.0f64;
    for &r in radii {
        // total mass is one
        if 1.0 / r <= best {
            continue;
        }
        let reach = r * OPEN_BALL;
        let worst = points
            .par_iter()
            .map(|c| {
                points
                    .iter()
                    .zip(&tv)
                    .filter(|(p, _)| (p[0] - c[0]).hypot(p[1] - c[1]) < reach)
                    .map(|(_, m)| m)
                    .sum::<f64>()
            })
            .reduce(|| 0.0, f64::max);
        best = best.max(worst / r);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knapp_is_normalized_and_thin() {
        let mu = frostman_knapp(64.0).unwrap();
        assert!((mu.total_variation() - 1.0).abs() < 1e-9);
        let support = mu.support();
        let (lo, hi) = support
            .iter()
            .filter(|(_, m)| m.norm() > 0.0)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (p, _)| (lo.min(p[1]), hi.max(p[1])));
        let thickness = hi - lo;
        assert!((thickness - 2.0 / 64.0).abs() < 0.2 * 2.0 / 64.0, "thickness={thickness}");
    }

    #[test]
    fn knapp_passes_frostman() {
        let c = check_frostman(&frostman_knapp(64.0).unwrap());
        assert!(c <= 4.0, "C_F={c}");
    }

    #[test]
    fn segment_constant_in_one_two() {
        let c = check_frostman(&frostman_segment(512).unwrap());
        assert!((1.0..=2.0).contains(&c), "C_F={c}");
    }

    #[test]
    fn point_mass_is_flagged() {
        let mu = FrostmanMeasure::atoms(vec![[0.5, 0.5]], vec![C64::new(1.0, 0.0)], 1e-3).unwrap();
        assert!((check_frostman(&mu) - 1e3).abs() < 1e-9);
    }

    #[test]
    fn coarse_knapp_grid_is_rejected() {
        assert!(frostman_knapp_grid(64.0, 640, 10).is_err());
    }

    #[test]
    fn separable_and_atomic_transforms_agree() {
        let mu = frostman_knapp(16.0).unwrap();
        let atoms: (Vec<_>, Vec<_>) = mu.support().into_iter().unzip();
        let flat = FrostmanMeasure::atoms(atoms.0, atoms.1, mu.r_min()).unwrap();
        for xi in [[3.0, -7.0], [16.0, 0.5], [-11.0, 12.0]] {
            assert!((mu.fourier(xi) - flat.fourier(xi)).norm() < 1e-12);
        }
    }
}
