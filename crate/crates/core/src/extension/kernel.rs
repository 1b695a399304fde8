use num_complex::Complex;
use num_traits::Zero;

use super::Curve;
use crate::grid::{FrequencyGrid, SampledDensity};
use crate::scalar::{cis, Real};

/// Nodes between exact phase evaluations in the parabola recurrence.
const REFRESH: usize = 32;

#[derive(Clone, Copy, Debug)]
struct Run {
    first_index: usize,
    offset: usize,
    len: usize,
}

/// A density's support split into maximal runs of consecutive nodes.
#[derive(Debug)]
pub struct SupportRuns<'a, T> {
    grid: FrequencyGrid<T>,
    values: &'a [Complex<T>],
    runs: Vec<Run>,
}

impl<'a, T: Real> SupportRuns<'a, T> {
    pub fn new(f: &'a SampledDensity<T>) -> Self {
        let idx = f.indices();
        let mut runs = Vec::new();
        let mut k = 0;
        while k < idx.len() {
            let start = k;
            while k + 1 < idx.len() && idx[k + 1] == idx[k] + 1 {
                k += 1;
            }
            runs.push(Run { first_index: idx[start], offset: start, len: k + 1 - start });
            k += 1;
        }
        Self { grid: *f.grid(), values: f.values(), runs }
    }

    pub fn evaluate(&self, curve: Curve, x1: T, x2: T) -> Complex<T> {
        let sum = match curve {
            Curve::Parabola => self.parabola_sum(x1, x2),
            _ => self.direct_sum(curve, x1, x2),
        };
        sum * self.grid.step()
    }

    fn direct_sum(&self, curve: Curve, x1: T, x2: T) -> Complex<T> {
        let mut acc = Complex::zero();
        for run in &self.runs {
            let vals = &self.values[run.offset..run.offset + run.len];
            for (j, &v) in vals.iter().enumerate() {
                let xi = self.grid.node(run.first_index + j);
                acc += v * cis(x1 * xi + x2 * curve.phase(xi));
            }
        }
        acc
    }

    /// Along a run the phase `x₁ξ + x₂ξ²` has constant second difference
    /// `2x₂h²`, so consecutive exponentials follow by two complex products.
    fn parabola_sum(&self, x1: T, x2: T) -> Complex<T> {
        let h = self.grid.step();
        let two = T::lit(2.0);
        let curl = cis(two * x2 * h * h);
        let mut acc = Complex::zero();
        for run in &self.runs {
            let vals = &self.values[run.offset..run.offset + run.len];
            for (block, chunk) in vals.chunks(REFRESH).enumerate() {
                let xi = self.grid.node(run.first_index + block * REFRESH);
                let mut z = cis(x1 * xi + x2 * xi * xi);
                let mut ratio = cis(x1 * h + x2 * h * (two * xi + h));
                let mut part = Complex::zero();
                for &v in chunk {
                    part += v * z;
                    z *= ratio;
                    ratio *= curl;
                }
                acc += part;
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FrequencyGrid;

    #[test]
    fn recurrence_matches_direct_phase() {
        let g = FrequencyGrid::<f64>::unit(20_000);
        let f = SampledDensity::from_fn(g, |xi| {
            if (xi * 7.0).sin() > -0.3 {
                Complex::new(xi.cos(), xi * xi)
            } else {
                Complex::zero()
            }
        })
        .unwrap();
        let runs = SupportRuns::new(&f);
        for &(x1, x2) in &[(0.0, 0.0), (123.4, -56.7), (-900.0, 400.0), (10.0, 990.0)] {
            let fast = runs.evaluate(Curve::Parabola, x1, x2);
            let mut slow = Complex::zero();
            for (_, xi, v) in f.iter() {
                slow += v * cis(x1 * xi + x2 * xi * xi);
            }
            slow *= g.step();
            assert!((fast - slow).norm() < 1e-12, "{x1} {x2}: {fast} vs {slow}");
        }
    }

    #[test]
    fn runs_cover_support() {
        let g = FrequencyGrid::<f64>::unit(10);
        let one = Complex::new(1.0, 0.0);
        let f = SampledDensity::from_sparse(g, vec![(1, one), (2, one), (5, one), (7, one), (8, one), (9, one)]).unwrap();
        let r = SupportRuns::new(&f);
        let lens: Vec<_> = r.runs.iter().map(|r| (r.first_index, r.len)).collect();
        assert_eq!(lens, vec![(1, 2), (5, 1), (7, 3)]);
    }
}
