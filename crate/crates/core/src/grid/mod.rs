//! Frequency grids, sampled densities, spatial point sets, fields and norms.
//!
//! Every integral in the crate is a midpoint sum on a [`FrequencyGrid`]. A
//! [`SampledDensity`] stores only its nonzero nodes, so sparse densities such
//! as unions of tiny intervals can live on very fine grids.

mod norms;
mod points;
mod weight_set;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{invalid, Error, Result};
use crate::scalar::{is_finite, Real};

pub use norms::{density_lp_norm, mixed_norm, norm};
pub use points::{Field, ProductField, SpatialPointSet};
pub(crate) use points::sig;
pub use weight_set::{WeightSet, WeightSidecar};

const TILING_TOLERANCE: f64 = 1e-9;

/// Midpoint grid tiling `[lo, hi]` with cells of width `step`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyGrid<T> {
    lo: T,
    step: T,
    len: usize,
}

impl<T: Real> FrequencyGrid<T> {
    /// Grid on `[lo, hi]`; `(hi - lo) / step` must be an integer within `1e-9`.
    pub fn new(lo: T, hi: T, step: T) -> Result<Self> {
        if !(step > T::zero()) || !lo.is_finite() || !hi.is_finite() || !(hi > lo) {
            return Err(invalid(format!("bad grid [{lo}, {hi}] with step {step}")));
        }
        let cells = ((hi - lo) / step).as_f64();
        let len = cells.round();
        if (cells - len).abs() > TILING_TOLERANCE * len.max(1.0) || len < 1.0 {
            return Err(invalid(format!(
                "step {step} does not tile [{lo}, {hi}] ({cells} cells)"
            )));
        }
        Ok(Self { lo, step, len: len as usize })
    }

    /// Grid of `len` equal cells on `[lo, hi]`.
    pub fn with_len(lo: T, hi: T, len: usize) -> Result<Self> {
        if len == 0 || !(hi > lo) {
            return Err(invalid("grid needs at least one cell and hi > lo"));
        }
        Ok(Self { lo, step: (hi - lo) / T::from_usize(len), len })
    }

    /// `len` cells on `[-1, 1]`.
    pub fn unit(len: usize) -> Self {
        Self::with_len(-T::one(), T::one(), len).expect("nonempty unit grid")
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.lo + self.step * T::from_usize(self.len)
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn node(&self, i: usize) -> T {
        self.lo + (T::from_usize(i) + T::lit(0.5)) * self.step
    }

    /// Index of the cell containing `x`, if any.
    pub fn cell_of(&self, x: T) -> Option<usize> {
        let u = ((x - self.lo) / self.step).floor();
        if u < T::zero() {
            return None;
        }
        let i = u.to_usize()?;
        (i < self.len).then_some(i)
    }
}

/// Complex density on a frequency grid, stored by its nonzero nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledDensity<T> {
    grid: FrequencyGrid<T>,
    indices: Vec<usize>,
    values: Vec<Complex<T>>,
}

impl<T: Real> SampledDensity<T> {
    pub fn zeros(grid: FrequencyGrid<T>) -> Self {
        Self { grid, indices: Vec::new(), values: Vec::new() }
    }

    /// Samples `f` at every node, keeping the nonzero values.
    pub fn from_fn(grid: FrequencyGrid<T>, mut f: impl FnMut(T) -> Complex<T>) -> Result<Self> {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..grid.len() {
            let v = f(grid.node(i));
            if !is_finite(&v) {
                return Err(invalid(format!("non-finite density value at node {i}")));
            }
            if !v.is_zero() {
                indices.push(i);
                values.push(v);
            }
        }
        Ok(Self { grid, indices, values })
    }

    /// Indicator of the nodes where `keep` holds.
    pub fn indicator(grid: FrequencyGrid<T>, mut keep: impl FnMut(T) -> bool) -> Self {
        Self::from_fn(grid, |xi| if keep(xi) { Complex::one() } else { Complex::zero() })
            .expect("indicator values are finite")
    }

    pub fn from_dense(grid: FrequencyGrid<T>, dense: &[Complex<T>]) -> Result<Self> {
        if dense.len() != grid.len() {
            return Err(Error::RaggedGrid { expected: grid.len(), found: dense.len() });
        }
        Self::from_sparse(grid, dense.iter().copied().enumerate().collect())
    }

    /// Builds from strictly increasing `(index, value)` pairs.
    pub fn from_sparse(grid: FrequencyGrid<T>, entries: Vec<(usize, Complex<T>)>) -> Result<Self> {
        let mut indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            if i >= grid.len() {
                return Err(invalid(format!("node {i} outside grid of {} cells", grid.len())));
            }
            if indices.last().is_some_and(|&last| last >= i) {
                return Err(invalid("sparse indices must be strictly increasing"));
            }
            if !is_finite(&v) {
                return Err(invalid(format!("non-finite density value at node {i}")));
            }
            if !v.is_zero() {
                indices.push(i);
                values.push(v);
            }
        }
        Ok(Self { grid, indices, values })
    }

    pub fn grid(&self) -> &FrequencyGrid<T> {
        &self.grid
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn support_len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    /// `(node index, ξ, value)` over the support in index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, T, Complex<T>)> + '_ {
        self.indices
            .iter()
            .zip(&self.values)
            .map(move |(&i, &v)| (i, self.grid.node(i), v))
    }

    pub fn value_at(&self, index: usize) -> Complex<T> {
        match self.indices.binary_search(&index) {
            Ok(k) => self.values[k],
            Err(_) => Complex::zero(),
        }
    }

    /// Smallest and largest support node.
    pub fn support_range(&self) -> Option<(T, T)> {
        let first = *self.indices.first()?;
        let last = *self.indices.last()?;
        Some((self.grid.node(first), self.grid.node(last)))
    }

    pub fn to_dense(&self) -> Vec<Complex<T>> {
        let mut dense = vec![Complex::zero(); self.grid.len()];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            dense[i] = v;
        }
        dense
    }

    pub fn scaled(&self, c: Complex<T>) -> Self {
        if c.is_zero() {
            return Self::zeros(self.grid);
        }
        Self {
            grid: self.grid,
            indices: self.indices.clone(),
            values: self.values.iter().map(|&v| v * c).collect(),
        }
    }

    /// Pointwise product with `g(ξ)` on the support.
    pub fn modulated(&self, mut g: impl FnMut(T) -> Complex<T>) -> Self {
        let entries = self.iter().map(|(i, xi, v)| (i, v * g(xi))).collect();
        Self::from_sparse(self.grid, entries).expect("support stays sorted")
    }

    /// `f·1_S` where `S` is the set of nodes accepted by `keep`.
    pub fn restricted(&self, mut keep: impl FnMut(usize, T) -> bool) -> Self {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (i, xi, v) in self.iter() {
            if keep(i, xi) {
                indices.push(i);
                values.push(v);
            }
        }
        Self { grid: self.grid, indices, values }
    }

    /// Sum of two densities on the same grid.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(invalid("densities live on different grids"));
        }
        let (mut a, mut b) = (0, 0);
        let mut entries = Vec::with_capacity(self.indices.len() + other.indices.len());
        while a < self.indices.len() || b < other.indices.len() {
            let ia = self.indices.get(a).copied().unwrap_or(usize::MAX);
            let ib = other.indices.get(b).copied().unwrap_or(usize::MAX);
            if ia == ib {
                entries.push((ia, self.values[a] + other.values[b]));
                a += 1;
                b += 1;
            } else if ia < ib {
                entries.push((ia, self.values[a]));
                a += 1;
            } else {
                entries.push((ib, other.values[b]));
                b += 1;
            }
        }
        Self::from_sparse(self.grid, entries)
    }

    pub fn l1_norm(&self) -> T {
        self.values.iter().map(|v| v.norm()).sum::<T>() * self.grid.step()
    }

    pub fn l2_norm(&self) -> T {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<T>() * self.grid.step()).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_nodes_are_midpoints() {
        let g = FrequencyGrid::<f64>::new(-1.0, 1.0, 0.5).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g.node(0), -0.75);
        assert_eq!(g.node(3), 0.75);
        assert_eq!(g.hi(), 1.0);
    }

    #[test]
    fn grid_rejects_non_tiling_step() {
        assert!(FrequencyGrid::<f64>::new(-1.0, 1.0, 0.3).is_err());
        assert!(FrequencyGrid::<f64>::new(-1.0, 1.0, 0.0).is_err());
        assert!(FrequencyGrid::<f64>::new(1.0, -1.0, 0.1).is_err());
    }

    #[test]
    fn cell_lookup() {
        let g = FrequencyGrid::<f64>::unit(8);
        assert_eq!(g.cell_of(-1.0), Some(0));
        assert_eq!(g.cell_of(0.1), Some(4));
        assert_eq!(g.cell_of(1.5), None);
        assert_eq!(g.cell_of(-1.5), None);
    }

    #[test]
    fn sparse_storage_drops_zeros() {
        let g = FrequencyGrid::<f64>::unit(10);
        let f = SampledDensity::indicator(g, |xi| xi > 0.0);
        assert_eq!(f.support_len(), 5);
        assert_eq!(f.value_at(7), Complex::one());
        assert_eq!(f.value_at(2), Complex::zero());
    }

    #[test]
    fn sparse_rejects_unsorted_and_nonfinite() {
        let g = FrequencyGrid::<f64>::unit(10);
        let one = Complex::new(1.0, 0.0);
        assert!(SampledDensity::from_sparse(g, vec![(3, one), (2, one)]).is_err());
        assert!(SampledDensity::from_sparse(g, vec![(3, Complex::new(f64::NAN, 0.0))]).is_err());
        assert!(SampledDensity::from_sparse(g, vec![(10, one)]).is_err());
    }

    #[test]
    fn add_merges_supports() {
        let g = FrequencyGrid::<f64>::unit(6);
        let a = SampledDensity::indicator(g, |xi| xi < 0.0);
        let b = SampledDensity::indicator(g, |xi| xi > -0.5);
        let s = a.add(&b).unwrap();
        assert_eq!(s.support_len(), 6);
        assert_eq!(s.value_at(2), Complex::new(2.0, 0.0));
    }
}
