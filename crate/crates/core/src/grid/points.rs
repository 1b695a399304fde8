use std::io::Write;
use std::sync::Arc;

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::scalar::{is_finite, Real};

/// Finite point set inside the closed ball of radius `radius` (tolerance one unit).
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialPointSet<T> {
    radius: T,
    points: Vec<[T; 2]>,
    cell_volume: T,
}

impl<T: Real> SpatialPointSet<T> {
    pub fn new(radius: T, points: Vec<[T; 2]>, cell_volume: T) -> Result<Self> {
        if !(radius >= T::zero()) || !(cell_volume > T::zero()) {
            return Err(invalid("radius must be nonnegative and cell volume positive"));
        }
        let limit = radius + T::one();
        for p in &points {
            if !p[0].is_finite() || !p[1].is_finite() || p[0].hypot(p[1]) > limit {
                return Err(invalid(format!(
                    "point ({}, {}) outside the ball of radius {radius}",
                    p[0], p[1]
                )));
            }
        }
        Ok(Self { radius, points, cell_volume })
    }

    /// Point set whose radius is the largest point norm.
    pub fn enclosing(points: Vec<[T; 2]>, cell_volume: T) -> Result<Self> {
        let radius = points.iter().fold(T::zero(), |m, p| m.max(p[0].hypot(p[1])));
        Self::new(radius, points, cell_volume)
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn points(&self) -> &[[T; 2]] {
        &self.points
    }

    pub fn cell_volume(&self) -> T {
        self.cell_volume
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Complex values attached to a point set.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    points: Arc<SpatialPointSet<T>>,
    values: Vec<Complex<T>>,
}

impl<T: Real> Field<T> {
    pub fn new(points: Arc<SpatialPointSet<T>>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != points.len() {
            return Err(Error::RaggedGrid { expected: points.len(), found: values.len() });
        }
        if let Some(k) = values.iter().position(|v| !is_finite(v)) {
            return Err(invalid(format!("non-finite field value at point {k}")));
        }
        Ok(Self { points, values })
    }

    /// Field of moduli, stored as real parts.
    pub fn from_moduli(points: Arc<SpatialPointSet<T>>, moduli: Vec<T>) -> Result<Self> {
        Self::new(points, moduli.into_iter().map(|m| Complex::new(m, T::zero())).collect())
    }

    pub fn points(&self) -> &Arc<SpatialPointSet<T>> {
        &self.points
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn moduli(&self) -> Vec<T> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: Complex<T>) -> Self {
        Self { points: self.points.clone(), values: self.values.iter().map(|&v| v * c).collect() }
    }

    /// CSV with header `x1,x2,re,im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x1", "x2", "re", "im"])?;
        for (p, v) in self.points.points().iter().zip(&self.values) {
            w.write_record([sig(p[0]), sig(p[1]), sig(v.re), sig(v.im)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Values on a rectangular `x × t` grid, stored x-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductField<T> {
    x: Vec<T>,
    t: Vec<T>,
    values: Vec<Complex<T>>,
}

impl<T: Real> ProductField<T> {
    pub fn new(x: Vec<T>, t: Vec<T>, values: Vec<Complex<T>>) -> Result<Self> {
        let expected = x.len() * t.len();
        if values.len() != expected {
            return Err(Error::RaggedGrid { expected, found: values.len() });
        }
        Ok(Self { x, t, values })
    }

    /// One row of t-values per x-node; rows must share a length.
    pub fn from_rows(x: Vec<T>, t: Vec<T>, rows: Vec<Vec<Complex<T>>>) -> Result<Self> {
        if rows.len() != x.len() {
            return Err(Error::RaggedGrid { expected: x.len(), found: rows.len() });
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != t.len()) {
            return Err(Error::RaggedGrid { expected: t.len(), found: bad.len() });
        }
        Self::new(x, t, rows.concat())
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn t(&self) -> &[T] {
        &self.t
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn at(&self, ix: usize, it: usize) -> Complex<T> {
        self.values[ix * self.t.len() + it]
    }

    /// `sup_t |u(x, t)|` per x-node.
    pub fn sup_over_t(&self) -> Vec<T> {
        if self.t.is_empty() {
            return vec![T::zero(); self.x.len()];
        }
        self.values
            .chunks(self.t.len())
            .map(|row| row.iter().fold(T::zero(), |m, v| m.max(v.norm())))
            .collect()
    }

    /// CSV with header `x,t,re,im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "t", "re", "im"])?;
        for (ix, &x) in self.x.iter().enumerate() {
            for (it, &t) in self.t.iter().enumerate() {
                let v = self.at(ix, it);
                w.write_record([sig(x), sig(t), sig(v.re), sig(v.im)])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Decimal rendering with 15 significant digits.
pub(crate) fn sig<T: Real>(x: T) -> String {
    format!("{:.14e}", x.as_f64())
}
