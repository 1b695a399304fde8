use super::{Field, ProductField, SampledDensity, WeightSet};
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

const CENTER_MATCH_TOLERANCE: f64 = 1e-9;

fn check_exponent<T: Real>(p: T) -> Result<()> {
    if p.is_nan() || p < T::one() {
        return Err(Error::InvalidExponent(p.as_f64()));
    }
    Ok(())
}

fn lp_sum<T: Real>(moduli: impl Iterator<Item = T>, p: T, cell: T) -> T {
    if p.is_infinite() {
        return moduli.fold(T::zero(), T::max);
    }
    if p == T::lit(2.0) {
        return (moduli.map(|m| m * m).sum::<T>() * cell).sqrt();
    }
    (moduli.map(|m| m.powf(p)).sum::<T>() * cell).powf(p.recip())
}

/// `(Σ |value|^p · cell_volume)^{1/p}`, or the max modulus for `p = ∞`.
///
/// With a weight set the field's points must coincide with its centers.
pub fn norm<T: Real>(field: &Field<T>, p: T, weight: Option<&WeightSet>) -> Result<T> {
    if field.is_empty() {
        return Err(Error::EmptyDomain);
    }
    check_exponent(p)?;
    if let Some(w) = weight {
        let pts = field.points().points();
        let matches = pts.len() == w.len()
            && pts.iter().zip(w.centers()).all(|(a, b)| {
                (a[0].as_f64() - b[0]).abs() <= CENTER_MATCH_TOLERANCE * (1.0 + b[0].abs())
                    && (a[1].as_f64() - b[1]).abs() <= CENTER_MATCH_TOLERANCE * (1.0 + b[1].abs())
            });
        if !matches {
            return Err(invalid("field points do not coincide with the weight-set centers"));
        }
    }
    let cell = field.points().cell_volume();
    Ok(lp_sum(field.values().iter().map(|v| v.norm()), p, cell))
}

/// `(Σ_x (sup_t |u(x,t)|)^q · dx)^{1/q}`.
pub fn mixed_norm<T: Real>(field: &ProductField<T>, dx: T, q: T) -> Result<T> {
    if field.x().is_empty() || field.t().is_empty() {
        return Err(Error::EmptyDomain);
    }
    check_exponent(q)?;
    if !(dx > T::zero()) {
        return Err(invalid("x spacing must be positive"));
    }
    Ok(lp_sum(field.sup_over_t().into_iter(), q, dx))
}

/// `(Σ_nodes |f|^p · h)^{1/p}` over the frequency grid.
pub fn density_lp_norm<T: Real>(f: &SampledDensity<T>, p: T) -> Result<T> {
    check_exponent(p)?;
    if f.is_zero() {
        return Ok(T::zero());
    }
    Ok(lp_sum(f.values().iter().map(|v| v.norm()), p, f.grid().step()))
}
