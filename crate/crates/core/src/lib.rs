//! Numerical laboratory for Fourier extension estimates on curves.
//!
//! The crate evaluates the extension operator of a density on a curved arc,
//! splits it into caps and wave packets, builds fractal weight sets and line
//! configurations, and runs the experiments that measure how the operator's
//! norms scale. The numerical core is generic over [`Real`]; the aliases at
//! the crate root fix the scalar to `f64`.

pub mod broad;
pub mod error;
pub mod experiments;
pub mod extension;
pub mod fractal;
pub mod grid;
pub mod incidence;
pub mod scalar;
pub mod verify;
pub mod wavepackets;

pub use error::{Error, Result};
pub use extension::Curve;
pub use grid::WeightSet;
pub use scalar::Real;

pub use num_complex::Complex;

pub type C64 = num_complex::Complex<f64>;
pub type FrequencyGrid = grid::FrequencyGrid<f64>;
pub type SampledDensity = grid::SampledDensity<f64>;
pub type SpatialPointSet = grid::SpatialPointSet<f64>;
pub type Field = grid::Field<f64>;
pub type ProductField = grid::ProductField<f64>;
pub type Cap = extension::Cap<f64>;
pub type CapDecomposition = broad::CapDecomposition<f64>;

pub type FrequencyGrid32 = grid::FrequencyGrid<f32>;
pub type SampledDensity32 = grid::SampledDensity<f32>;
pub type SpatialPointSet32 = grid::SpatialPointSet<f32>;
pub type Field32 = grid::Field<f32>;
