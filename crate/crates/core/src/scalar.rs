use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, NumAssign, NumCast};

/// Floating-point scalar used by the grid, extension and broad kernels.
pub trait Real:
    Float + FloatConst + NumAssign + Sum + Send + Sync + Debug + Display + Default + 'static
{
    /// Converts an `f64` literal; every literal used by the library is representable.
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("literal representable in scalar type")
    }

    fn from_usize(n: usize) -> Self {
        <Self as NumCast>::from(n).expect("count representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `e^{iθ}`
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    let (s, c) = theta.sin_cos();
    Complex::new(c, s)
}

#[inline]
pub(crate) fn is_finite<T: Real>(z: &Complex<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
