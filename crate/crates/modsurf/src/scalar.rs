//! Scalar abstraction for the geometric core.
//!
//! Everything that measures lengths, areas, and energies is generic over a
//! floating-point scalar so the same code runs in `f32` and `f64`. The crate
//! root exports concrete aliases; `f64` is the default used by the CLI.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar usable for mesh geometry and modulus solves.
///
/// A blanket impl covers `f32` and `f64` (and anything else satisfying the
/// bounds). Algorithms derive their numeric guards from `Float::epsilon`, so
/// tolerances scale with the precision of the chosen scalar.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Default + 'static
{
    /// Shorthand for converting an `f64` literal into the scalar type.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal converts to scalar")
    }

    /// Margin used when a quantity must exceed a threshold after a chain of
    /// rounding (and weight-quantization) losses, e.g. path-length
    /// accumulation over up to ~10^4 edges.
    fn accumulation_margin() -> Self {
        Self::epsilon() * Self::of(2.0e5)
    }

    /// Dyadic quantization step for potential arithmetic: a power of two
    /// small enough that typical weights keep most of the mantissa, large
    /// enough that sums of grid multiples up to 4 stay exactly
    /// representable (`4/quantum < 2^mantissa`).
    fn quantum() -> Self {
        Self::epsilon() * Self::of(4.0)
    }
}

impl<T> Scalar for T where
    T: Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Default + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blanket_impl_covers_both_widths() {
        assert_eq!(<f64 as Scalar>::of(1.5), 1.5f64);
        assert_eq!(<f32 as Scalar>::of(1.5), 1.5f32);
        assert!(f64::accumulation_margin() < 1.0e-10);
        assert!(f32::accumulation_margin() < 1.0e-1);
    }

    #[test]
    fn quantum_grid_sums_are_exact() {
        // Grid multiples with sum ≤ 4 add without rounding.
        let q = f64::quantum();
        assert_eq!(q.log2().fract(), 0.0);
        let (ka, kb) = (987_654_321_012_345.0_f64, 13.0_f64);
        let (a, b) = (ka * q, kb * q);
        assert!(a + b <= 4.0);
        assert_eq!((a + b) / q, ka + kb);
    }
}
