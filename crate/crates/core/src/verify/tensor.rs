//! Dense row-major tensors over a selectable float width.
//!
//! All network math runs on [`Tensor`] (64-bit, the default precision);
//! [`Tensor32`] provides the 32-bit variant for storage-sensitive uses.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Scalar element a tensor can hold: f64 (default) or f32.
pub trait Element:
    Copy
    + PartialEq
    + PartialOrd
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + 'static
{
    const ZERO: Self;
    const ONE: Self;
    /// Tag stored in checkpoints.
    const DTYPE: &'static str;
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn maximum(self, other: Self) -> Self;
    fn is_finite(self) -> bool;
}

macro_rules! impl_element {
    ($ty:ty, $tag:literal) => {
        impl Element for $ty {
            const ZERO: Self = 0.0;
            const ONE: Self = 1.0;
            const DTYPE: &'static str = $tag;
            fn from_f64(v: f64) -> Self {
                v as $ty
            }
            fn to_f64(self) -> f64 {
                self as f64
            }
            fn exp(self) -> Self {
                self.exp()
            }
            fn ln(self) -> Self {
                self.ln()
            }
            fn sqrt(self) -> Self {
                self.sqrt()
            }
            fn abs(self) -> Self {
                self.abs()
            }
            fn maximum(self, other: Self) -> Self {
                if other > self {
                    other
                } else {
                    self
                }
            }
            fn is_finite(self) -> bool {
                <$ty>::is_finite(self)
            }
        }
    };
}

impl_element!(f64, "f64");
impl_element!(f32, "f32");

/// Row-major dense tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorOf<E> {
    shape: Vec<usize>,
    data: Vec<E>,
}

/// The workbench default: 64-bit elements.
pub type Tensor = TensorOf<f64>;
/// 32-bit variant.
pub type Tensor32 = TensorOf<f32>;

impl<E: Element> TensorOf<E> {
    /// Panics unless `data.len() == product(shape)`.
    pub fn new(shape: Vec<usize>, data: Vec<E>) -> Self {
        let expected: usize = shape.iter().product();
        assert_eq!(
            data.len(),
            expected,
            "tensor data length {} does not match shape {:?}",
            data.len(),
            shape
        );
        TensorOf { shape, data }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        TensorOf { shape, data: vec![E::ZERO; len] }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[E] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [E] {
        &mut self.data
    }

    /// Reinterprets the buffer under a new shape of equal volume.
    pub fn reshaped(mut self, shape: Vec<usize>) -> Self {
        let expected: usize = shape.iter().product();
        assert_eq!(self.data.len(), expected, "reshape volume mismatch");
        self.shape = shape;
        self
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Converts element width.
    pub fn cast<F: Element>(&self) -> TensorOf<F> {
        TensorOf {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| F::from_f64(v.to_f64())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volume_must_match_shape() {
        let t = Tensor::new(vec![2, 3], vec![0.0; 6]);
        assert_eq!(t.shape(), &[2, 3]);
        assert_eq!(t.len(), 6);
    }

    #[test]
    #[should_panic(expected = "does not match shape")]
    fn wrong_volume_panics() {
        let _ = Tensor::new(vec![2, 3], vec![0.0; 5]);
    }

    #[test]
    fn reshape_preserves_data() {
        let t = Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).reshaped(vec![4]);
        assert_eq!(t.shape(), &[4]);
        assert_eq!(t.data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn cast_round_trips_f32_exactly_representable_values() {
        let t = Tensor::new(vec![3], vec![0.5, -2.0, 8.25]);
        let small: Tensor32 = t.cast();
        assert_eq!(small.data(), &[0.5f32, -2.0, 8.25]);
        let back: Tensor = small.cast();
        assert_eq!(back, t);
    }

    #[test]
    fn finiteness_check() {
        let mut t = Tensor::zeros(vec![2]);
        assert!(t.all_finite());
        t.data_mut()[1] = f64::NAN;
        assert!(!t.all_finite());
    }
}
