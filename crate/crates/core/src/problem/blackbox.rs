use alloc::vec::Vec;

use crate::bits::BitVector;
use crate::{Error, Result, ENUM_GUARD};

/// An arbitrary objective given as a table of all `2^n` values, indexed by
/// the assignment's bit pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct BlackBoxData {
    dim: usize,
    values: Vec<f64>,
}

impl BlackBoxData {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || dim > ENUM_GUARD {
            return Err(Error::DimensionTooLarge {
                dim,
                limit: ENUM_GUARD,
            });
        }
        if values.len() != 1 << dim {
            return Err(Error::InvalidInstance("black-box table must hold 2^n values"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInstance("black-box values must be finite"));
        }
        Ok(Self { dim, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, x: &BitVector) -> f64 {
        self.values[x.bits() as usize]
    }
}
