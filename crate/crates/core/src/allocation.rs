use std::fmt;

use crate::error::{QosError, Result};
use crate::scalar::Scalar;

/// Per-link bandwidths (Mbps) allocated to one service.
#[derive(Clone, Debug, PartialEq)]
pub struct BandwidthAllocation<T>(Vec<T>);

impl<T: Scalar> BandwidthAllocation<T> {
    pub fn new(links: Vec<T>) -> Self {
        BandwidthAllocation(links)
    }

    pub fn zeros(n: usize) -> Self {
        BandwidthAllocation(vec![T::zero(); n])
    }

    pub fn links(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.0
    }

    /// `|x|`, summed left to right.
    pub fn total(&self) -> T {
        self.0.iter().fold(T::zero(), |acc, &v| acc + v)
    }

    pub(crate) fn check_links(&self, expected: usize) -> Result<()> {
        if self.0.len() != expected {
            return Err(QosError::DimensionMismatch {
                expected,
                found: self.0.len(),
            });
        }
        Ok(())
    }
}

impl<T> From<Vec<T>> for BandwidthAllocation<T> {
    fn from(v: Vec<T>) -> Self {
        BandwidthAllocation(v)
    }
}

impl<T: fmt::Display> fmt::Display for BandwidthAllocation<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}
