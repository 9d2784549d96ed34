//! General regression neural network response prediction.
//!
//! `y* = Σ yᵢ W(x, xᵢ) / Σ W(x, xᵢ)` with the Gaussian kernel
//! `W = exp(-D(x, xᵢ) / σ²)` and `D` the squared Euclidean distance.
//! Sums run over the profile in record order, left to right, so results
//! are reproducible bit for bit.

use crate::allocation::BandwidthAllocation;
use crate::error::{QosError, Result};
use crate::profile::Profile;
use crate::scalar::Scalar;
use crate::Level;

/// Width `σ²` (Mbps²) of the Gaussian kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelParams<T> {
    sigma2: T,
}

impl<T: Scalar> KernelParams<T> {
    pub const DEFAULT_SIGMA2: f64 = 200.0;

    pub fn new(sigma2: T) -> Result<Self> {
        if !(sigma2 > T::zero()) || !sigma2.is_finite() {
            return Err(QosError::invalid(format!("kernel width must be positive and finite, got {sigma2}")));
        }
        Ok(KernelParams { sigma2 })
    }

    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    #[inline]
    pub fn weight(&self, squared_distance: T) -> T {
        (-squared_distance / self.sigma2).exp()
    }
}

impl<T: Scalar> Default for KernelParams<T> {
    fn default() -> Self {
        KernelParams {
            sigma2: T::lit(Self::DEFAULT_SIGMA2),
        }
    }
}

/// Output of a response predictor at one candidate allocation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction<T> {
    /// Unrounded prediction.
    pub y_star: T,
    /// `y_star` rounded half up and clamped to `[1, L]`.
    pub y_hat: Level,
    /// `Σᵢ W(x, xᵢ)`. Zero only when every weight underflowed.
    pub kernel_sum: T,
    /// Set when every weight underflowed and the nearest record's response
    /// was used instead of the weighted mean.
    pub underflow: bool,
}

/// Anything that maps a candidate allocation to a predicted response,
/// given a profile. The allocation search is generic over this.
pub trait Predictor<T: Scalar> {
    fn predict(&self, x: &BandwidthAllocation<T>, profile: &Profile<T>) -> Result<Prediction<T>>;
}

/// The bounded-profile GRNN predictor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grnn<T> {
    pub kernel: KernelParams<T>,
}

impl<T: Scalar> Grnn<T> {
    pub fn new(kernel: KernelParams<T>) -> Self {
        Grnn { kernel }
    }
}

impl<T: Scalar> Default for Grnn<T> {
    fn default() -> Self {
        Grnn::new(KernelParams::default())
    }
}

impl<T: Scalar> Predictor<T> for Grnn<T> {
    fn predict(&self, x: &BandwidthAllocation<T>, profile: &Profile<T>) -> Result<Prediction<T>> {
        predict(x, profile, &self.kernel)
    }
}

pub fn squared_distance<T: Scalar>(a: &BandwidthAllocation<T>, b: &BandwidthAllocation<T>) -> Result<T> {
    b.check_links(a.links())?;
    Ok(dist2(a.as_slice(), b.as_slice()))
}

#[inline]
pub(crate) fn dist2<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&u, &v)| {
        let d = u - v;
        acc + d * d
    })
}

/// Rounds half up and clamps to `[1, levels]`.
///
/// The result satisfies `round_level(y) >= a  <=>  y >= a - 1/2` exactly for
/// every integer `a` in range, even where `y + 0.5` would round in floating
/// point.
pub fn round_level<T: Scalar>(y_star: T, levels: Level) -> Level {
    if y_star.is_nan() {
        return 1;
    }
    let half = T::lit(0.5);
    let mut k = (y_star + half).floor();
    if T::from(k).is_some() {
        if k - half > y_star {
            k = k - T::one();
        } else if y_star >= k + half {
            k = k + T::one();
        }
    }
    let lo = T::one();
    let hi = T::from(levels).unwrap_or(lo);
    let k = k.max(lo).min(hi);
    k.to_u32().unwrap_or(1)
}

/// Evaluates the GRNN prediction at `x`.
pub fn predict<T: Scalar>(
    x: &BandwidthAllocation<T>,
    profile: &Profile<T>,
    kernel: &KernelParams<T>,
) -> Result<Prediction<T>> {
    if profile.is_empty() {
        return Err(QosError::EmptyProfile);
    }
    x.check_links(profile.links())?;
    let xs = x.as_slice();
    let mut num = T::zero();
    let mut den = T::zero();
    for rec in profile.records() {
        let w = kernel.weight(dist2(xs, rec.allocation.as_slice()));
        num = num + T::from(rec.response).unwrap() * w;
        den = den + w;
    }
    if den > T::zero() {
        let y_star = num / den;
        return Ok(Prediction {
            y_star,
            y_hat: round_level(y_star, profile.levels()),
            kernel_sum: den,
            underflow: false,
        });
    }
    // All weights underflowed: use the nearest record, lowest index on ties.
    let mut best = 0;
    let mut best_d = T::infinity();
    for (i, rec) in profile.records().iter().enumerate() {
        let d = dist2(xs, rec.allocation.as_slice());
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    let y = profile.records()[best].response;
    Ok(Prediction {
        y_star: T::from(y).unwrap(),
        y_hat: y,
        kernel_sum: T::zero(),
        underflow: true,
    })
}

/// Upper bound `(L - 1) / Σ W` on how far one appended record can move `y*`.
pub fn variation_bound<T: Scalar>(levels: Level, kernel_sum_after: T) -> Result<T> {
    if levels < 2 {
        return Err(QosError::invalid(format!("need at least 2 levels, got {levels}")));
    }
    if !(kernel_sum_after > T::zero()) {
        return Err(QosError::invalid(format!(
            "kernel sum must be positive, got {kernel_sum_after}"
        )));
    }
    Ok(T::from(levels - 1).unwrap() / kernel_sum_after)
}
