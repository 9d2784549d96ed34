//! Comparison predictors: a k-nearest-neighbour response predictor and the
//! unbounded-profile GRNN. Both plug into the same search and controller.

use std::fmt;
use std::str::FromStr;

use crate::allocation::BandwidthAllocation;
use crate::error::{QosError, Result};
use crate::grnn::{dist2, round_level, Grnn, Prediction, Predictor};
use crate::profile::Profile;
use crate::scalar::Scalar;
use crate::Level;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PredictorKind {
    GrnnBounded,
    GrnnUnbounded,
    Knn { k: usize },
}

impl PredictorKind {
    pub const DEFAULT_KNN_K: usize = 5;

    pub fn tag(&self) -> &'static str {
        match self {
            PredictorKind::GrnnBounded => "grnn_bounded",
            PredictorKind::GrnnUnbounded => "grnn_unbounded",
            PredictorKind::Knn { .. } => "knn",
        }
    }

    pub fn from_tag(tag: &str, knn_k: Option<usize>) -> Result<Self> {
        let kind = match tag {
            "grnn_bounded" => PredictorKind::GrnnBounded,
            "grnn_unbounded" => PredictorKind::GrnnUnbounded,
            "knn" => PredictorKind::Knn {
                k: knn_k.unwrap_or(Self::DEFAULT_KNN_K),
            },
            other => return Err(QosError::config(format!("unknown predictor `{other}`"))),
        };
        if let PredictorKind::Knn { k: 0 } = kind {
            return Err(QosError::config("knn_k must be at least 1"));
        }
        if knn_k.is_some() && !matches!(kind, PredictorKind::Knn { .. }) {
            return Err(QosError::config(format!("knn_k is only valid for knn, not `{tag}`")));
        }
        Ok(kind)
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, PredictorKind::GrnnUnbounded)
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictorKind::Knn { k } => write!(f, "knn(k={k})"),
            other => f.write_str(other.tag()),
        }
    }
}

impl FromStr for PredictorKind {
    type Err = QosError;

    /// Accepts `grnn_bounded`, `grnn_unbounded`, `knn` or `knn:<k>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some(("knn", k)) => {
                let k = k.parse().map_err(|_| QosError::config(format!("bad knn k `{k}`")))?;
                Self::from_tag("knn", Some(k))
            }
            _ => Self::from_tag(s, None),
        }
    }
}

/// Mean response of the `k` nearest records (squared distance, lowest index
/// first on ties), rounded and clamped like the GRNN.
pub fn knn_predict<T: Scalar>(x: &BandwidthAllocation<T>, profile: &Profile<T>, k: usize) -> Result<Prediction<T>> {
    if profile.is_empty() {
        return Err(QosError::EmptyProfile);
    }
    if k == 0 || k > profile.len() {
        return Err(QosError::invalid(format!(
            "k = {k} neighbours requested from a profile of {}",
            profile.len()
        )));
    }
    x.check_links(profile.links())?;
    let mut by_distance: Vec<(T, usize)> = profile
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| (dist2(x.as_slice(), r.allocation.as_slice()), i))
        .collect();
    let cmp = |a: &(T, usize), b: &(T, usize)| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1));
    if k < by_distance.len() {
        by_distance.select_nth_unstable_by(k - 1, cmp);
        by_distance.truncate(k);
    }
    by_distance.sort_by(cmp);
    let sum = by_distance
        .iter()
        .fold(T::zero(), |acc, &(_, i)| acc + T::from(profile.records()[i].response).unwrap());
    let y_star = sum / T::from_count(k);
    Ok(Prediction {
        y_star,
        y_hat: round_level(y_star, profile.levels()),
        kernel_sum: T::from_count(k),
        underflow: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Knn {
    pub k: usize,
}

impl<T: Scalar> Predictor<T> for Knn {
    fn predict(&self, x: &BandwidthAllocation<T>, profile: &Profile<T>) -> Result<Prediction<T>> {
        knn_predict(x, profile, self.k)
    }
}

/// Appends regardless of capacity; the profile becomes unbounded.
pub fn unbounded_update<T: Scalar>(
    profile: Profile<T>,
    allocation: BandwidthAllocation<T>,
    response: Level,
) -> Result<Profile<T>> {
    let mut profile = profile.with_capacity(None)?;
    profile.append_unchecked_capacity(allocation, response)?;
    Ok(profile)
}

/// Closed set of predictors the controller can run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnyPredictor<T> {
    Grnn(Grnn<T>),
    Knn(Knn),
}

impl<T: Scalar> Predictor<T> for AnyPredictor<T> {
    fn predict(&self, x: &BandwidthAllocation<T>, profile: &Profile<T>) -> Result<Prediction<T>> {
        match self {
            AnyPredictor::Grnn(g) => g.predict(x, profile),
            AnyPredictor::Knn(k) => k.predict(x, profile),
        }
    }
}
