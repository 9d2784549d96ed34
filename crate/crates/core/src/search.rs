//! Minimum-bandwidth allocation search over the discrete grid.
//!
//! The grid is `{x : x_j = c_j Δ, 0 <= x_j <= B_j}`. A point belongs to the
//! predicted-feasible set for target `a_q` iff its prediction satisfies
//! `y* >= a_q - 1/2`. The search enumerates every point in lexicographic
//! order of step counts and keeps the member with the fewest total steps,
//! then the highest `y*`, then the first in enumeration order.

use std::cmp::Ordering;

use crate::allocation::BandwidthAllocation;
use crate::error::{QosError, Result};
use crate::grnn::{dist2, KernelParams, Prediction, Predictor};
use crate::profile::Profile;
use crate::scalar::Scalar;
use crate::Level;

#[derive(Clone, Debug, PartialEq)]
pub struct SearchGrid<T> {
    delta: T,
    max_per_link: Vec<T>,
    /// Largest step count `c` per link with `c Δ <= B_j`.
    max_steps: Vec<usize>,
}

impl<T: Scalar> SearchGrid<T> {
    pub fn new(delta: T, max_per_link: Vec<T>) -> Result<Self> {
        if !(delta > T::zero()) || !delta.is_finite() {
            return Err(QosError::invalid(format!("grid step must be positive, got {delta}")));
        }
        if max_per_link.is_empty() {
            return Err(QosError::invalid("grid needs at least one link"));
        }
        let mut max_steps = Vec::with_capacity(max_per_link.len());
        for &b in &max_per_link {
            if !(b >= T::zero()) || !b.is_finite() {
                return Err(QosError::invalid(format!("link maximum must be finite and >= 0, got {b}")));
            }
            let mut c = (b / delta).floor().to_usize().unwrap_or(0);
            if T::from_count(c + 1) * delta <= b {
                c += 1;
            }
            while c > 0 && T::from_count(c) * delta > b {
                c -= 1;
            }
            max_steps.push(c);
        }
        Ok(SearchGrid {
            delta,
            max_per_link,
            max_steps,
        })
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn max_per_link(&self) -> &[T] {
        &self.max_per_link
    }

    pub fn links(&self) -> usize {
        self.max_per_link.len()
    }

    pub fn max_steps(&self) -> &[usize] {
        &self.max_steps
    }

    /// Number of grid points, `Π (⌊B_j/Δ⌋ + 1)`.
    pub fn cardinality(&self) -> usize {
        self.max_steps.iter().map(|c| c + 1).product()
    }

    pub fn point(&self, steps: &[usize]) -> BandwidthAllocation<T> {
        BandwidthAllocation::new(steps.iter().map(|&c| T::from_count(c) * self.delta).collect())
    }

    /// All grid points in enumeration order.
    pub fn points(&self) -> GridPoints<'_, T> {
        GridPoints {
            grid: self,
            steps: vec![0; self.links()],
            done: false,
        }
    }

    /// Whether every coordinate of `x` is a grid value.
    pub fn contains(&self, x: &BandwidthAllocation<T>) -> bool {
        x.links() == self.links()
            && x.as_slice().iter().zip(&self.max_steps).all(|(&v, &cmax)| {
                let c = (v / self.delta).round();
                c >= T::zero() && c <= T::from_count(cmax) && c * self.delta == v
            })
    }
}

/// Iterator over `(step counts, allocation)` in lexicographic step order,
/// last link varying fastest.
pub struct GridPoints<'a, T> {
    grid: &'a SearchGrid<T>,
    steps: Vec<usize>,
    done: bool,
}

impl<T: Scalar> Iterator for GridPoints<'_, T> {
    type Item = (Vec<usize>, BandwidthAllocation<T>);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = (self.steps.clone(), self.grid.point(&self.steps));
        self.done = !advance(&mut self.steps, &self.grid.max_steps);
        Some(item)
    }
}

/// Odometer increment. Returns false after the last point.
fn advance(steps: &mut [usize], max: &[usize]) -> bool {
    for j in (0..steps.len()).rev() {
        if steps[j] < max[j] {
            steps[j] += 1;
            return true;
        }
        steps[j] = 0;
    }
    false
}

#[derive(Clone, Debug, PartialEq)]
pub struct AllocationResult<T> {
    pub allocation: BandwidthAllocation<T>,
    /// `|x|`.
    pub total: T,
    pub prediction: Prediction<T>,
    /// False when no grid point is predicted to meet the target; the
    /// allocation is then the point with the highest `y*`.
    pub feasible_found: bool,
    /// Grid points evaluated.
    pub evaluated: usize,
}

#[inline]
fn member_threshold<T: Scalar>(a_q: Level, slack: T) -> T {
    T::from(a_q).unwrap() - T::lit(0.5) - slack
}

/// `y* >= a_q - 1/2`, equivalently `ŷ >= a_q`.
pub fn membership<T: Scalar, P: Predictor<T> + ?Sized>(
    x: &BandwidthAllocation<T>,
    profile: &Profile<T>,
    predictor: &P,
    a_q: Level,
) -> Result<bool> {
    let pr = predictor.predict(x, profile)?;
    Ok(pr.y_star >= member_threshold(a_q, T::zero()))
}

/// The three kernel-weighted sums of the linear membership test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CForm<T> {
    /// `Σ_{yᵢ >= a_q} (yᵢ - a_q) W`.
    pub c1: T,
    /// `½ Σ W`.
    pub c2: T,
    /// `Σ_{yᵢ < a_q} (a_q - yᵢ) W`.
    pub c3: T,
    pub member: bool,
}

/// Membership evaluated as `C1 + C2 >= C3`, avoiding the division in `y*`.
pub fn membership_c_form<T: Scalar>(
    x: &BandwidthAllocation<T>,
    profile: &Profile<T>,
    kernel: &KernelParams<T>,
    a_q: Level,
) -> Result<CForm<T>> {
    if profile.is_empty() {
        return Err(QosError::EmptyProfile);
    }
    x.check_links(profile.links())?;
    let (mut c1, mut sum_w, mut c3) = (T::zero(), T::zero(), T::zero());
    for rec in profile.records() {
        let w = kernel.weight(dist2(x.as_slice(), rec.allocation.as_slice()));
        sum_w = sum_w + w;
        if rec.response >= a_q {
            c1 = c1 + T::from(rec.response - a_q).unwrap() * w;
        } else {
            c3 = c3 + T::from(a_q - rec.response).unwrap() * w;
        }
    }
    let c2 = sum_w * T::lit(0.5);
    Ok(CForm {
        c1,
        c2,
        c3,
        member: c1 + c2 >= c3,
    })
}

pub fn search<T: Scalar, P: Predictor<T> + ?Sized>(
    grid: &SearchGrid<T>,
    profile: &Profile<T>,
    predictor: &P,
    a_q: Level,
) -> Result<AllocationResult<T>> {
    search_with_slack(grid, profile, predictor, a_q, T::zero())
}

/// [`search`] with the membership threshold lowered by `slack`.
pub fn search_with_slack<T: Scalar, P: Predictor<T> + ?Sized>(
    grid: &SearchGrid<T>,
    profile: &Profile<T>,
    predictor: &P,
    a_q: Level,
    slack: T,
) -> Result<AllocationResult<T>> {
    if profile.is_empty() {
        return Err(QosError::EmptyProfile);
    }
    if grid.links() != profile.links() {
        return Err(QosError::DimensionMismatch {
            expected: profile.links(),
            found: grid.links(),
        });
    }
    if grid.cardinality() == 0 {
        return Err(QosError::invalid("empty search grid"));
    }
    let threshold = member_threshold(a_q, slack);

    // (step sum, steps, prediction)
    let mut best_member: Option<(usize, Vec<usize>, Prediction<T>)> = None;
    let mut best_any: Option<(Vec<usize>, Prediction<T>)> = None;
    let mut steps = vec![0usize; grid.links()];
    let mut x = grid.point(&steps);
    let mut evaluated = 0;
    loop {
        for (v, &c) in x.as_mut_slice().iter_mut().zip(&steps) {
            *v = T::from_count(c) * grid.delta;
        }
        let pr = predictor.predict(&x, profile)?;
        evaluated += 1;

        if best_any.as_ref().is_none_or(|(_, b)| pr.y_star > b.y_star) {
            best_any = Some((steps.clone(), pr));
        }
        if pr.y_star >= threshold {
            let sum: usize = steps.iter().sum();
            let better = match &best_member {
                None => true,
                Some((bs, _, bp)) => match sum.cmp(bs) {
                    Ordering::Less => true,
                    Ordering::Equal => pr.y_star > bp.y_star,
                    Ordering::Greater => false,
                },
            };
            if better {
                best_member = Some((sum, steps.clone(), pr));
            }
        }
        if !advance(&mut steps, &grid.max_steps) {
            break;
        }
    }

    let (steps, prediction, feasible_found) = match best_member {
        Some((_, s, p)) => (s, p, true),
        None => {
            let (s, p) = best_any.expect("grid is non-empty");
            (s, p, false)
        }
    };
    let allocation = grid.point(&steps);
    Ok(AllocationResult {
        total: allocation.total(),
        allocation,
        prediction,
        feasible_found,
        evaluated,
    })
}
