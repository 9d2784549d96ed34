//! Randomized property suite for the QoS-awareness guarantees.
//!
//! Each check draws random instances from a seeded generator and counts
//! violations. Instances keep every squared distance below `700 σ²` so no
//! kernel weight underflows; the nearest-record fallback used on underflow
//! is outside the guarantees being checked.

use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::allocation::BandwidthAllocation;
use crate::controller::{Controller, QosConfig};
use crate::error::Result;
use crate::grnn::{dist2, predict, variation_bound, Grnn, KernelParams};
use crate::profile::{class_of, Profile, ResponseClass, UpdateOutcome};
use crate::search::{membership, membership_c_form, search_with_slack, SearchGrid};
use crate::Level;

/// Slack on the membership threshold when comparing two profiles.
pub const MEMBERSHIP_SLACK: f64 = 1e-12;
/// Agreement tolerance between the ratio and linear membership forms,
/// on the `y*` scale.
pub const FORM_TOLERANCE: f64 = 1e-9;
/// Slack on the variation bound.
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub name: &'static str,
    pub instances: usize,
    pub checks: usize,
    pub violations: usize,
    pub first_violation: Option<String>,
    pub elapsed: Duration,
}

impl CheckReport {
    fn new(name: &'static str) -> Self {
        CheckReport {
            name,
            instances: 0,
            checks: 0,
            violations: 0,
            first_violation: None,
            elapsed: Duration::ZERO,
        }
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some(describe());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.instances > 0
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: {} instances, {} checks, {} violations, {:.2?}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.instances,
            self.checks,
            self.violations,
            self.elapsed
        )?;
        if let Some(v) = &self.first_violation {
            write!(f, "\n    first violation: {v}")?;
        }
        Ok(())
    }
}

/// A random search problem.
#[derive(Clone, Debug)]
pub struct Instance {
    pub grid: SearchGrid<f64>,
    pub profile: Profile<f64>,
    pub kernel: KernelParams<f64>,
    pub target: Level,
}

impl Instance {
    /// `n ∈ {1,2,3}`, at most 500 grid points with every coordinate ≤ 100,
    /// `σ² ∈ [50, 2000]`, `L ∈ [2, 12]`, profile size in `[min_p, max_p]`.
    pub fn random(rng: &mut ChaCha8Rng, min_p: usize, max_p: usize) -> Self {
        let n = rng.random_range(1..=3usize);
        let delta = [0.5, 1.25, 2.5, 5.0][rng.random_range(0..4)];
        let per_link_cap = match n {
            1 => 499,
            2 => 21,
            _ => 6,
        };
        let max_steps_by_range = (100.0 / delta) as usize;
        let mut maxima = Vec::with_capacity(n);
        let mut points = 1usize;
        for _ in 0..n {
            let budget = (500 / points).saturating_sub(1).min(per_link_cap).min(max_steps_by_range).max(1);
            let c = rng.random_range(1..=budget);
            points *= c + 1;
            maxima.push(c as f64 * delta);
        }
        let grid = SearchGrid::new(delta, maxima.clone()).expect("valid random grid");
        let levels: Level = rng.random_range(2..=12);
        let sigma2 = rng.random_range(50.0..=2000.0);
        let p = rng.random_range(min_p..=max_p);
        let mut profile = Profile::unbounded(n, levels).expect("valid profile");
        for _ in 0..p {
            let x = random_allocation(rng, &grid, &maxima);
            profile.push(x, rng.random_range(1..=levels)).expect("record fits");
        }
        Instance {
            grid,
            profile,
            kernel: KernelParams::new(sigma2).expect("positive width"),
            target: rng.random_range(1..=levels),
        }
    }
}

/// Half the time a grid point, otherwise uniform in the box.
fn random_allocation(rng: &mut ChaCha8Rng, grid: &SearchGrid<f64>, maxima: &[f64]) -> BandwidthAllocation<f64> {
    if rng.random_bool(0.5) {
        let steps: Vec<usize> = grid.max_steps().iter().map(|&m| rng.random_range(0..=m)).collect();
        grid.point(&steps)
    } else {
        BandwidthAllocation::new(maxima.iter().map(|&b| rng.random_range(0.0..=b)).collect())
    }
}

fn y_stars(grid: &SearchGrid<f64>, profile: &Profile<f64>, kernel: &KernelParams<f64>) -> Result<Vec<f64>> {
    grid.points().map(|(_, x)| predict(&x, profile, kernel).map(|p| p.y_star)).collect()
}

/// Search total, `None` when nothing on the grid is predicted feasible.
fn total(inst: &Instance, profile: &Profile<f64>, slack: f64) -> Result<Option<f64>> {
    let r = search_with_slack(&inst.grid, profile, &Grnn::new(inst.kernel), inst.target, slack)?;
    Ok(r.feasible_found.then_some(r.total))
}

/// `a <= b` with `None` as +∞.
fn le(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(a), Some(b)) => a <= b + 1e-9,
    }
}

/// Membership inclusion `from ⊆ into` over the grid, with `into` relaxed by
/// the slack.
fn included(from: &[f64], into: &[f64], threshold: f64) -> Option<usize> {
    from.iter()
        .zip(into)
        .position(|(&a, &b)| a >= threshold && b < threshold - MEMBERSHIP_SLACK)
}

/// Appending a positive record never shrinks the feasible set or raises the
/// total; appending a negative one never grows it or lowers the total;
/// removing a positive record never lowers the total; removing a negative
/// one never raises it. Each instance exercises one append of each class
/// and one removal.
pub fn monotonicity(instances: usize, seed: u64) -> Result<CheckReport> {
    let started = Instant::now();
    let mut report = CheckReport::new("monotonicity (append/remove)");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..instances {
        let inst = Instance::random(&mut rng, 2, 40);
        let levels = inst.profile.levels();
        let a = inst.target;
        let threshold = a as f64 - 0.5;
        let maxima = inst.grid.max_per_link().to_vec();
        let base = y_stars(&inst.grid, &inst.profile, &inst.kernel)?;
        let base_total = total(&inst, &inst.profile, 0.0)?;
        let base_total_relaxed = total(&inst, &inst.profile, MEMBERSHIP_SLACK)?;
        report.instances += 1;

        // Positive append; always possible since L >= a.
        let y_pos = rng.random_range(a..=levels);
        let mut grown = inst.profile.clone();
        grown.push(random_allocation(&mut rng, &inst.grid, &maxima), y_pos)?;
        let after = y_stars(&inst.grid, &grown, &inst.kernel)?;
        let bad = included(&base, &after, threshold);
        report.check(bad.is_none(), || format!("positive append dropped grid point {bad:?}: {inst:?}"));
        let t_after = total(&inst, &grown, MEMBERSHIP_SLACK)?;
        report.check(le(t_after, base_total), || {
            format!("positive append raised total {base_total:?} -> {t_after:?}: {inst:?}")
        });

        // Negative append, when the target leaves room for one.
        if a > 1 {
            let y_neg = rng.random_range(1..a);
            let mut grown = inst.profile.clone();
            grown.push(random_allocation(&mut rng, &inst.grid, &maxima), y_neg)?;
            let after = y_stars(&inst.grid, &grown, &inst.kernel)?;
            let bad = included(&after, &base, threshold);
            report.check(bad.is_none(), || format!("negative append added grid point {bad:?}: {inst:?}"));
            let t_after = total(&inst, &grown, 0.0)?;
            report.check(le(base_total_relaxed, t_after), || {
                format!("negative append lowered total {base_total:?} -> {t_after:?}: {inst:?}")
            });
        }

        // Removal of a random record.
        let i = rng.random_range(0..inst.profile.len());
        let mut shrunk = inst.profile.clone();
        let removed = shrunk.remove(i)?;
        let after = y_stars(&inst.grid, &shrunk, &inst.kernel)?;
        match class_of(removed.response, a) {
            ResponseClass::Positive => {
                let bad = included(&after, &base, threshold);
                report.check(bad.is_none(), || format!("positive removal added grid point {bad:?}: {inst:?}"));
                let t_after = total(&inst, &shrunk, 0.0)?;
                report.check(le(base_total_relaxed, t_after), || {
                    format!("positive removal lowered total {base_total:?} -> {t_after:?}: {inst:?}")
                });
            }
            ResponseClass::Negative => {
                let bad = included(&base, &after, threshold);
                report.check(bad.is_none(), || format!("negative removal dropped grid point {bad:?}: {inst:?}"));
                let t_after = total(&inst, &shrunk, MEMBERSHIP_SLACK)?;
                report.check(le(t_after, base_total), || {
                    format!("negative removal raised total {base_total:?} -> {t_after:?}: {inst:?}")
                });
            }
        }
    }
    report.elapsed = started.elapsed();
    Ok(report)
}

/// The ratio form `y* >= a - 1/2` and the linear form `C1 + C2 >= C3`
/// agree on every grid point, except where `y*` is within
/// [`FORM_TOLERANCE`] of the threshold.
pub fn membership_forms(instances: usize, seed: u64) -> Result<CheckReport> {
    let started = Instant::now();
    let mut report = CheckReport::new("membership form equivalence");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..instances {
        let inst = Instance::random(&mut rng, 1, 40);
        let grnn = Grnn::new(inst.kernel);
        let threshold = inst.target as f64 - 0.5;
        report.instances += 1;
        for (_, x) in inst.grid.points() {
            let ratio = membership(&x, &inst.profile, &grnn, inst.target)?;
            let linear = membership_c_form(&x, &inst.profile, &inst.kernel, inst.target)?;
            let y = predict(&x, &inst.profile, &inst.kernel)?.y_star;
            let ok = ratio == linear.member || (y - threshold).abs() <= FORM_TOLERANCE;
            report.check(ok, || format!("forms disagree at {x} (y* = {y}, {linear:?}): {inst:?}"));
        }
    }
    report.elapsed = started.elapsed();
    Ok(report)
}

/// `|y*(p+1) - y*(p)| <= (L - 1) / Σ_{i<=p+1} W + BOUND_SLACK` for a random
/// query point and appended record.
pub fn variation_bound_check(trials: usize, seed: u64) -> Result<CheckReport> {
    let started = Instant::now();
    let mut report = CheckReport::new("variation bound on append");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let inst = Instance::random(&mut rng, 1, 40);
        let maxima = inst.grid.max_per_link().to_vec();
        let x = random_allocation(&mut rng, &inst.grid, &maxima);
        let before = predict(&x, &inst.profile, &inst.kernel)?;
        let mut grown = inst.profile.clone();
        let levels = grown.levels();
        grown.push(random_allocation(&mut rng, &inst.grid, &maxima), rng.random_range(1..=levels))?;
        let after = predict(&x, &grown, &inst.kernel)?;
        let bound = variation_bound(levels, after.kernel_sum)?;
        let moved = (after.y_star - before.y_star).abs();
        report.instances += 1;
        report.check(moved <= bound + BOUND_SLACK, || {
            format!("moved {moved} > bound {bound} at {x}: {inst:?}")
        });
    }
    report.elapsed = started.elapsed();
    Ok(report)
}

/// Random update sequences against the bounded store. Checks the size
/// limit, size preservation at capacity, opposite-class eviction, that the
/// evicted record is the nearest of its class (brute force), that fallbacks
/// only happen when the opposite class is empty, and persistence round trips.
pub fn profile_laws(updates: usize, seed: u64) -> Result<CheckReport> {
    let started = Instant::now();
    let mut report = CheckReport::new("profile store laws");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut done = 0;
    while done < updates {
        let n = rng.random_range(1..=3usize);
        let levels: Level = rng.random_range(2..=12);
        let capacity = rng.random_range(1..=40usize);
        let mut profile = Profile::<f64>::new(n, levels, capacity)?;
        let run = rng.random_range(1..=500usize).min(updates - done);
        report.instances += 1;
        for _ in 0..run {
            let x = BandwidthAllocation::new((0..n).map(|_| (rng.random_range(0..=40) as f64) * 1.25).collect());
            let y = rng.random_range(1..=levels);
            let a = rng.random_range(1..=levels);
            let before = profile.clone();
            let outcome = profile.update(x.clone(), y, a)?;
            report.check(profile.len() <= capacity, || format!("size {} > {capacity}", profile.len()));
            match outcome {
                UpdateOutcome::Appended => {
                    report.check(!before.is_full() && profile.len() == before.len() + 1, || {
                        "append at capacity".to_string()
                    });
                }
                UpdateOutcome::Replaced { index, evicted, fallback } => {
                    report.check(before.is_full() && profile.len() == capacity, || {
                        "replacement changed size".to_string()
                    });
                    let opposite = match class_of(y, a) {
                        ResponseClass::Positive => ResponseClass::Negative,
                        ResponseClass::Negative => ResponseClass::Positive,
                    };
                    let candidates: Vec<usize> = (0..before.len())
                        .filter(|&i| fallback || class_of(before.records()[i].response, a) == opposite)
                        .collect();
                    let has_opposite = before.records().iter().any(|r| class_of(r.response, a) == opposite);
                    report.check(fallback != has_opposite, || "fallback with opposite class present".to_string());
                    if !fallback {
                        report.check(class_of(evicted.response, a) == opposite, || {
                            format!("evicted class {:?}, new {:?}", class_of(evicted.response, a), class_of(y, a))
                        });
                    }
                    let d = |i: usize| dist2(x.as_slice(), before.records()[i].allocation.as_slice());
                    let expected = candidates.iter().copied().fold(None, |best: Option<usize>, i| match best {
                        Some(b) if d(b) <= d(i) => Some(b),
                        _ => Some(i),
                    });
                    report.check(expected == Some(index), || format!("evicted {index}, nearest is {expected:?}"));
                    report.check(profile.records()[index].allocation == x && profile.records()[index].response == y, || {
                        "new record not written to the evicted slot".to_string()
                    });
                }
            }
            done += 1;
        }
        let restored = Profile::<f64>::load(&profile.save())?;
        report.check(restored == profile, || "persistence round trip changed the profile".to_string());
    }
    report.elapsed = started.elapsed();
    Ok(report)
}

/// Closed-loop QoS awareness: with random ERAB feedback, a negative response
/// never lowers and a positive one never raises the next total allocation,
/// whenever both searches found a feasible point and the update was not an
/// eviction fallback.
pub fn qos_awareness(runs: usize, epochs: usize, seed: u64) -> Result<CheckReport> {
    let started = Instant::now();
    let mut report = CheckReport::new("closed-loop QoS awareness");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = QosConfig::<f64> {
        grid: SearchGrid::new(2.5, vec![50.0, 30.0])?,
        ..QosConfig::home_network_default()
    };
    for _ in 0..runs {
        let mut cfg = config.clone();
        cfg.capacity = rng.random_range(4..=24);
        cfg.kernel = KernelParams::new(rng.random_range(50.0..=800.0))?;
        let maxima = cfg.grid.max_per_link().to_vec();
        let mut seed_profile = Profile::unbounded(2, cfg.levels)?;
        for _ in 0..rng.random_range(1..=cfg.capacity) {
            let x = random_allocation(&mut rng, &cfg.grid, &maxima);
            let y = cfg.quantize(x.total() - 40.0);
            seed_profile.push(x, y)?;
        }
        let q = rng.random_range(1..=cfg.qos_levels());
        let mut ctrl = Controller::initialize(cfg.clone(), seed_profile, q)?;
        report.instances += 1;
        for _ in 0..epochs {
            let before = ctrl.current().clone();
            let rate = rng.random_range(30.0..=60.0);
            let erab = before.total - rate;
            let (next, outcome) = ctrl.step(erab, rate)?;
            let rec = ctrl.log().last().expect("step logs");
            if rec.eviction_fallback || !before.feasible_found || !next.feasible_found {
                continue;
            }
            let ok = match class_of(outcome.response, ctrl.target()) {
                ResponseClass::Negative => next.total >= before.total,
                ResponseClass::Positive => next.total <= before.total,
            };
            report.check(ok, || {
                format!(
                    "response {} (target {}) moved total {} -> {}",
                    outcome.response,
                    ctrl.target(),
                    before.total,
                    next.total
                )
            });
        }
    }
    report.elapsed = started.elapsed();
    Ok(report)
}

/// Runs every check at the sizes used by the acceptance suite.
pub fn full_suite(seed: u64) -> Result<Vec<CheckReport>> {
    Ok(vec![
        monotonicity(1000, seed)?,
        membership_forms(100, seed.wrapping_add(1))?,
        variation_bound_check(1000, seed.wrapping_add(2))?,
        profile_laws(10_000, seed.wrapping_add(3))?,
        qos_awareness(50, 40, seed.wrapping_add(4))?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        assert!(monotonicity(20, 1).unwrap().passed());
        assert!(membership_forms(5, 2).unwrap().passed());
        assert!(variation_bound_check(50, 3).unwrap().passed());
        assert!(profile_laws(500, 4).unwrap().passed());
        assert!(qos_awareness(3, 10, 5).unwrap().passed());
    }

    #[test]
    fn random_instances_respect_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let inst = Instance::random(&mut rng, 2, 40);
            assert!(inst.grid.cardinality() <= 500);
            assert!(inst.grid.max_per_link().iter().all(|&b| b <= 100.0));
            assert!((2..=40).contains(&inst.profile.len()));
            let s2 = inst.kernel.sigma2();
            assert!((50.0..=2000.0).contains(&s2));
        }
    }
}
