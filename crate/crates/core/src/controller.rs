//! The closed QoS loop for one service.
//!
//! Each transmission epoch the controller receives the measured ERAB for the
//! allocation it last handed out, quantizes it into a response level, files
//! the `(allocation, level)` record into the profile and searches for the
//! next allocation.

use std::time::Instant;

use crate::allocation::BandwidthAllocation;
use crate::baselines::{unbounded_update, AnyPredictor, Knn, PredictorKind};
use crate::error::{QosError, Result};
use crate::grnn::{Grnn, KernelParams};
use crate::profile::{Profile, UpdateOutcome};
use crate::scalar::Scalar;
use crate::search::{search, AllocationResult, SearchGrid};
use crate::Level;

#[derive(Clone, Debug, PartialEq)]
pub struct QosConfig<T> {
    /// Number of response levels `L`.
    pub levels: Level,
    /// `η₁ < … < η_{L−1}` in Mbps.
    pub thresholds: Vec<T>,
    /// `a₁ < … < a_Q`, indexed by QoS level `q = 1..=Q`.
    pub targets: Vec<Level>,
    pub kernel: KernelParams<T>,
    pub grid: SearchGrid<T>,
    /// Profile capacity `S`.
    pub capacity: usize,
    /// Lower bound on `Σ W` at the chosen allocation; 0 disables the check.
    pub min_kernel_sum: T,
}

impl<T: Scalar> QosConfig<T> {
    /// Twelve levels spaced 2.5 Mbps apart around zero ERAB and the three
    /// targets {7, 9, 11}, on a two-link 50/30 Mbps grid.
    pub fn home_network_default() -> Self {
        let thresholds = [-11.25, -8.75, -6.25, -3.75, -1.25, 1.25, 3.75, 6.25, 8.75, 11.25, 13.75]
            .into_iter()
            .map(T::lit)
            .collect();
        QosConfig {
            levels: 12,
            thresholds,
            targets: vec![7, 9, 11],
            kernel: KernelParams::default(),
            grid: SearchGrid::new(T::lit(1.25), vec![T::lit(50.0), T::lit(30.0)]).expect("valid default grid"),
            capacity: 31,
            min_kernel_sum: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(QosError::config(format!("need at least 2 response levels, got {}", self.levels)));
        }
        if self.thresholds.len() + 1 != self.levels as usize {
            return Err(QosError::config(format!(
                "{} levels need {} thresholds, got {}",
                self.levels,
                self.levels - 1,
                self.thresholds.len()
            )));
        }
        if self.thresholds.iter().any(|t| !t.is_finite()) || self.thresholds.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(QosError::config("thresholds must be finite and strictly increasing"));
        }
        if self.targets.is_empty() {
            return Err(QosError::config("at least one QoS level is required"));
        }
        if self.targets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(QosError::config("QoS targets must be strictly increasing"));
        }
        if self.targets.iter().any(|&a| a < 1 || a > self.levels) {
            return Err(QosError::config(format!("QoS targets must lie in 1..={}", self.levels)));
        }
        if self.capacity == 0 {
            return Err(QosError::config("profile capacity must be positive"));
        }
        if !(self.min_kernel_sum >= T::zero()) {
            return Err(QosError::config("min_kernel_sum must be >= 0"));
        }
        Ok(())
    }

    pub fn qos_levels(&self) -> usize {
        self.targets.len()
    }

    /// `a_q` for `q` in `1..=Q`.
    pub fn target(&self, q: usize) -> Result<Level> {
        if q == 0 || q > self.targets.len() {
            return Err(QosError::config(format!("QoS level {q} outside 1..={}", self.targets.len())));
        }
        Ok(self.targets[q - 1])
    }

    pub fn quantize(&self, erab: T) -> Level {
        quantize(erab, &self.thresholds)
    }
}

/// Signed surplus of the allocation over the source rate: the residual
/// bandwidth `|x| - R` when `|x| >= R`, otherwise minus the loss rate
/// `R - |x|`.
pub fn compute_erab<T: Scalar>(total_allocated: T, source_rate: T) -> Result<T> {
    if !(total_allocated >= T::zero()) || !(source_rate >= T::zero()) {
        return Err(QosError::invalid(format!(
            "bandwidth and rate must be >= 0, got |x| = {total_allocated}, R = {source_rate}"
        )));
    }
    if total_allocated >= source_rate {
        Ok(total_allocated - source_rate)
    } else {
        Ok(-(source_rate - total_allocated))
    }
}

/// Level `k` with `erab` in `(η_{k-1}, η_k]`, the outer intervals unbounded.
pub fn quantize<T: Scalar>(erab: T, thresholds: &[T]) -> Level {
    1 + thresholds.iter().filter(|&&eta| eta < erab).count() as Level
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransmissionOutcome<T> {
    pub epoch: usize,
    pub erab: T,
    pub response: Level,
    pub applied_allocation: BandwidthAllocation<T>,
    pub source_rate: T,
}

/// One row of the transmission log.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord<T> {
    pub outcome: TransmissionOutcome<T>,
    /// `|x|` of the applied allocation.
    pub total: T,
    /// Whether the search that produced the applied allocation found a member.
    pub feasible_found: bool,
    /// Kernel sum at the applied allocation fell below `min_kernel_sum`.
    pub low_confidence: bool,
    /// This epoch's profile update had to evict outside the opposite class.
    pub eviction_fallback: bool,
    /// Profile size after this epoch's update.
    pub profile_size: usize,
    /// Grid points times profile records for this epoch's search.
    pub kernel_evals: usize,
    /// Wall clock of this epoch's search, ms.
    pub search_ms: f64,
}

#[derive(Clone, Debug)]
pub struct Controller<T: Scalar> {
    config: QosConfig<T>,
    kind: PredictorKind,
    predictor: AnyPredictor<T>,
    profile: Profile<T>,
    qos_level: usize,
    target: Level,
    current: AllocationResult<T>,
    epoch: usize,
    log: Vec<EpochRecord<T>>,
}

impl<T: Scalar> Controller<T> {
    /// Bounded-profile GRNN controller for QoS level `q`.
    pub fn initialize(config: QosConfig<T>, seed: Profile<T>, q: usize) -> Result<Self> {
        Self::with_predictor(config, seed, q, PredictorKind::GrnnBounded)
    }

    pub fn with_predictor(config: QosConfig<T>, seed: Profile<T>, q: usize, kind: PredictorKind) -> Result<Self> {
        config.validate()?;
        let target = config.target(q)?;
        if seed.is_empty() {
            return Err(QosError::config("seed profile is empty"));
        }
        if seed.links() != config.grid.links() {
            return Err(QosError::config(format!(
                "seed profile has {} links, grid has {}",
                seed.links(),
                config.grid.links()
            )));
        }
        if seed.levels() != config.levels {
            return Err(QosError::config(format!(
                "seed profile uses {} levels, config uses {}",
                seed.levels(),
                config.levels
            )));
        }
        let capacity = if kind.is_unbounded() { None } else { Some(config.capacity) };
        let profile = seed.with_capacity(capacity).map_err(|e| QosError::config(e.to_string()))?;
        let predictor = match kind {
            PredictorKind::Knn { k } => {
                if k > profile.len() {
                    return Err(QosError::config(format!(
                        "knn needs {k} records, seed has {}",
                        profile.len()
                    )));
                }
                AnyPredictor::Knn(Knn { k })
            }
            _ => AnyPredictor::Grnn(Grnn::new(config.kernel)),
        };
        let current = search(&config.grid, &profile, &predictor, target)?;
        Ok(Controller {
            config,
            kind,
            predictor,
            profile,
            qos_level: q,
            target,
            current,
            epoch: 0,
            log: Vec::new(),
        })
    }

    pub fn config(&self) -> &QosConfig<T> {
        &self.config
    }

    pub fn kind(&self) -> PredictorKind {
        self.kind
    }

    pub fn predictor(&self) -> &AnyPredictor<T> {
        &self.predictor
    }

    pub fn profile(&self) -> &Profile<T> {
        &self.profile
    }

    pub fn qos_level(&self) -> usize {
        self.qos_level
    }

    pub fn target(&self) -> Level {
        self.target
    }

    /// The allocation to apply in the next transmission.
    pub fn current(&self) -> &AllocationResult<T> {
        &self.current
    }

    /// Transmissions processed so far.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn log(&self) -> &[EpochRecord<T>] {
        &self.log
    }

    fn low_confidence(&self, result: &AllocationResult<T>) -> bool {
        self.config.min_kernel_sum > T::zero() && result.prediction.kernel_sum < self.config.min_kernel_sum
    }

    /// Feeds back the ERAB measured for the current allocation and returns
    /// the allocation for the next transmission.
    pub fn step(&mut self, measured_erab: T, source_rate: T) -> Result<(AllocationResult<T>, TransmissionOutcome<T>)> {
        let response = self.config.quantize(measured_erab);
        let applied = self.current.allocation.clone();

        let fallback = if self.kind.is_unbounded() {
            let profile = std::mem::replace(&mut self.profile, Profile::unbounded(applied.links(), self.config.levels)?);
            self.profile = unbounded_update(profile, applied.clone(), response)?;
            false
        } else {
            let out: UpdateOutcome<T> = self.profile.update(applied.clone(), response, self.target)?;
            out.is_fallback()
        };

        let started = Instant::now();
        let next = search(&self.config.grid, &self.profile, &self.predictor, self.target)?;
        let search_ms = started.elapsed().as_secs_f64() * 1e3;

        let outcome = TransmissionOutcome {
            epoch: self.epoch,
            erab: measured_erab,
            response,
            applied_allocation: applied,
            source_rate,
        };
        self.log.push(EpochRecord {
            outcome: outcome.clone(),
            total: self.current.total,
            feasible_found: self.current.feasible_found,
            low_confidence: self.low_confidence(&self.current),
            eviction_fallback: fallback,
            profile_size: self.profile.len(),
            kernel_evals: next.evaluated * self.profile.len(),
            search_ms,
        });
        self.current = next.clone();
        self.epoch += 1;
        Ok((next, outcome))
    }
}
