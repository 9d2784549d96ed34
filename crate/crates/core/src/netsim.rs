//! Discrete-epoch simulator of a multi-link path.
//!
//! Each link is shaped by a token bucket whose token rate equals the
//! allocated bandwidth. At the epoch timescale that is a rate clamp: a
//! service can push at most `min(x_j, headroom_j)` through link `j`, where
//! headroom is capacity minus background load minus what earlier services
//! (in service index order) already took this epoch. The measured ERAB is
//! computed from the clamped total.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::allocation::BandwidthAllocation;
use crate::controller::{compute_erab, Controller, TransmissionOutcome};
use crate::error::{QosError, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkSpec<T> {
    /// Physical capacity, Mbps.
    pub capacity: T,
    /// Load from background services, Mbps.
    pub background_rate: T,
}

impl<T: Scalar> LinkSpec<T> {
    pub fn new(capacity: T, background_rate: T) -> Result<Self> {
        let link = LinkSpec {
            capacity,
            background_rate,
        };
        link.validate()?;
        Ok(link)
    }

    fn validate(&self) -> Result<()> {
        if !(self.background_rate >= T::zero()) || !(self.background_rate <= self.capacity) || !self.capacity.is_finite() {
            return Err(QosError::invalid(format!(
                "link needs 0 <= background ({}) <= capacity ({})",
                self.background_rate, self.capacity
            )));
        }
        Ok(())
    }

    pub fn headroom(&self) -> T {
        self.capacity - self.background_rate
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ServiceSpec<T> {
    /// Source rate `R` per epoch, Mbps.
    pub rate_trace: Vec<T>,
    /// QoS level `q`.
    pub qos_level: usize,
}

/// Per-link source rates `r_j = R x_j / |x|`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateDistribution<T> {
    pub rates: Vec<T>,
    /// `|x| = 0` with `R > 0`: nothing can be carried this epoch.
    pub degenerate: bool,
}

pub fn distribute_rate<T: Scalar>(rate: T, x: &BandwidthAllocation<T>) -> RateDistribution<T> {
    let total = x.total();
    if total > T::zero() {
        RateDistribution {
            rates: x.as_slice().iter().map(|&xj| rate * xj / total).collect(),
            degenerate: false,
        }
    } else {
        RateDistribution {
            rates: vec![T::zero(); x.links()],
            degenerate: rate > T::zero(),
        }
    }
}

/// Clamps each link's allocation to the available headroom.
pub fn effective_allocation<T: Scalar>(headroom: &[T], x: &BandwidthAllocation<T>) -> Result<BandwidthAllocation<T>> {
    x.check_links(headroom.len())?;
    Ok(BandwidthAllocation::new(
        x.as_slice()
            .iter()
            .zip(headroom)
            .map(|(&xj, &h)| xj.min(h.max(T::zero())))
            .collect(),
    ))
}

/// Measured ERAB for one service alone on `links`.
pub fn transmit<T: Scalar>(links: &[LinkSpec<T>], x: &BandwidthAllocation<T>, rate: T) -> Result<T> {
    let headroom: Vec<T> = links.iter().map(LinkSpec::headroom).collect();
    let eff = effective_allocation(&headroom, x)?;
    compute_erab(eff.total(), rate)
}

#[derive(Clone, Debug)]
pub struct Simulator<T> {
    links: Vec<LinkSpec<T>>,
    /// Optional per-epoch background rates, `[epoch][link]`. Overrides the
    /// static background of each link while it lasts.
    background_trace: Option<Vec<Vec<T>>>,
    services: Vec<ServiceSpec<T>>,
    epoch: usize,
    noise: Option<(Normal<f64>, ChaCha8Rng)>,
}

impl<T: Scalar> Simulator<T> {
    pub fn new(links: Vec<LinkSpec<T>>, services: Vec<ServiceSpec<T>>) -> Result<Self> {
        if links.is_empty() {
            return Err(QosError::invalid("simulator needs at least one link"));
        }
        for l in &links {
            l.validate()?;
        }
        for (i, s) in services.iter().enumerate() {
            if s.rate_trace.iter().any(|r| !(*r >= T::zero()) || !r.is_finite()) {
                return Err(QosError::invalid(format!("service {i} has a negative or non-finite rate")));
            }
        }
        Ok(Simulator {
            links,
            background_trace: None,
            services,
            epoch: 0,
            noise: None,
        })
    }

    pub fn with_background_trace(mut self, trace: Vec<Vec<T>>) -> Result<Self> {
        for (t, row) in trace.iter().enumerate() {
            if row.len() != self.links.len() {
                return Err(QosError::DimensionMismatch {
                    expected: self.links.len(),
                    found: row.len(),
                });
            }
            for (l, &bg) in self.links.iter().zip(row) {
                LinkSpec::new(l.capacity, bg).map_err(|e| QosError::invalid(format!("background epoch {t}: {e}")))?;
            }
        }
        self.background_trace = Some(trace);
        Ok(self)
    }

    /// Additive Gaussian noise on every measured ERAB (std in Mbps).
    pub fn with_noise(mut self, std_dev: f64, seed: u64) -> Result<Self> {
        if std_dev > 0.0 {
            let normal = Normal::new(0.0, std_dev).map_err(|e| QosError::invalid(e.to_string()))?;
            self.noise = Some((normal, ChaCha8Rng::seed_from_u64(seed)));
        } else if std_dev < 0.0 || std_dev.is_nan() {
            return Err(QosError::invalid("noise std must be >= 0"));
        }
        Ok(self)
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn links(&self) -> &[LinkSpec<T>] {
        &self.links
    }

    pub fn services(&self) -> &[ServiceSpec<T>] {
        &self.services
    }

    /// Links as seen in the current epoch, background trace applied.
    pub fn current_links(&self) -> Vec<LinkSpec<T>> {
        match self.background_trace.as_ref().and_then(|t| t.get(self.epoch)) {
            Some(row) => self
                .links
                .iter()
                .zip(row)
                .map(|(l, &bg)| LinkSpec {
                    capacity: l.capacity,
                    background_rate: bg,
                })
                .collect(),
            None => self.links.clone(),
        }
    }

    /// Whether every service trace still has a rate for the current epoch.
    pub fn has_next(&self) -> bool {
        !self.services.is_empty() && self.services.iter().all(|s| self.epoch < s.rate_trace.len())
    }

    /// Measures one epoch for the given allocations without touching any
    /// controller. Returns `(rate, ERAB)` per service.
    pub fn measure(&mut self, allocations: &[&BandwidthAllocation<T>]) -> Result<Vec<(T, T)>> {
        if allocations.len() != self.services.len() {
            return Err(QosError::invalid(format!(
                "{} allocations for {} services",
                allocations.len(),
                self.services.len()
            )));
        }
        let links = self.current_links();
        let mut headroom: Vec<T> = links.iter().map(LinkSpec::headroom).collect();
        let mut out = Vec::with_capacity(allocations.len());
        for (svc, x) in self.services.iter().zip(allocations) {
            let rate = svc.rate_trace[self.epoch];
            let eff = effective_allocation(&headroom, x)?;
            for (h, used) in headroom.iter_mut().zip(eff.as_slice()) {
                *h = *h - *used;
            }
            let mut erab = compute_erab(eff.total(), rate)?;
            if let Some((normal, rng)) = self.noise.as_mut() {
                erab = erab + T::lit(normal.sample(rng));
            }
            out.push((rate, erab));
        }
        Ok(out)
    }

    /// Advances every service by one epoch. `None` once any trace is exhausted.
    pub fn run_epoch(&mut self, controllers: &mut [Controller<T>]) -> Result<Option<Vec<TransmissionOutcome<T>>>> {
        if controllers.len() != self.services.len() {
            return Err(QosError::invalid(format!(
                "{} controllers for {} services",
                controllers.len(),
                self.services.len()
            )));
        }
        if !self.has_next() {
            return Ok(None);
        }
        let allocations: Vec<BandwidthAllocation<T>> =
            controllers.iter().map(|c| c.current().allocation.clone()).collect();
        let refs: Vec<&BandwidthAllocation<T>> = allocations.iter().collect();
        let measured = self.measure(&refs)?;
        let mut outcomes = Vec::with_capacity(controllers.len());
        for (c, (rate, erab)) in controllers.iter_mut().zip(measured) {
            let (_, outcome) = c.step(erab, rate)?;
            outcomes.push(outcome);
        }
        self.epoch += 1;
        Ok(Some(outcomes))
    }
}
