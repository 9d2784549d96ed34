//! Built-in two-link home network scenarios.
//!
//! Both use a 50 + 30 Mbps allocation grid at 1.25 Mbps steps, twelve
//! response levels 2.5 Mbps apart, targets {7, 9, 11}, a 16-record seed
//! labelled at 40 Mbps, and a 40 Mbps background service on each of two
//! 300 Mbps links.

use crate::baselines::PredictorKind;
use crate::controller::QosConfig;
use crate::netsim::{LinkSpec, ServiceSpec};

use super::config::{Scenario, SeedSpec, Variant};

pub const EPOCHS: usize = 40;
pub const SEED_RECORDS: usize = 16;
pub const NOMINAL_RATE: f64 = 40.0;
pub const RNG_SEED: u64 = 2019;

fn base(qos_level: usize, rate_trace: Vec<f64>) -> Scenario {
    Scenario {
        qos: QosConfig::home_network_default(),
        links: vec![LinkSpec::new(300.0, 40.0).unwrap(), LinkSpec::new(300.0, 40.0).unwrap()],
        services: vec![ServiceSpec { rate_trace, qos_level }],
        background_trace: None,
        predictor: PredictorKind::GrnnBounded,
        run_length: EPOCHS,
        seed: SeedSpec::Generate {
            records: SEED_RECORDS,
            nominal_rate: NOMINAL_RATE,
        },
        rng_seed: RNG_SEED,
        noise_std: 0.0,
        timing_repeats: 5,
        variants: Vec::new(),
    }
}

/// 40 Mbps, stepping up to 46 Mbps half way through.
pub fn step_trace() -> Vec<f64> {
    (0..EPOCHS).map(|t| if t < EPOCHS / 2 { 40.0 } else { 46.0 }).collect()
}

/// 40 Mbps with two six-epoch surges to 50 Mbps.
pub fn surge_trace() -> Vec<f64> {
    (0..EPOCHS)
        .map(|t| match t {
            12..=17 | 28..=33 => 50.0,
            _ => 40.0,
        })
        .collect()
}

/// Rate tracking at QoS level `q` under [`step_trace`].
pub fn tracking(q: usize) -> Scenario {
    base(q, step_trace())
}

/// QoS level 2 under [`surge_trace`], with the predictor comparison set:
/// bounded GRNN at S = 16, 31, 46, the kNN baseline and the unbounded GRNN.
pub fn surge() -> Scenario {
    let mut s = base(2, surge_trace());
    s.variants = table_variants();
    s
}

pub fn table_variants() -> Vec<Variant> {
    let v = |label: &str, kind, capacity| Variant {
        label: label.to_string(),
        kind,
        capacity,
    };
    vec![
        v("grnn_S16", PredictorKind::GrnnBounded, 16),
        v("grnn_S31", PredictorKind::GrnnBounded, 31),
        v("grnn_S46", PredictorKind::GrnnBounded, 46),
        v("knn_k5", PredictorKind::Knn { k: PredictorKind::DEFAULT_KNN_K }, 31),
        v("grnn_unbounded", PredictorKind::GrnnUnbounded, 31),
    ]
}
