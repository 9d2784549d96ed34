//! GRNN-based QoS bandwidth management.
//!
//! A service's past deliveries are kept in a bounded [`Profile`] of
//! `(allocation, response level)` records. A general regression neural
//! network predicts the response level of any candidate allocation, an
//! exhaustive grid search picks the cheapest allocation predicted to meet
//! the service's QoS target, and every measured outcome is fed back into
//! the profile with class-aware replacement once the profile is full.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`). The
//! aliases at the crate root fix the scalar to `f64`, which is what the
//! experiment harness and CLI use.

pub mod allocation;
pub mod baselines;
pub mod controller;
pub mod error;
pub mod grnn;
pub mod harness;
pub mod netsim;
pub mod profile;
pub mod scalar;
pub mod search;
pub mod verify;

pub use allocation::BandwidthAllocation;
pub use baselines::{knn_predict, unbounded_update, AnyPredictor, Knn, PredictorKind};
pub use controller::{compute_erab, quantize, Controller, EpochRecord, QosConfig, TransmissionOutcome};
pub use error::{QosError, Result};
pub use grnn::{predict, squared_distance, variation_bound, Grnn, KernelParams, Prediction, Predictor};
pub use netsim::{distribute_rate, transmit, LinkSpec, ServiceSpec, Simulator};
pub use profile::{classify, Profile, ProfileRecord, ResponseClass, UpdateOutcome};
pub use scalar::Scalar;
pub use search::{membership, membership_c_form, search, AllocationResult, CForm, SearchGrid};

/// A response level in `1..=L`.
pub type Level = u32;

pub type Allocation = BandwidthAllocation<f64>;
pub type Kernel = KernelParams<f64>;
pub type GrnnPredictor = Grnn<f64>;
pub type Pred = Prediction<f64>;
pub type ServiceProfile = Profile<f64>;
pub type Record = ProfileRecord<f64>;
pub type Grid = SearchGrid<f64>;
pub type SearchResult = AllocationResult<f64>;
pub type Config = QosConfig<f64>;
pub type QosController = Controller<f64>;
pub type Outcome = TransmissionOutcome<f64>;
pub type Link = LinkSpec<f64>;
pub type Service = ServiceSpec<f64>;
pub type Sim = Simulator<f64>;
