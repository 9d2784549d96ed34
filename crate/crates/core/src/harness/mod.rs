//! Experiment harness: scenario files, seeding, closed-loop runs, metrics
//! and output files. Runs use `f64` throughout.

pub mod config;
pub mod metrics;
pub mod run;
pub mod scenarios;
pub mod seed;

pub use config::{Scenario, SeedSpec, Variant};
pub use metrics::{MetricsReport, SeriesPoint};
pub use run::{
    compare_predictors, format_log, format_metrics, format_plot, format_timing, metrics_from_log, run_scenario,
    run_variant, write_comparison, write_run, RunArtifacts, ServiceRun,
};
pub use seed::seed_profile_generate;
