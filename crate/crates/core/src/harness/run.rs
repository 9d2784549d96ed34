//! Closed-loop scenario execution and output files.
//!
//! Everything written to `log.csv`, `metrics.csv`, `plot.csv`,
//! `comparison.csv` and the final profiles is a deterministic function of the
//! scenario and its rng seed. Wall-clock measurements go only to files whose
//! name contains `timing`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use crate::baselines::PredictorKind;
use crate::controller::{Controller, EpochRecord};
use crate::error::{QosError, Result};
use crate::netsim::Simulator;
use crate::profile::Profile;
use crate::search::search;

use super::config::{Scenario, SeedSpec, Variant};
use super::metrics::{MetricsReport, SeriesPoint};
use super::seed::seed_profile_generate;

#[derive(Clone, Debug)]
pub struct ServiceRun {
    pub qos_level: usize,
    pub records: Vec<EpochRecord<f64>>,
    pub final_profile: Profile<f64>,
    pub metrics: MetricsReport,
}

#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub label: String,
    pub predictor: PredictorKind,
    pub capacity: usize,
    pub services: Vec<ServiceRun>,
}

/// The initial profile for service `index`.
pub fn seed_for(scenario: &Scenario, index: usize) -> Result<Profile<f64>> {
    match &scenario.seed {
        SeedSpec::Profile(p) => Ok(p.clone()),
        SeedSpec::Generate { records, nominal_rate } => seed_profile_generate(
            &scenario.qos.grid,
            &scenario.qos.thresholds,
            *records,
            *nominal_rate,
            scenario.rng_seed.wrapping_add(index as u64),
        ),
    }
}

pub fn build_controllers(scenario: &Scenario, kind: PredictorKind, capacity: usize) -> Result<Vec<Controller<f64>>> {
    let mut qos = scenario.qos.clone();
    qos.capacity = capacity;
    scenario
        .services
        .iter()
        .enumerate()
        .map(|(i, svc)| Controller::with_predictor(qos.clone(), seed_for(scenario, i)?, svc.qos_level, kind))
        .collect()
}

pub fn build_simulator(scenario: &Scenario) -> Result<Simulator<f64>> {
    let services = scenario
        .services
        .iter()
        .map(|s| {
            let mut s = s.clone();
            s.rate_trace.truncate(scenario.run_length);
            s
        })
        .collect();
    let mut sim = Simulator::new(scenario.links.clone(), services)?;
    if let Some(bg) = &scenario.background_trace {
        sim = sim.with_background_trace(bg.clone())?;
    }
    sim.with_noise(scenario.noise_std, scenario.rng_seed)
}

pub fn run_scenario(scenario: &Scenario) -> Result<RunArtifacts> {
    run_variant(
        scenario,
        &Variant {
            label: scenario.predictor.to_string(),
            kind: scenario.predictor,
            capacity: scenario.qos.capacity,
        },
    )
}

pub fn run_variant(scenario: &Scenario, variant: &Variant) -> Result<RunArtifacts> {
    scenario.validate()?;
    let mut controllers = build_controllers(scenario, variant.kind, variant.capacity)?;
    let mut sim = build_simulator(scenario)?;
    while sim.run_epoch(&mut controllers)?.is_some() {}

    let services = controllers
        .iter()
        .map(|c| {
            let mut metrics = MetricsReport::from_records(c.log());
            if !c.log().is_empty() {
                metrics.final_search_time_ms = time_final_search(c, scenario.timing_repeats)?;
            }
            Ok(ServiceRun {
                qos_level: c.qos_level(),
                records: c.log().to_vec(),
                final_profile: c.profile().clone(),
                metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunArtifacts {
        label: variant.label.clone(),
        predictor: variant.kind,
        capacity: variant.capacity,
        services,
    })
}

/// Re-times the search the controller ran after its last update (same
/// profile, grid and target) and returns the fastest of `repeats` runs,
/// after one untimed warm-up.
fn time_final_search(c: &Controller<f64>, repeats: usize) -> Result<f64> {
    if repeats == 0 {
        return Ok(c.log().last().map_or(0.0, |r| r.search_ms));
    }
    let run = || search(&c.config().grid, c.profile(), c.predictor(), c.target());
    run()?;
    let mut best = f64::INFINITY;
    for _ in 0..repeats {
        let t = Instant::now();
        run()?;
        best = best.min(t.elapsed().as_secs_f64() * 1e3);
    }
    Ok(best)
}

/// Runs every variant on the same traces and seeds, one after another so
/// timings do not interfere.
pub fn compare_predictors(scenario: &Scenario, variants: &[Variant]) -> Result<Vec<RunArtifacts>> {
    if variants.is_empty() {
        return Err(QosError::config("no predictor variants to compare"));
    }
    variants.iter().map(|v| run_variant(scenario, v)).collect()
}

pub fn format_log(run: &RunArtifacts) -> String {
    let n = run
        .services
        .first()
        .and_then(|s| s.final_profile.records().first())
        .map_or(0, |r| r.allocation.links());
    let mut out = String::from("service,epoch");
    for j in 1..=n {
        let _ = write!(out, ",x{j}");
    }
    out.push_str(",total,rate,erab,response,feasible_found,eviction_fallback,low_confidence,profile_size,kernel_evals\n");
    for (s, svc) in run.services.iter().enumerate() {
        for r in &svc.records {
            let _ = write!(out, "{s},{}", r.outcome.epoch);
            for v in r.outcome.applied_allocation.as_slice() {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(
                out,
                ",{},{},{},{},{},{},{},{},{}",
                r.total,
                r.outcome.source_rate,
                r.outcome.erab,
                r.outcome.response,
                r.feasible_found as u8,
                r.eviction_fallback as u8,
                r.low_confidence as u8,
                r.profile_size,
                r.kernel_evals
            );
        }
    }
    out
}

const METRICS_HEADER: &str = "label,predictor,capacity,service,qos_level,epochs,avg_rab,avg_dlr,avg_bw_variation,mean_erab,count_rab,count_dlr\n";

fn metrics_rows(run: &RunArtifacts, out: &mut String) {
    for (s, svc) in run.services.iter().enumerate() {
        let m = &svc.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{s},{},{},{},{},{},{},{},{}",
            run.label,
            run.predictor,
            run.capacity,
            svc.qos_level,
            m.epochs,
            m.avg_rab,
            m.avg_dlr,
            m.avg_bw_variation,
            m.mean_erab,
            m.count_rab,
            m.count_dlr
        );
    }
}

pub fn format_metrics(runs: &[RunArtifacts]) -> String {
    let mut out = METRICS_HEADER.to_string();
    for run in runs {
        metrics_rows(run, &mut out);
    }
    out
}

pub fn format_timing(runs: &[RunArtifacts]) -> String {
    let mut out = String::from("label,service,epoch,search_ms,final_search_ms\n");
    for run in runs {
        for (s, svc) in run.services.iter().enumerate() {
            for r in &svc.records {
                let _ = writeln!(out, "{},{s},{},{},", run.label, r.outcome.epoch, r.search_ms);
            }
            let _ = writeln!(out, "{},{s},final,,{}", run.label, svc.metrics.final_search_time_ms);
        }
    }
    out
}

/// `epoch, rate` then one total-bandwidth column per run, for service
/// `service` of each run.
pub fn format_plot(runs: &[RunArtifacts], service: usize) -> String {
    let mut out = String::from("epoch,rate");
    for run in runs {
        let _ = write!(out, ",total_{}", run.label);
    }
    out.push('\n');
    let epochs = runs.iter().filter_map(|r| r.services.get(service)).map(|s| s.records.len()).max().unwrap_or(0);
    for t in 0..epochs {
        let rate = runs
            .iter()
            .filter_map(|r| r.services.get(service)?.records.get(t))
            .map(|r| r.outcome.source_rate)
            .next()
            .unwrap_or(f64::NAN);
        let _ = write!(out, "{t},{rate}");
        for run in runs {
            match run.services.get(service).and_then(|s| s.records.get(t)) {
                Some(r) => {
                    let _ = write!(out, ",{}", r.total);
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| QosError::File {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Writes `log.csv`, `metrics.csv`, `plot.csv`, `timing.csv` and one
/// `profile_final_<service>.csv` per service into `dir`.
pub fn write_run(dir: &Path, run: &RunArtifacts) -> Result<()> {
    fs::create_dir_all(dir)?;
    write(&dir.join("log.csv"), &format_log(run))?;
    write(&dir.join("metrics.csv"), &format_metrics(std::slice::from_ref(run)))?;
    write(&dir.join("timing.csv"), &format_timing(std::slice::from_ref(run)))?;
    let mut plot = String::from("service,epoch,rate,total,erab\n");
    for (s, svc) in run.services.iter().enumerate() {
        for r in &svc.records {
            let _ = writeln!(plot, "{s},{},{},{},{}", r.outcome.epoch, r.outcome.source_rate, r.total, r.outcome.erab);
        }
    }
    write(&dir.join("plot.csv"), &plot)?;
    for (s, svc) in run.services.iter().enumerate() {
        write(&dir.join(format!("profile_final_{s}.csv")), &svc.final_profile.save())?;
    }
    Ok(())
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Writes `comparison.csv`, `comparison_timing.csv`, `plot.csv` (service 0
/// of every run) and each run's files under a subdirectory named after its
/// label.
pub fn write_comparison(dir: &Path, runs: &[RunArtifacts]) -> Result<()> {
    fs::create_dir_all(dir)?;
    write(&dir.join("comparison.csv"), &format_metrics(runs))?;
    let mut timing = String::from("label,predictor,capacity,service,final_search_ms\n");
    for run in runs {
        for (s, svc) in run.services.iter().enumerate() {
            let _ = writeln!(
                timing,
                "{},{},{},{s},{}",
                run.label, run.predictor, run.capacity, svc.metrics.final_search_time_ms
            );
        }
    }
    write(&dir.join("comparison_timing.csv"), &timing)?;
    write(&dir.join("plot.csv"), &format_plot(runs, 0))?;
    for run in runs {
        write_run(&dir.join(sanitize(&run.label)), run)?;
    }
    Ok(())
}

/// Rebuilds per-service metrics from a `log.csv` text alone.
pub fn metrics_from_log(text: &str) -> Result<Vec<MetricsReport>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| parse(0, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse(1, format!("missing column `{name}`")))
    };
    let (c_service, c_epoch, c_total, c_rate, c_erab) =
        (col("service")?, col("epoch")?, col("total")?, col("rate")?, col("erab")?);
    let mut series: Vec<Vec<SeriesPoint>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse(line, e))?;
        let field = |c: usize| rec.get(c).ok_or_else(|| parse(line, "short row"));
        let num = |c: usize| -> Result<f64> { field(c)?.parse().map_err(|_| parse(line, "bad number")) };
        let service: usize = field(c_service)?.parse().map_err(|_| parse(line, "bad service"))?;
        let epoch: usize = field(c_epoch)?.parse().map_err(|_| parse(line, "bad epoch"))?;
        if series.len() <= service {
            series.resize_with(service + 1, Vec::new);
        }
        series[service].push(SeriesPoint {
            epoch,
            rate: num(c_rate)?,
            total: num(c_total)?,
            erab: num(c_erab)?,
        });
    }
    Ok(series.into_iter().map(MetricsReport::from_series).collect())
}

fn parse(line: usize, e: impl std::fmt::Display) -> QosError {
    QosError::Parse {
        line,
        record: None,
        message: e.to_string(),
    }
}
