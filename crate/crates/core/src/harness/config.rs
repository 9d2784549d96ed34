//! Scenario files.
//!
//! A scenario is one TOML document; unknown keys anywhere are rejected.
//! Rate and background traces are CSV files (header row, one column per
//! service or per link, one row per epoch, Mbps) referenced relative to the
//! scenario file, or inline arrays.
//!
//! ```toml
//! run_length = 40
//! rng_seed = 7
//!
//! [qos]
//! levels = 12
//! thresholds = [-11.25, -8.75, -6.25, -3.75, -1.25, 1.25, 3.75, 6.25, 8.75, 11.25, 13.75]
//! targets = [7, 9, 11]
//! sigma2 = 200.0
//! capacity = 31
//!
//! [grid]
//! delta = 1.25
//! max_per_link = [50.0, 30.0]
//!
//! [[links]]
//! capacity = 300.0
//! background_rate = 40.0
//!
//! [[links]]
//! capacity = 300.0
//! background_rate = 40.0
//!
//! [[services]]
//! qos_level = 2
//!
//! [traces]
//! rates = "rates.csv"
//!
//! [predictor]
//! kind = "grnn_bounded"
//!
//! [seed]
//! records = 16
//! nominal_rate = 40.0
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::baselines::PredictorKind;
use crate::controller::QosConfig;
use crate::error::{QosError, Result};
use crate::grnn::KernelParams;
use crate::netsim::{LinkSpec, ServiceSpec};
use crate::profile::Profile;
use crate::search::SearchGrid;
use crate::Level;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub run_length: usize,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default = "default_timing_repeats")]
    pub timing_repeats: usize,
    pub qos: QosSection,
    pub grid: GridSection,
    pub links: Vec<LinkSection>,
    pub services: Vec<ServiceSection>,
    #[serde(default)]
    pub traces: TraceSection,
    #[serde(default)]
    pub predictor: PredictorSection,
    pub seed: SeedSection,
    #[serde(default)]
    pub compare: Vec<VariantSection>,
}

fn default_timing_repeats() -> usize {
    5
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QosSection {
    pub levels: Level,
    pub thresholds: Vec<f64>,
    pub targets: Vec<Level>,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    pub capacity: usize,
    #[serde(default)]
    pub min_kernel_sum: f64,
}

fn default_sigma2() -> f64 {
    KernelParams::<f64>::DEFAULT_SIGMA2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub delta: f64,
    pub max_per_link: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub capacity: f64,
    #[serde(default)]
    pub background_rate: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceSection {
    pub qos_level: usize,
    /// Inline rate trace; otherwise the service's column of `traces.rates`.
    pub rates: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSection {
    pub rates: Option<PathBuf>,
    pub background: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictorSection {
    pub kind: String,
    pub knn_k: Option<usize>,
}

impl Default for PredictorSection {
    fn default() -> Self {
        PredictorSection {
            kind: PredictorKind::GrnnBounded.tag().to_string(),
            knn_k: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSection {
    pub path: Option<PathBuf>,
    pub records: Option<usize>,
    pub nominal_rate: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSection {
    pub label: String,
    pub kind: String,
    pub knn_k: Option<usize>,
    /// Overrides `qos.capacity` for this variant.
    pub capacity: Option<usize>,
}

/// How each service's initial profile is obtained.
#[derive(Clone, Debug, PartialEq)]
pub enum SeedSpec {
    Profile(Profile<f64>),
    /// Service `i` is seeded with `rng_seed + i`.
    Generate { records: usize, nominal_rate: f64 },
}

/// One predictor configuration in a comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct Variant {
    pub label: String,
    pub kind: PredictorKind,
    pub capacity: usize,
}

/// A fully resolved scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub qos: QosConfig<f64>,
    pub links: Vec<LinkSpec<f64>>,
    pub services: Vec<ServiceSpec<f64>>,
    /// `[epoch][link]`.
    pub background_trace: Option<Vec<Vec<f64>>>,
    pub predictor: PredictorKind,
    pub run_length: usize,
    pub seed: SeedSpec,
    pub rng_seed: u64,
    pub noise_std: f64,
    /// Repetitions when timing the final search; the minimum is reported.
    /// Zero reports the single in-loop measurement.
    pub timing_repeats: usize,
    pub variants: Vec<Variant>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| file_err(path, e))?;
        let file: ScenarioFile = toml::from_str(&text).map_err(|e| file_err(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        file.resolve(base).map_err(|e| file_err(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        self.qos.validate()?;
        let n = self.qos.grid.links();
        if self.links.len() != n {
            return Err(QosError::config(format!("{} links declared, grid has {n}", self.links.len())));
        }
        if self.services.is_empty() {
            return Err(QosError::config("at least one service is required"));
        }
        for (i, s) in self.services.iter().enumerate() {
            self.qos
                .target(s.qos_level)
                .map_err(|e| QosError::config(format!("service {i}: {e}")))?;
            if s.rate_trace.len() < self.run_length {
                return Err(QosError::config(format!(
                    "service {i}: rate trace has {} epochs, run_length is {}",
                    s.rate_trace.len(),
                    self.run_length
                )));
            }
        }
        if let Some(bg) = &self.background_trace {
            if bg.len() < self.run_length {
                return Err(QosError::config(format!(
                    "background trace has {} epochs, run_length is {}",
                    bg.len(),
                    self.run_length
                )));
            }
        }
        match &self.seed {
            SeedSpec::Profile(p) => {
                if p.links() != n || p.levels() != self.qos.levels {
                    return Err(QosError::config("seed profile does not match the grid links or level count"));
                }
            }
            SeedSpec::Generate { records, .. } if *records == 0 => {
                return Err(QosError::config("seed.records must be at least 1"));
            }
            SeedSpec::Generate { .. } => {}
        }
        if !(self.noise_std >= 0.0) {
            return Err(QosError::config("noise_std must be >= 0"));
        }
        Ok(())
    }
}

fn file_err(path: &Path, e: impl std::fmt::Display) -> QosError {
    QosError::File {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

impl ScenarioFile {
    pub fn resolve(self, base: &Path) -> Result<Scenario> {
        let grid = SearchGrid::new(self.grid.delta, self.grid.max_per_link).map_err(|e| QosError::config(format!("grid: {e}")))?;
        let kernel = KernelParams::new(self.qos.sigma2).map_err(|e| QosError::config(format!("qos.sigma2: {e}")))?;
        let qos = QosConfig {
            levels: self.qos.levels,
            thresholds: self.qos.thresholds,
            targets: self.qos.targets,
            kernel,
            grid,
            capacity: self.qos.capacity,
            min_kernel_sum: self.qos.min_kernel_sum,
        };
        let links = self
            .links
            .iter()
            .enumerate()
            .map(|(i, l)| LinkSpec::new(l.capacity, l.background_rate).map_err(|e| QosError::config(format!("links[{i}]: {e}"))))
            .collect::<Result<Vec<_>>>()?;

        let rate_columns = match &self.traces.rates {
            Some(p) => Some(read_trace(&base.join(p))?),
            None => None,
        };
        let mut services = Vec::with_capacity(self.services.len());
        for (i, s) in self.services.into_iter().enumerate() {
            let rate_trace = match (s.rates, &rate_columns) {
                (Some(r), _) => r,
                (None, Some(cols)) => cols
                    .get(i)
                    .cloned()
                    .ok_or_else(|| QosError::config(format!("services[{i}]: rate trace has no column {}", i + 1)))?,
                (None, None) => {
                    return Err(QosError::config(format!(
                        "services[{i}]: no inline rates and no traces.rates file"
                    )))
                }
            };
            services.push(ServiceSpec {
                rate_trace,
                qos_level: s.qos_level,
            });
        }
        let background_trace = match &self.traces.background {
            Some(p) => Some(transpose(read_trace(&base.join(p))?)),
            None => None,
        };

        let seed = match (self.seed.path, self.seed.records, self.seed.nominal_rate) {
            (Some(p), None, None) => {
                let path = base.join(p);
                let text = fs::read_to_string(&path).map_err(|e| file_err(&path, e))?;
                SeedSpec::Profile(Profile::load(&text).map_err(|e| file_err(&path, e))?)
            }
            (None, Some(records), Some(nominal_rate)) => SeedSpec::Generate { records, nominal_rate },
            _ => {
                return Err(QosError::config(
                    "seed: set either `path` or both `records` and `nominal_rate`",
                ))
            }
        };
        let predictor = PredictorKind::from_tag(&self.predictor.kind, self.predictor.knn_k)?;
        let variants = self
            .compare
            .into_iter()
            .map(|v| {
                Ok(Variant {
                    kind: PredictorKind::from_tag(&v.kind, v.knn_k)?,
                    capacity: v.capacity.unwrap_or(qos.capacity),
                    label: v.label,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let scenario = Scenario {
            qos,
            links,
            services,
            background_trace,
            predictor,
            run_length: self.run_length,
            seed,
            rng_seed: self.rng_seed,
            noise_std: self.noise_std,
            timing_repeats: self.timing_repeats,
            variants,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Reads a trace CSV into columns.
pub fn read_trace(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| file_err(path, e))?;
    let width = reader.headers().map_err(|e| file_err(path, e))?.len();
    let mut columns = vec![Vec::new(); width];
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| file_err(path, e))?;
        for (col, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| file_err(path, format!("row {}, column {}: bad rate `{field}`", row + 1, col + 1)))?;
            if !(v >= 0.0) || !v.is_finite() {
                return Err(file_err(path, format!("row {}, column {}: rate must be >= 0", row + 1, col + 1)));
            }
            columns[col].push(v);
        }
    }
    Ok(columns)
}

/// Writes columns as a trace CSV with the given header names.
pub fn write_trace(path: &Path, header: &[&str], columns: &[Vec<f64>]) -> Result<()> {
    let rows = columns.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = header.join(",");
    out.push('\n');
    for r in 0..rows {
        let row: Vec<String> = columns.iter().map(|c| c.get(r).map_or(String::new(), |v| v.to_string())).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| file_err(path, e))
}

fn transpose(columns: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let rows = columns.iter().map(Vec::len).min().unwrap_or(0);
    (0..rows).map(|r| columns.iter().map(|c| c[r]).collect()).collect()
}
