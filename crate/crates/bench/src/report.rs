use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use parareal::perf_model::TimingStats;
use parareal::report::{Phase, WorkerTimeline};
use serde::{Deserialize, Serialize};

use crate::config::BenchmarkConfig;
use crate::BenchError;

pub const SCHEMA_VERSION: u32 = 1;

/// Wall-clock statistics in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub samples: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    pub stddev: f64,
}

impl From<TimingStats> for Timing {
    fn from(s: TimingStats) -> Self {
        Self {
            samples: s.samples,
            mean: s.mean,
            median: s.median,
            stddev: s.stddev,
        }
    }
}

impl Timing {
    pub fn from_samples(samples: Vec<f64>) -> Self {
        TimingStats::from_samples(samples).into()
    }
}

/// Seconds one worker spent in each phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerPhases {
    pub worker: usize,
    pub predict: f64,
    pub fine: f64,
    pub correction: f64,
    pub wait: f64,
}

impl From<&WorkerTimeline> for WorkerPhases {
    fn from(t: &WorkerTimeline) -> Self {
        Self {
            worker: t.worker,
            predict: t.total(Phase::Predict),
            fine: t.total(Phase::Fine),
            correction: t.total(Phase::Correction),
            wait: t.total(Phase::Wait),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub c_c: f64,
    pub c_f: f64,
    pub ratio: f64,
    pub timer_resolution: f64,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub s_np: f64,
    pub s_p: f64,
    /// Estimated working set of one serial run.
    pub serial_bytes: f64,
    pub memory_bytes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub logical_cores: usize,
    pub physical_cores: usize,
    pub os: String,
    pub arch: String,
    pub build_id: String,
}

impl Environment {
    pub fn detect() -> Self {
        let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
        Self {
            logical_cores: num_cpus::get(),
            physical_cores: num_cpus::get_physical(),
            os: std::env::consts::OS.to_owned(),
            arch: std::env::consts::ARCH.to_owned(),
            build_id: format!("{} {} ({profile})", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub config: BenchmarkConfig,
    /// Executor runs.
    pub wall_clock: Timing,
    /// Serial fine solver over `[0, T]`.
    pub baseline: Timing,
    /// From the last repetition.
    pub phases: Vec<WorkerPhases>,
    /// Relative ∞-norm of `q^k_P` against the serial fine solution, `k = 0..=K`.
    pub defects: Vec<f64>,
    /// SHA-256 of the final state.
    pub checksum: String,
    /// `None` when the run was oversubscribed.
    pub speedup: Option<f64>,
    pub oversubscribed: bool,
    pub calibration: CostSummary,
    pub projection: Projection,
    pub messages: usize,
    pub barriers: usize,
    pub environment: Environment,
}

impl RunReport {
    pub fn csv_row(&self) -> CsvRow {
        CsvRow {
            slices: self.config.slices,
            runtime_s: self.wall_clock.median,
            speedup: self.speedup,
            s_np: self.projection.s_np,
            s_p: self.projection.s_p,
            defect_final: self.defects.last().copied().unwrap_or(f64::NAN),
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<(), BenchError> {
        let file = create(path)?;
        serde_json::to_writer_pretty(BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self, BenchError> {
        let file = File::open(path).map_err(|source| BenchError::Io {
            path: path.to_owned(),
            source,
        })?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}

/// One plotting row; an empty `speedup` cell means the measurement was suppressed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    #[serde(rename = "P")]
    pub slices: usize,
    pub runtime_s: f64,
    pub speedup: Option<f64>,
    pub s_np: f64,
    pub s_p: f64,
    pub defect_final: f64,
}

fn create(path: &Path) -> Result<File, BenchError> {
    File::create(path).map_err(|source| BenchError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn write_csv(rows: &[CsvRow], path: &Path) -> Result<(), BenchError> {
    let mut writer = csv::Writer::from_writer(create(path)?);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(|source| BenchError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>, BenchError> {
    let mut reader = csv::Reader::from_path(path)?;
    Ok(reader.deserialize().collect::<Result<_, _>>()?)
}
