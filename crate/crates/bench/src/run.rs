use std::time::Instant;

use parareal::exec_shared::{run_shared_with, SharedOptions};
use parareal::integrators::propagate_slices;
use parareal::parareal::{defect, relative_error, serial_parareal};
use parareal::perf_model::{calibrate, projected_memory, speedup_nonpipelined, speedup_pipelined};
use parareal::{ExecutionReport, Field3D, GridSpec};
use serde::{Deserialize, Serialize};

use crate::config::{BenchmarkConfig, BurgersConfig, ExecutorChoice};
use crate::report::{write_csv, CostSummary, Environment, Projection, RunReport, Timing, WorkerPhases, SCHEMA_VERSION};
use crate::{checksum, BenchError};

const CALIBRATION_REPS: usize = 5;

/// Fields a serial fine run keeps alive: the state, two RK3 stage values,
/// one right-hand side and the stage being formed.
const SERIAL_WORKING_FIELDS: usize = 5;

/// Estimated bytes one serial run needs for its field data.
pub fn serial_footprint(grid: GridSpec) -> f64 {
    (SERIAL_WORKING_FIELDS * grid.len() * std::mem::size_of::<f64>()) as f64
}

/// Runs one executor without the deadlock watchdog: a long slice must
/// not be mistaken for a hang while timing.
fn timed_run(
    executor: ExecutorChoice,
    q0: &Field3D,
    cfg: &BurgersConfig,
) -> parareal::Result<ExecutionReport<Field3D>> {
    let unwatched = |pipelined| SharedOptions {
        pipelined,
        watchdog: None,
        ..SharedOptions::default()
    };
    match executor {
        ExecutorChoice::Shared => run_shared_with(q0, cfg, &unwatched(true)),
        ExecutorChoice::SharedNopipe => run_shared_with(q0, cfg, &unwatched(false)),
        other => parareal::execute(other.kind(), q0, cfg),
    }
}

/// Times the configured executor against the serial fine solver and writes
/// the report and CSV if paths are configured.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<RunReport, BenchError> {
    if cfg.iterations == 0 {
        return Err(BenchError::Config("benchmarks need at least one iteration".into()));
    }
    let pcfg = cfg.parareal_config()?;
    let grid = cfg.grid_spec()?;
    let q0 = cfg.initial_state()?;

    let mut baseline = Vec::with_capacity(cfg.repetitions);
    let mut fine_end = q0.clone();
    for _ in 0..cfg.repetitions {
        let start = Instant::now();
        fine_end = propagate_slices(&pcfg.fine, &q0, cfg.t_end, cfg.slices, cfg.slices)?;
        baseline.push(start.elapsed().as_secs_f64());
    }
    let baseline = Timing::from_samples(baseline);
    let cal = calibrate(&q0, &pcfg, CALIBRATION_REPS)?;

    let mut samples = Vec::with_capacity(cfg.repetitions);
    let mut last: Option<ExecutionReport<Field3D>> = None;
    for rep in 0..cfg.repetitions {
        let run = timed_run(cfg.executor, &q0, &pcfg)?;
        samples.push(run.wall_clock);
        if let Some(prev) = &last {
            if prev.end_iterates != run.end_iterates {
                return Err(BenchError::Equivalence(format!(
                    "repetition {rep} of the {} executor is not bitwise identical to repetition 0",
                    cfg.executor.kind().name()
                )));
            }
        }
        last = Some(run);
    }
    let run = last.expect("at least one repetition");

    let defects = run
        .end_iterates
        .iter()
        .map(|q| relative_error(q, &fine_end))
        .collect::<parareal::Result<Vec<f64>>>()?;
    let wall_clock = Timing::from_samples(samples);
    let environment = Environment::detect();
    let oversubscribed = cfg.workers() > environment.physical_cores;
    let speedup = (!oversubscribed).then(|| baseline.median / wall_clock.median);
    let serial_bytes = serial_footprint(grid);

    let report = RunReport {
        schema: SCHEMA_VERSION,
        config: cfg.clone(),
        phases: run.timelines.iter().map(WorkerPhases::from).collect(),
        checksum: checksum(&run.final_state),
        speedup,
        oversubscribed,
        calibration: CostSummary {
            c_c: cal.model.c_c(),
            c_f: cal.model.c_f(),
            ratio: cal.model.ratio(),
            timer_resolution: cal.timer_resolution,
            warning: cal.warning,
        },
        projection: Projection {
            s_np: speedup_nonpipelined(&cal.model, cfg.slices, cfg.iterations)?,
            s_p: speedup_pipelined(&cal.model, cfg.slices, cfg.iterations)?,
            serial_bytes,
            memory_bytes: projected_memory(serial_bytes, cfg.slices)?,
        },
        messages: run.messages,
        barriers: run.barriers,
        wall_clock,
        baseline,
        defects,
        environment,
    };
    if let Some(path) = &cfg.report {
        report.write_json(path)?;
    }
    if let Some(path) = &cfg.csv {
        write_csv(&[report.csv_row()], path)?;
    }
    Ok(report)
}

/// Discretization errors at `T` against a fine solution with a ten times smaller step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStudy {
    pub reference_dt: f64,
    pub e_fine: f64,
    pub e_coarse: f64,
    /// Parareal against the serial fine solution, `k = 0..=K`.
    pub defects: Vec<f64>,
    /// Parareal against the reference, `k = 0..=K`.
    pub parareal_errors: Vec<f64>,
}

pub fn error_study(cfg: &BenchmarkConfig) -> Result<ErrorStudy, BenchError> {
    let pcfg = cfg.parareal_config()?;
    let q0 = cfg.initial_state()?;
    let (p, t_end) = (cfg.slices, cfg.t_end);

    let reference_prop = pcfg.fine.with_steps(pcfg.fine.steps_per_slice() * 10)?;
    let reference = propagate_slices(&reference_prop, &q0, t_end, p, p)?;
    let fine = propagate_slices(&pcfg.fine, &q0, t_end, p, p)?;
    let coarse = propagate_slices(&pcfg.coarse, &q0, t_end, p, p)?;

    let history = serial_parareal(&q0, &pcfg)?;
    let parareal_errors = history
        .end_values()
        .map(|q| relative_error(q, &reference))
        .collect::<parareal::Result<_>>()?;
    Ok(ErrorStudy {
        reference_dt: cfg.fine_dt / 10.0,
        e_fine: relative_error(&fine, &reference)?,
        e_coarse: relative_error(&coarse, &reference)?,
        defects: defect(&history, &fine)?,
        parareal_errors,
    })
}
