//! Parareal parallel-in-time integration.
//!
//! The numerics live in [`parareal`]; [`exec_msg`] and [`exec_shared`] run
//! the same arithmetic concurrently with one worker per time slice, either
//! exchanging states over point-to-point channels or sharing lock-protected
//! buffers. [`discretization`] and [`field`] provide the 3D viscous Burgers
//! problem used for benchmarking, and [`perf_model`] the projected speedups.

pub mod discretization;
pub mod error;
pub mod exec_msg;
pub mod exec_shared;
pub mod field;
pub mod integrators;
pub mod parareal;
pub mod perf_model;
pub mod report;

pub use error::{Error, Result};
pub use field::{Field3D, GridSpec};
pub use integrators::{Propagate, Propagator, State, Stepper, TimeSlice};
pub use parareal::PararealConfig;
pub use report::{ExecutionReport, ExecutorKind};

/// Runs `cfg` with the chosen executor.
pub fn execute<S, C, F>(kind: ExecutorKind, q0: &S, cfg: &PararealConfig<C, F>) -> Result<ExecutionReport<S>>
where
    S: State,
    C: Propagate<S>,
    F: Propagate<S>,
{
    match kind {
        ExecutorKind::Serial => parareal::run_serial(q0, cfg),
        ExecutorKind::Message => exec_msg::run_msg(q0, cfg),
        ExecutorKind::Shared => exec_shared::run_shared(q0, cfg),
        ExecutorKind::SharedNonPipelined => exec_shared::run_shared_nonpipelined(q0, cfg),
    }
}
