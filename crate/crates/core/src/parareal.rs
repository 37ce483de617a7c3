//! Parareal arithmetic shared by every executor, and the sequential oracle.
//!
//! With starting values `q^k_p` at `t_p = p T / P`, the iteration is
//!
//! ```text
//! q^0_{p+1} = G(q^0_p)
//! q^k_{p+1} = G(q^k_p) + F(q^{k-1}_p) - G(q^{k-1}_p)
//! ```
//!
//! The bracketed difference is stored per slice as `dq`, so each iteration
//! needs one fine and one coarse propagation per slice. Executors call
//! [`fine_difference`] and [`correct`] for every update so their results are
//! bitwise comparable with [`serial_parareal`].

use std::time::Instant;

use crate::error::{Error, Result};
use crate::integrators::{Propagate, State, TimeSlice};
use crate::report::{ExecutionReport, ExecutorKind, Phase, Recorder};

#[derive(Debug, Clone)]
pub struct PararealConfig<C, F> {
    t_end: f64,
    slices: usize,
    iterations: usize,
    pub coarse: C,
    pub fine: F,
    /// Hint for executors that support both schedules.
    pub pipelined: bool,
}

impl<C, F> PararealConfig<C, F> {
    pub fn new(t_end: f64, slices: usize, iterations: usize, coarse: C, fine: F) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::param(format!("final time must be positive, got {t_end}")));
        }
        if slices == 0 {
            return Err(Error::param("need at least one time slice"));
        }
        if t_end / slices as f64 <= 0.0 {
            return Err(Error::param("slice length underflows"));
        }
        Ok(Self {
            t_end,
            slices,
            iterations,
            coarse,
            fine,
            pipelined: true,
        })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn slices(&self) -> usize {
        self.slices
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn slice(&self, p: usize) -> Result<TimeSlice> {
        TimeSlice::uniform(self.t_end, self.slices, p)
    }
}

/// Every slice-boundary value of every iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateHistory<S> {
    /// `boundaries[k][p] = q^k_p` for `k = 0..=K`, `p = 0..=P`.
    pub boundaries: Vec<Vec<S>>,
}

impl<S> IterateHistory<S> {
    pub fn iterations(&self) -> usize {
        self.boundaries.len().saturating_sub(1)
    }

    /// `q^k_P` for each `k`.
    pub fn end_values(&self) -> impl Iterator<Item = &S> {
        self.boundaries.iter().filter_map(|b| b.last())
    }
}

/// `dq = fine - q_c`.
pub fn fine_difference<S: State>(fine: &S, q_c: &S) -> S {
    let mut dq = fine.clone();
    dq.axpy(-1.0, q_c);
    dq
}

/// Coarse-propagates the new starting value and applies the stored correction.
///
/// Returns `(G(q_start) + dq, G(q_start))`.
pub fn correct<S: State, C: Propagate<S> + ?Sized>(
    q_start: &S,
    dq: &S,
    slice: &TimeSlice,
    coarse: &C,
) -> Result<(S, S)> {
    let q_c = coarse.propagate(q_start, slice)?;
    let mut q_next = q_c.clone();
    q_next.axpy(1.0, dq);
    Ok((q_next, q_c))
}

/// Coarse starting value of slice `p`: `q0` swept through slices `0..p`.
pub fn coarse_start<S, C, F>(q0: &S, cfg: &PararealConfig<C, F>, p: usize) -> Result<S>
where
    S: State,
    C: Propagate<S>,
{
    let mut q = q0.clone();
    for j in 0..p {
        q = cfg.coarse.propagate(&q, &cfg.slice(j)?).map_err(|e| e.at(0, j))?;
    }
    Ok(q)
}

/// Initial coarse sweep: `q^0_p` for `p = 0..P`.
pub fn predict<S, C, F>(q0: &S, cfg: &PararealConfig<C, F>) -> Result<Vec<S>>
where
    S: State,
    C: Propagate<S>,
{
    let mut starts = Vec::with_capacity(cfg.slices);
    starts.push(q0.clone());
    for p in 1..cfg.slices {
        let next = cfg
            .coarse
            .propagate(&starts[p - 1], &cfg.slice(p - 1)?)
            .map_err(|e| e.at(0, p - 1))?;
        starts.push(next);
    }
    Ok(starts)
}

/// Fine solution at every slice boundary `t_0..=t_P`, computed serially.
pub fn fine_trajectory<S, C, F>(q0: &S, cfg: &PararealConfig<C, F>) -> Result<Vec<S>>
where
    S: State,
    F: Propagate<S>,
{
    let mut out = Vec::with_capacity(cfg.slices + 1);
    out.push(q0.clone());
    for p in 0..cfg.slices {
        let next = cfg.fine.propagate(&out[p], &cfg.slice(p)?)?;
        out.push(next);
    }
    Ok(out)
}

/// Sequential Parareal: the reference every concurrent executor must reproduce.
pub fn serial_parareal<S, C, F>(q0: &S, cfg: &PararealConfig<C, F>) -> Result<IterateHistory<S>>
where
    S: State,
    C: Propagate<S>,
    F: Propagate<S>,
{
    run_oracle(q0, cfg, None)
}

/// Serial oracle packaged like a concurrent executor's result.
pub fn run_serial<S, C, F>(q0: &S, cfg: &PararealConfig<C, F>) -> Result<ExecutionReport<S>>
where
    S: State,
    C: Propagate<S>,
    F: Propagate<S>,
{
    let epoch = Instant::now();
    let mut rec = Recorder::new(epoch, 0);
    let history = run_oracle(q0, cfg, Some(&mut rec))?;
    let wall_clock = epoch.elapsed().as_secs_f64();
    let end_iterates: Vec<S> = history.end_values().cloned().collect();
    Ok(ExecutionReport {
        executor: ExecutorKind::Serial,
        final_state: end_iterates.last().cloned().expect("history has iterate 0"),
        end_iterates,
        timelines: vec![rec.finish()],
        messages: 0,
        barriers: 0,
        wall_clock,
    })
}

fn timed<T>(rec: &mut Option<&mut Recorder>, phase: Phase, k: usize, f: impl FnOnce() -> T) -> T {
    match rec {
        Some(r) => r.time(phase, k, f),
        None => f(),
    }
}

fn run_oracle<S, C, F>(q0: &S, cfg: &PararealConfig<C, F>, mut rec: Option<&mut Recorder>) -> Result<IterateHistory<S>>
where
    S: State,
    C: Propagate<S>,
    F: Propagate<S>,
{
    let slices = cfg.slices;

    // q_c[p] = G(q^{k}_p), the coarse value of the latest iterate
    let (mut current, mut q_c) = timed(&mut rec, Phase::Predict, 0, || -> Result<_> {
        let mut starts = predict(q0, cfg)?;
        let last = cfg
            .coarse
            .propagate(&starts[slices - 1], &cfg.slice(slices - 1)?)
            .map_err(|e| e.at(0, slices - 1))?;
        starts.push(last);
        let q_c: Vec<S> = starts[1..].to_vec();
        Ok((starts, q_c))
    })?;

    let mut boundaries = Vec::with_capacity(cfg.iterations + 1);
    boundaries.push(current.clone());

    for k in 1..=cfg.iterations {
        let dq = timed(&mut rec, Phase::Fine, k, || -> Result<Vec<S>> {
            (0..slices)
                .map(|p| {
                    let fine = cfg
                        .fine
                        .propagate(&current[p], &cfg.slice(p)?)
                        .map_err(|e| e.at(k, p))?;
                    Ok(fine_difference(&fine, &q_c[p]))
                })
                .collect()
        })?;

        timed(&mut rec, Phase::Correction, k, || -> Result<()> {
            let mut next = Vec::with_capacity(slices + 1);
            next.push(q0.clone());
            for p in 0..slices {
                let (q_next, q_c_new) =
                    correct(&next[p], &dq[p], &cfg.slice(p)?, &cfg.coarse).map_err(|e| e.at(k, p))?;
                q_c[p] = q_c_new;
                next.push(q_next);
            }
            current = next;
            Ok(())
        })?;
        boundaries.push(current.clone());
    }

    Ok(IterateHistory { boundaries })
}

/// `‖a - reference‖∞ / ‖reference‖∞` for any state.
pub fn relative_error<S: State>(a: &S, reference: &S) -> Result<f64> {
    let scale = reference.max_abs();
    if scale == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(a.max_abs_diff(reference) / scale)
}

/// Relative defect of `q^k_P` against the serial fine solution at `T`, per iteration.
pub fn defect<S: State>(history: &IterateHistory<S>, fine_reference: &S) -> Result<Vec<f64>> {
    history
        .end_values()
        .map(|q| relative_error(q, fine_reference))
        .collect()
}

/// Relative defect at every slice boundary: `out[k][p]` compares `q^k_p` with `fine[p]`.
pub fn boundary_defects<S: State>(history: &IterateHistory<S>, fine: &[S]) -> Result<Vec<Vec<f64>>> {
    history
        .boundaries
        .iter()
        .map(|row| {
            if row.len() != fine.len() {
                return Err(Error::param(format!(
                    "{} boundary values but {} reference values",
                    row.len(),
                    fine.len()
                )));
            }
            row.iter().zip(fine).map(|(q, f)| relative_error(q, f)).collect()
        })
        .collect()
}
