//! Shared-memory executor with per-slice locks and an ordered correction
//! sweep.
//!
//! All workers share the starting-value buffers `q(p)`; each buffer sits
//! behind its own mutex. Worker `p` runs
//!
//! ```text
//! q(p) = G(q0, t_p, 0); q_c = G(q(p))          // no barrier afterwards
//! for k in 1..=K:
//!     lock p:   q(p) = F(q(p)); dq = q(p) - q_c
//!     ordered (k, p):
//!         if p == 0: lock 0: q(0) = q0
//!         q_c = G(q(p))
//!         if p < P-1: lock p+1: q(p+1) = q_c + dq
//! ```
//!
//! The ordered section is an explicit token chain: worker `p` may enter it
//! for iteration `k` only after worker `p - 1` has left it for iteration `k`.
//! Because nothing stops worker `p` from running ahead of worker `p + 1`,
//! the write into `q(p+1)` additionally waits until worker `p + 1` has
//! finished its fine propagation of iteration `k`; without that hand-off the
//! fresh value could overwrite the one `p + 1` has not consumed yet.
//!
//! Every buffer carries the iteration number of the value it holds, and
//! each read checks it, so a broken protocol surfaces as
//! [`Error::Protocol`] rather than as a silently wrong answer.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex, MutexGuard};
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_utils::CachePadded;

use crate::error::{Error, Result};
use crate::integrators::{Propagate, State};
use crate::parareal::{coarse_start, correct, fine_difference, PararealConfig};
use crate::report::{ExecutionReport, ExecutorKind, Phase, Recorder, WorkerTimeline};

/// Default deadlock watchdog.
pub const DEFAULT_WATCHDOG: Duration = Duration::from_secs(60);

/// How often blocked workers re-check the abort flag.
const POLL: Duration = Duration::from_millis(20);

/// Deliberate protocol breakage for testing the race detection.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Enter the correction section without waiting for the ordered token.
    SkipOrderedToken,
    /// Write `q(p+1)` without waiting for worker `p + 1` to finish its fine step.
    SkipHandoff,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharedOptions {
    /// Global barriers after the prediction and before each correction sweep.
    pub pipelined: bool,
    /// `None` waits forever (benchmark mode).
    pub watchdog: Option<Duration>,
    #[doc(hidden)]
    pub fault: Option<Fault>,
}

impl Default for SharedOptions {
    fn default() -> Self {
        Self {
            pipelined: true,
            watchdog: Some(DEFAULT_WATCHDOG),
            fault: None,
        }
    }
}

impl SharedOptions {
    pub fn non_pipelined() -> Self {
        Self {
            pipelined: false,
            ..Self::default()
        }
    }
}

struct SlotState<S> {
    /// Written first by the owning worker during its prediction.
    value: Option<S>,
    /// Iteration whose starting value `value` holds.
    version: usize,
    /// Last iteration whose fine propagation has completed on this buffer.
    fine_done: usize,
    /// Value was replaced by the fine result and not yet refreshed.
    consumed: bool,
}

/// One shared buffer `q(p)` and its lock.
struct Slot<S> {
    state: Mutex<SlotState<S>>,
    changed: Condvar,
}

/// Ordered-section token per iteration.
struct OrderedToken {
    /// `next[k]` is the worker allowed into the section for iteration `k`.
    next: Mutex<Vec<usize>>,
    changed: Condvar,
}

/// Rendezvous that every worker must reach before any proceeds.
struct Barrier {
    state: Mutex<(usize, usize)>,
    changed: Condvar,
    parties: usize,
    episodes: AtomicUsize,
}

struct Shared<S> {
    slots: Vec<CachePadded<Slot<S>>>,
    token: OrderedToken,
    barrier: Barrier,
    aborted: AtomicBool,
    handoffs: AtomicUsize,
    options: SharedOptions,
    started: Instant,
}

fn lock<T>(m: &Mutex<T>) -> Result<MutexGuard<'_, T>> {
    m.lock()
        .map_err(|_| Error::Protocol("lock poisoned by a failed worker".into()))
}

impl<S> Shared<S> {
    fn new(workers: usize, iterations: usize, options: SharedOptions) -> Self {
        let slots = (0..workers)
            .map(|_| {
                CachePadded::new(Slot {
                    state: Mutex::new(SlotState {
                        value: None,
                        version: 0,
                        fine_done: 0,
                        consumed: false,
                    }),
                    changed: Condvar::new(),
                })
            })
            .collect();
        Self {
            slots,
            token: OrderedToken {
                next: Mutex::new(vec![0; iterations + 1]),
                changed: Condvar::new(),
            },
            barrier: Barrier {
                state: Mutex::new((0, 0)),
                changed: Condvar::new(),
                parties: workers,
                episodes: AtomicUsize::new(0),
            },
            aborted: AtomicBool::new(false),
            handoffs: AtomicUsize::new(0),
            options,
            started: Instant::now(),
        }
    }

    fn abort(&self) {
        self.aborted.store(true, Ordering::SeqCst);
        self.token.changed.notify_all();
        self.barrier.changed.notify_all();
        for slot in &self.slots {
            slot.changed.notify_all();
        }
    }

    /// Blocks on `cv` until `ready` holds, the run aborts, or the watchdog fires.
    fn wait_until<'a, T>(
        &self,
        cv: &Condvar,
        mut guard: MutexGuard<'a, T>,
        k: usize,
        p: usize,
        mut ready: impl FnMut(&T) -> bool,
    ) -> Result<MutexGuard<'a, T>> {
        let deadline = self.options.watchdog.map(|w| Instant::now() + w);
        while !ready(&guard) {
            if self.aborted.load(Ordering::SeqCst) {
                return Err(Error::Aborted { p });
            }
            if let Some(deadline) = deadline {
                if Instant::now() >= deadline {
                    drop(guard);
                    return Err(Error::Deadlock {
                        k,
                        p,
                        dump: self.dump(),
                    });
                }
            }
            guard = cv
                .wait_timeout(guard, POLL)
                .map_err(|_| Error::Protocol("lock poisoned by a failed worker".into()))?
                .0;
        }
        Ok(guard)
    }

    /// Snapshot of the token and buffer states for a watchdog report.
    fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "elapsed: {:.3} s", self.started.elapsed().as_secs_f64());
        match self.token.next.try_lock() {
            Ok(next) => {
                let _ = writeln!(out, "ordered token (next worker per iteration): {:?}", &next[1..]);
            }
            Err(_) => {
                let _ = writeln!(out, "ordered token: locked");
            }
        }
        for (p, slot) in self.slots.iter().enumerate() {
            match slot.state.try_lock() {
                Ok(s) => {
                    let _ = writeln!(
                        out,
                        "q({p}): version {} fine_done {} consumed {} initialized {}",
                        s.version,
                        s.fine_done,
                        s.consumed,
                        s.value.is_some()
                    );
                }
                Err(_) => {
                    let _ = writeln!(out, "q({p}): held");
                }
            }
        }
        out
    }

    fn barrier(&self, k: usize, p: usize) -> Result<()> {
        let b = &self.barrier;
        let mut guard = lock(&b.state)?;
        let generation = guard.1;
        guard.0 += 1;
        if guard.0 == b.parties {
            guard.0 = 0;
            guard.1 += 1;
            b.episodes.fetch_add(1, Ordering::SeqCst);
            b.changed.notify_all();
            return Ok(());
        }
        drop(self.wait_until(&b.changed, guard, k, p, |s| s.1 != generation)?);
        Ok(())
    }

    fn acquire_token(&self, k: usize, p: usize) -> Result<()> {
        if self.options.fault == Some(Fault::SkipOrderedToken) {
            return Ok(());
        }
        let guard = lock(&self.token.next)?;
        drop(self.wait_until(&self.token.changed, guard, k, p, |next| next[k] == p)?);
        Ok(())
    }

    fn release_token(&self, k: usize, p: usize) -> Result<()> {
        let mut next = lock(&self.token.next)?;
        if self.options.fault != Some(Fault::SkipOrderedToken) && next[k] != p {
            return Err(Error::Protocol(format!(
                "worker {p} released the token of iteration {k} held by {}",
                next[k]
            )));
        }
        next[k] = p + 1;
        self.token.changed.notify_all();
        Ok(())
    }
}

struct WorkerOutput<S> {
    timeline: WorkerTimeline,
    end_iterates: Vec<S>,
}

/// Marks the run as aborted if the worker unwinds.
struct AbortOnPanic<'a, S>(&'a Shared<S>);

impl<S> Drop for AbortOnPanic<'_, S> {
    fn drop(&mut self) {
        if thread::panicking() {
            self.0.abort();
        }
    }
}

fn worker<S, C, F>(
    p: usize,
    q0: &S,
    cfg: &PararealConfig<C, F>,
    shared: &Shared<S>,
    epoch: Instant,
) -> Result<WorkerOutput<S>>
where
    S: State,
    C: Propagate<S>,
    F: Propagate<S>,
{
    let _guard = AbortOnPanic(shared);
    let result = worker_body(p, q0, cfg, shared, epoch);
    if result.is_err() {
        shared.abort();
    }
    result
}

fn worker_body<S, C, F>(
    p: usize,
    q0: &S,
    cfg: &PararealConfig<C, F>,
    shared: &Shared<S>,
    epoch: Instant,
) -> Result<WorkerOutput<S>>
where
    S: State,
    C: Propagate<S>,
    F: Propagate<S>,
{
    let slices = cfg.slices();
    let slice = cfg.slice(p)?;
    let last = p + 1 == slices;
    let mut rec = Recorder::new(epoch, p);
    let mut end_iterates = Vec::new();
    let own = &shared.slots[p];
    let handoff = shared.options.fault != Some(Fault::SkipHandoff);

    // private buffers: allocated and first written by this worker
    let mut q_c = rec.time(Phase::Predict, 0, || -> Result<S> {
        let start = coarse_start(q0, cfg, p)?;
        let q_c = cfg.coarse.propagate(&start, &slice).map_err(|e| e.at(0, p))?;
        let mut s = lock(&own.state)?;
        s.value = Some(start);
        s.version = 0;
        own.changed.notify_all();
        Ok(q_c)
    })?;
    if last {
        end_iterates.push(q_c.clone());
    }
    if !shared.options.pipelined {
        rec.time(Phase::Wait, 0, || shared.barrier(0, p))?;
    }

    for k in 1..=cfg.iterations() {
        let mut s = rec.time(Phase::Wait, k, || lock(&own.state))?;
        let dq = rec.time(Phase::Fine, k, || -> Result<S> {
            if s.version != k - 1 || s.consumed {
                return Err(Error::Protocol(format!(
                    "worker {p} found iterate {} (consumed: {}) in q({p}) at the start of iteration {k}",
                    s.version, s.consumed
                )));
            }
            let start = s.value.as_ref().expect("initialized during prediction");
            let fine = cfg.fine.propagate(start, &slice).map_err(|e| e.at(k, p))?;
            let dq = fine_difference(&fine, &q_c);
            s.value = Some(fine);
            s.fine_done = k;
            s.consumed = true;
            Ok(dq)
        })?;
        own.changed.notify_all();
        drop(s);

        if !shared.options.pipelined {
            rec.time(Phase::Wait, k, || shared.barrier(k, p))?;
        }
        rec.time(Phase::Wait, k, || shared.acquire_token(k, p))?;

        let q_next = rec.time(Phase::Correction, k, || -> Result<S> {
            let mut s = lock(&own.state)?;
            if p == 0 {
                s.value = Some(q0.clone());
                s.version = k;
                s.consumed = false;
            }
            if s.version != k || s.consumed {
                return Err(Error::Protocol(format!(
                    "worker {p} corrects iteration {k} from q({p}) holding iterate {} (consumed: {})",
                    s.version, s.consumed
                )));
            }
            let start = s.value.as_ref().expect("initialized during prediction");
            let (q_next, q_c_new) = correct(start, &dq, &slice, &cfg.coarse).map_err(|e| e.at(k, p))?;
            q_c = q_c_new;
            Ok(q_next)
        })?;

        if last {
            end_iterates.push(q_next);
        } else {
            let next = &shared.slots[p + 1];
            let guard = lock(&next.state)?;
            let mut s = if handoff {
                rec.time(Phase::Wait, k, || {
                    shared.wait_until(&next.changed, guard, k, p, |s| s.fine_done >= k)
                })?
            } else {
                guard
            };
            rec.time(Phase::Correction, k, || {
                s.value = Some(q_next);
                s.version = k;
                s.consumed = false;
            });
            next.changed.notify_all();
            shared.handoffs.fetch_add(1, Ordering::Relaxed);
        }
        shared.release_token(k, p)?;
    }

    Ok(WorkerOutput {
        timeline: rec.finish(),
        end_iterates,
    })
}

/// Pipelined shared-memory Parareal with the default watchdog.
pub fn run_shared<S, C, F>(q0: &S, cfg: &PararealConfig<C, F>) -> Result<ExecutionReport<S>>
where
    S: State,
    C: Propagate<S>,
    F: Propagate<S>,
{
    run_shared_with(q0, cfg, &SharedOptions::default())
}

/// Same arithmetic as [`run_shared`] with global barriers after the prediction
/// and between the fine and correction phases of each iteration.
pub fn run_shared_nonpipelined<S, C, F>(q0: &S, cfg: &PararealConfig<C, F>) -> Result<ExecutionReport<S>>
where
    S: State,
    C: Propagate<S>,
    F: Propagate<S>,
{
    run_shared_with(q0, cfg, &SharedOptions::non_pipelined())
}

pub fn run_shared_with<S, C, F>(
    q0: &S,
    cfg: &PararealConfig<C, F>,
    options: &SharedOptions,
) -> Result<ExecutionReport<S>>
where
    S: State,
    C: Propagate<S>,
    F: Propagate<S>,
{
    let workers = cfg.slices();
    let shared = Shared::<S>::new(workers, cfg.iterations(), options.clone());
    let epoch = Instant::now();
    let results: Vec<Result<WorkerOutput<S>>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|p| {
                let shared = &shared;
                thread::Builder::new()
                    .name(format!("shared-worker-{p}"))
                    .spawn_scoped(scope, move || worker(p, q0, cfg, shared, epoch))
                    .expect("failed to spawn worker thread")
            })
            .collect();
        handles
            .into_iter()
            .enumerate()
            .map(|(rank, h)| h.join().unwrap_or(Err(Error::WorkerPanic { rank })))
            .collect()
    });
    let wall_clock = epoch.elapsed().as_secs_f64();

    let mut outputs = Vec::with_capacity(workers);
    let mut errors = Vec::new();
    for result in results {
        match result {
            Ok(out) => outputs.push(out),
            Err(e) => errors.push(e),
        }
    }
    if let Some(e) = Error::root_cause(errors) {
        return Err(e);
    }

    let end_iterates = outputs
        .last_mut()
        .map(|o| std::mem::take(&mut o.end_iterates))
        .unwrap_or_default();
    let messages = shared.handoffs.load(Ordering::Relaxed);
    Ok(ExecutionReport {
        executor: if options.pipelined {
            ExecutorKind::Shared
        } else {
            ExecutorKind::SharedNonPipelined
        },
        final_state: end_iterates.last().cloned().expect("last worker records iterate 0"),
        end_iterates,
        timelines: outputs.into_iter().map(|o| o.timeline).collect(),
        messages,
        barriers: shared.barrier.episodes.load(Ordering::SeqCst),
        wall_clock,
    })
}
