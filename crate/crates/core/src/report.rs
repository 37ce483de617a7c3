//! Per-worker phase timelines and the result record every executor returns.

use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Predict,
    Fine,
    /// Blocked on a receive, the ordered token, a hand-off, or a barrier.
    Wait,
    Correction,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::Predict, Phase::Fine, Phase::Wait, Phase::Correction];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Predict => "predict",
            Phase::Fine => "fine",
            Phase::Wait => "wait",
            Phase::Correction => "correction",
        }
    }
}

/// One timed interval, in seconds since the start of the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEvent {
    pub phase: Phase,
    /// Parareal iteration; 0 for the prediction.
    pub iteration: usize,
    pub start: f64,
    pub end: f64,
}

impl PhaseEvent {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WorkerTimeline {
    pub worker: usize,
    pub events: Vec<PhaseEvent>,
}

impl WorkerTimeline {
    pub fn total(&self, phase: Phase) -> f64 {
        self.events
            .iter()
            .filter(|e| e.phase == phase)
            .map(PhaseEvent::duration)
            .sum()
    }

    pub fn first(&self, phase: Phase) -> Option<&PhaseEvent> {
        self.events.iter().find(|e| e.phase == phase)
    }

    pub fn last(&self, phase: Phase) -> Option<&PhaseEvent> {
        self.events.iter().rev().find(|e| e.phase == phase)
    }
}

/// Records phase intervals for one worker against a shared epoch.
pub(crate) struct Recorder {
    epoch: Instant,
    timeline: WorkerTimeline,
}

impl Recorder {
    pub(crate) fn new(epoch: Instant, worker: usize) -> Self {
        Self {
            epoch,
            timeline: WorkerTimeline {
                worker,
                events: Vec::new(),
            },
        }
    }

    pub(crate) fn time<T>(&mut self, phase: Phase, iteration: usize, f: impl FnOnce() -> T) -> T {
        let start = self.epoch.elapsed().as_secs_f64();
        let out = f();
        let end = self.epoch.elapsed().as_secs_f64();
        self.timeline.events.push(PhaseEvent {
            phase,
            iteration,
            start,
            end,
        });
        out
    }

    pub(crate) fn finish(self) -> WorkerTimeline {
        self.timeline
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExecutorKind {
    Serial,
    Message,
    Shared,
    SharedNonPipelined,
}

impl ExecutorKind {
    pub const ALL: [ExecutorKind; 4] = [
        ExecutorKind::Serial,
        ExecutorKind::Message,
        ExecutorKind::Shared,
        ExecutorKind::SharedNonPipelined,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExecutorKind::Serial => "serial",
            ExecutorKind::Message => "msg",
            ExecutorKind::Shared => "shared",
            ExecutorKind::SharedNonPipelined => "shared-nopipe",
        }
    }
}

/// Outcome of one Parareal run.
#[derive(Debug, Clone)]
pub struct ExecutionReport<S> {
    pub executor: ExecutorKind,
    /// `q^K_P`, the approximation at the final time.
    pub final_state: S,
    /// `q^k_P` for `k = 0..=K`.
    pub end_iterates: Vec<S>,
    pub timelines: Vec<WorkerTimeline>,
    /// Point-to-point payloads moved between workers.
    pub messages: usize,
    /// Global barriers crossed, counted once per barrier episode.
    pub barriers: usize,
    pub wall_clock: f64,
}

impl<S> ExecutionReport<S> {
    pub fn phase_total(&self, worker: usize, phase: Phase) -> f64 {
        self.timelines
            .iter()
            .find(|t| t.worker == worker)
            .map_or(0.0, |t| t.total(phase))
    }
}
