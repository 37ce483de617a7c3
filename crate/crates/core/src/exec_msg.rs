//! Message-passing executor: one worker per slice, connected in a line by
//! blocking point-to-point channels.
//!
//! Worker `p` runs
//!
//! ```text
//! q   = G(q0, t_p, 0)            // prediction
//! q_c = G(q, t_{p+1}, t_p)
//! for k in 1..=K:
//!     q  = F(q, t_{p+1}, t_p)
//!     dq = q - q_c
//!     q  = recv(p - 1)   or q0 on the first worker
//!     q_c = G(q, t_{p+1}, t_p)
//!     send(q_c + dq, p + 1)      // unless last
//! ```
//!
//! There is no global synchronization; later workers spend longer in the
//! prediction, which staggers the workers into a pipeline.

use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::thread;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::field::SliceBuffers;
use crate::integrators::{Propagate, State};
use crate::parareal::{coarse_start, correct, fine_difference, PararealConfig};
use crate::report::{ExecutionReport, ExecutorKind, Phase, Recorder, WorkerTimeline};

/// FIFO conduit from rank `from` to rank `from + 1`.
///
/// Capacity one: a send completes once the payload is buffered, and a
/// receive blocks until a payload is available.
pub struct RankChannel<S> {
    pub from: usize,
    pub to: usize,
    sender: SyncSender<S>,
    receiver: Receiver<S>,
}

impl<S> RankChannel<S> {
    pub fn endpoints(&self) -> (usize, usize) {
        (self.from, self.to)
    }

    fn split(self) -> (SyncSender<S>, Receiver<S>) {
        (self.sender, self.receiver)
    }
}

/// Line topology: channel `i` connects rank `i` to rank `i + 1`.
pub fn wire_topology<S>(ranks: usize) -> Vec<RankChannel<S>> {
    (1..ranks.max(1))
        .map(|to| {
            let (sender, receiver) = sync_channel(1);
            RankChannel {
                from: to - 1,
                to,
                sender,
                receiver,
            }
        })
        .collect()
}

struct WorkerOutput<S> {
    timeline: WorkerTimeline,
    sent: usize,
    /// Only the last rank fills this: `q^k_P` for each `k`.
    end_iterates: Vec<S>,
}

fn worker<S, C, F>(
    rank: usize,
    q0: &S,
    cfg: &PararealConfig<C, F>,
    epoch: Instant,
    upstream: Option<Receiver<S>>,
    downstream: Option<SyncSender<S>>,
) -> Result<WorkerOutput<S>>
where
    S: State,
    C: Propagate<S>,
    F: Propagate<S>,
{
    let slice = cfg.slice(rank)?;
    let last = rank + 1 == cfg.slices();
    let mut rec = Recorder::new(epoch, rank);
    let mut end_iterates = Vec::new();
    let mut sent = 0;

    let mut bufs = rec.time(Phase::Predict, 0, || -> Result<SliceBuffers<S>> {
        let q = coarse_start(q0, cfg, rank)?;
        let q_c = cfg.coarse.propagate(&q, &slice).map_err(|e| e.at(0, rank))?;
        Ok(SliceBuffers {
            dq: q_c.clone(),
            q,
            q_c,
        })
    })?;
    if last {
        end_iterates.push(bufs.q_c.clone());
    }

    for k in 1..=cfg.iterations() {
        rec.time(Phase::Fine, k, || -> Result<()> {
            bufs.q = cfg.fine.propagate(&bufs.q, &slice).map_err(|e| e.at(k, rank))?;
            bufs.dq = fine_difference(&bufs.q, &bufs.q_c);
            Ok(())
        })?;

        // the fine result is no longer needed once dq is formed
        bufs.q = match &upstream {
            Some(rx) => rec
                .time(Phase::Wait, k, || rx.recv())
                .map_err(|_| Error::Protocol(format!("rank {rank} lost its upstream neighbour in iteration {k}")))?,
            None => q0.clone(),
        };

        // q keeps the starting value for the next fine sweep; the outgoing
        // end value replaces dq
        rec.time(Phase::Correction, k, || -> Result<()> {
            let (q_next, q_c) = correct(&bufs.q, &bufs.dq, &slice, &cfg.coarse).map_err(|e| e.at(k, rank))?;
            bufs.q_c = q_c;
            bufs.dq = q_next;
            Ok(())
        })?;

        if let Some(tx) = &downstream {
            rec.time(Phase::Wait, k, || tx.send(bufs.dq.clone()))
                .map_err(|_| Error::Protocol(format!("rank {rank} lost its downstream neighbour in iteration {k}")))?;
            sent += 1;
        }
        if last {
            end_iterates.push(bufs.dq.clone());
        }
    }

    Ok(WorkerOutput {
        timeline: rec.finish(),
        sent,
        end_iterates,
    })
}

/// Runs Parareal with one concurrent worker per slice exchanging full states.
pub fn run_msg<S, C, F>(q0: &S, cfg: &PararealConfig<C, F>) -> Result<ExecutionReport<S>>
where
    S: State,
    C: Propagate<S>,
    F: Propagate<S>,
{
    let ranks = cfg.slices();
    let mut receivers: Vec<Option<Receiver<S>>> = (0..ranks).map(|_| None).collect();
    let mut senders: Vec<Option<SyncSender<S>>> = (0..ranks).map(|_| None).collect();
    for channel in wire_topology::<S>(ranks) {
        let (from, to) = channel.endpoints();
        let (tx, rx) = channel.split();
        senders[from] = Some(tx);
        receivers[to] = Some(rx);
    }

    let epoch = Instant::now();
    let results: Vec<Result<WorkerOutput<S>>> = thread::scope(|scope| {
        let handles: Vec<_> = receivers
            .into_iter()
            .zip(senders)
            .enumerate()
            .map(|(rank, (rx, tx))| {
                thread::Builder::new()
                    .name(format!("msg-rank-{rank}"))
                    .spawn_scoped(scope, move || worker(rank, q0, cfg, epoch, rx, tx))
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

    let mut outputs = Vec::with_capacity(ranks);
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

    let messages = outputs.iter().map(|o| o.sent).sum();
    let end_iterates = outputs
        .last_mut()
        .map(|o| std::mem::take(&mut o.end_iterates))
        .unwrap_or_default();
    Ok(ExecutionReport {
        executor: ExecutorKind::Message,
        final_state: end_iterates.last().cloned().expect("last rank records iterate 0"),
        end_iterates,
        timelines: outputs.into_iter().map(|o| o.timeline).collect(),
        messages,
        barriers: 0,
        wall_clock,
    })
}
