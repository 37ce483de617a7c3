//! Projected speedup and memory of Parareal, and calibration of the
//! coarse/fine cost pair from timed runs.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::integrators::{Propagate, State};
use crate::parareal::PararealConfig;

/// Cost of one slice with the coarse (`c_c`) and fine (`c_f`) propagator, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    c_c: f64,
    c_f: f64,
}

impl CostModel {
    pub fn new(c_c: f64, c_f: f64) -> Result<Self> {
        if !(c_c > 0.0 && c_c.is_finite() && c_f > 0.0 && c_f.is_finite()) {
            return Err(Error::param(format!(
                "costs must be positive, got c_c={c_c}, c_f={c_f}"
            )));
        }
        Ok(Self { c_c, c_f })
    }

    /// Model with `c_f = 1` and the given ratio `c_c / c_f`.
    pub fn from_ratio(ratio: f64) -> Result<Self> {
        Self::new(ratio, 1.0)
    }

    pub fn c_c(&self) -> f64 {
        self.c_c
    }

    pub fn c_f(&self) -> f64 {
        self.c_f
    }

    pub fn ratio(&self) -> f64 {
        self.c_c / self.c_f
    }
}

fn check_counts(slices: usize, iterations: usize) -> Result<()> {
    if slices == 0 || iterations == 0 {
        return Err(Error::param(format!(
            "speedup model needs P >= 1 and K >= 1, got P={slices}, K={iterations}"
        )));
    }
    Ok(())
}

/// `P c_f / ((1 + K) P c_c + K c_f)`: every iteration pays the full serial coarse sweep.
pub fn speedup_nonpipelined(m: &CostModel, slices: usize, iterations: usize) -> Result<f64> {
    check_counts(slices, iterations)?;
    let (p, k) = (slices as f64, iterations as f64);
    // integer coefficients are exact, so rounding preserves s_p >= s_np
    Ok(p * m.c_f / ((1.0 + k) * p * m.c_c + k * m.c_f))
}

/// `P c_f / (P c_c + K c_c + K c_f)`: only the prediction pays the serial coarse sweep.
pub fn speedup_pipelined(m: &CostModel, slices: usize, iterations: usize) -> Result<f64> {
    check_counts(slices, iterations)?;
    let (p, k) = (slices as f64, iterations as f64);
    Ok(p * m.c_f / ((p + k) * m.c_c + k * m.c_f))
}

/// Memory of `P` concurrent slices when one serial run needs `serial_bytes`.
pub fn projected_memory(serial_bytes: f64, slices: usize) -> Result<f64> {
    if !(serial_bytes > 0.0 && serial_bytes.is_finite()) || slices == 0 {
        return Err(Error::param(format!(
            "memory model needs positive inputs, got {serial_bytes} bytes and P={slices}"
        )));
    }
    Ok(slices as f64 * serial_bytes)
}

/// Summary of repeated timings, in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingStats {
    pub samples: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    pub stddev: f64,
}

impl TimingStats {
    pub fn from_samples(samples: Vec<f64>) -> Self {
        let n = samples.len().max(1) as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
        Self {
            median: median(&samples),
            mean,
            stddev: var.sqrt(),
            samples,
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if 2 * mid == sorted.len() {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Built from the medians.
    pub model: CostModel,
    pub coarse: TimingStats,
    pub fine: TimingStats,
    /// Smallest observable clock increment.
    pub timer_resolution: f64,
    /// Set when a slice costs fewer than 100 timer ticks.
    pub warning: Option<String>,
}

/// Smallest positive difference between consecutive monotonic clock reads.
pub fn timer_resolution() -> f64 {
    let mut best = Duration::MAX;
    for _ in 0..64 {
        let a = Instant::now();
        let mut b = Instant::now();
        while b == a {
            b = Instant::now();
        }
        best = best.min(b - a);
    }
    best.as_secs_f64()
}

/// Times coarse and fine propagation of `q0` over the first slice.
pub fn calibrate<S, C, F>(q0: &S, cfg: &PararealConfig<C, F>, repetitions: usize) -> Result<Calibration>
where
    S: State,
    C: Propagate<S>,
    F: Propagate<S>,
{
    if repetitions < 3 {
        return Err(Error::param(format!(
            "calibration needs at least 3 repetitions, got {repetitions}"
        )));
    }
    let slice = cfg.slice(0)?;
    let time = |prop: &dyn Propagate<S>| -> Result<Vec<f64>> {
        (0..repetitions)
            .map(|_| {
                let start = Instant::now();
                let out = prop.propagate(q0, &slice)?;
                let elapsed = start.elapsed().as_secs_f64();
                std::hint::black_box(out);
                Ok(elapsed)
            })
            .collect()
    };
    let coarse = TimingStats::from_samples(time(&cfg.coarse)?);
    let fine = TimingStats::from_samples(time(&cfg.fine)?);
    let resolution = timer_resolution();
    let cheapest = coarse.median.min(fine.median);
    let warning = (cheapest < 100.0 * resolution).then(|| {
        format!(
            "slice cost {cheapest:.3e} s is below 100 timer ticks ({resolution:.3e} s each); \
             calibrated costs are unreliable"
        )
    });
    // a zero median is possible below timer resolution; clamp to one tick
    let model = CostModel::new(coarse.median.max(resolution), fine.median.max(resolution))?;
    Ok(Calibration {
        model,
        coarse,
        fine,
        timer_resolution: resolution,
        warning,
    })
}
