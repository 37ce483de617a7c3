//! Randomized cross-check of all executors against the serial oracle.
//!
//! Trial `i` of seed `s` draws its parameters from ChaCha8 seeded with `s`
//! on stream `i`, so any single trial can be replayed from `(s, i)` alone,
//! independently of platform and of the other trials.

use std::fmt;

use parareal::exec_msg::run_msg;
use parareal::exec_shared::{run_shared_with, SharedOptions};
use parareal::field::{norm_inf_diff, norm_inf_rel};
use parareal::parareal::run_serial;
use parareal::{ExecutionReport, Field3D, GridSpec, PararealConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{BurgersConfig, InitialCondition, SchemeLevel};
use crate::{initial_condition, BenchError};

/// Largest accepted relative ∞-norm difference between two executors.
pub const TOLERANCE: f64 = 1e-14;

/// Short enough for the explicit coarse level to stay stable on every drawn grid.
const SLICE_LENGTH: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub seed: u64,
    pub trial: u64,
    pub nu: f64,
    pub grid: [usize; 3],
    pub slices: usize,
    pub iterations: usize,
    pub coarse_steps: usize,
    pub fine_steps: usize,
}

impl TrialConfig {
    pub fn draw(seed: u64, trial: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        Self {
            seed,
            trial,
            nu: rng.gen_range(0.005..=0.05),
            grid: [rng.gen_range(8..=20), rng.gen_range(8..=20), rng.gen_range(8..=20)],
            slices: rng.gen_range(2..=8),
            iterations: rng.gen_range(1..=4),
            coarse_steps: rng.gen_range(1..=4),
            fine_steps: rng.gen_range(2..=8),
        }
    }

    pub fn t_end(&self) -> f64 {
        SLICE_LENGTH * self.slices as f64
    }

    pub fn parareal_config(&self) -> Result<BurgersConfig, BenchError> {
        Ok(PararealConfig::new(
            self.t_end(),
            self.slices,
            self.iterations,
            SchemeLevel::Low.propagator(self.nu, self.coarse_steps)?,
            SchemeLevel::High.propagator(self.nu, self.fine_steps)?,
        )?)
    }

    pub fn initial_state(&self) -> Result<Field3D, BenchError> {
        let [nx, ny, nz] = self.grid;
        Ok(initial_condition(
            GridSpec::new(nx, ny, nz)?,
            InitialCondition::ProductSine,
            self.seed,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub config: TrialConfig,
    pub repetition: usize,
    pub detail: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let replay = serde_json::to_string(&self.config).unwrap_or_default();
        write!(f, "repetition {}: {} (replay: {replay})", self.repetition, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceSummary {
    pub trials: usize,
    pub repetitions: usize,
    /// Executor runs compared against each other.
    pub runs: usize,
    pub max_rel_diff: f64,
    pub failures: Vec<Failure>,
}

impl EquivalenceSummary {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// `Err` carrying the first failure, for callers that map to an exit status.
    pub fn into_result(self) -> Result<Self, BenchError> {
        match self.failures.first() {
            None => Ok(self),
            Some(first) => Err(BenchError::Equivalence(format!(
                "{} of {} runs disagree; first: {first}",
                self.failures.len(),
                self.runs
            ))),
        }
    }
}

fn pair_difference(a: &Field3D, b: &Field3D) -> parareal::Result<f64> {
    match norm_inf_rel(a, b) {
        Err(parareal::Error::ZeroReference) => norm_inf_diff(a, b),
        other => other,
    }
}

/// Largest relative difference over all iterates `q^k_P` of two runs.
fn max_difference(a: &[Field3D], b: &[Field3D]) -> Result<f64, String> {
    if a.len() != b.len() {
        return Err(format!("{} vs {} recorded iterates", a.len(), b.len()));
    }
    a.iter().zip(b).try_fold(0.0f64, |acc, (x, y)| {
        pair_difference(x, y).map(|d| acc.max(d)).map_err(|e| e.to_string())
    })
}

/// Runs one trial `repetitions` times and returns the largest difference seen and any failures.
pub fn run_trial(
    trial: &TrialConfig,
    repetitions: usize,
    shared: &SharedOptions,
) -> Result<(f64, Vec<Failure>), BenchError> {
    let cfg = trial.parareal_config()?;
    let q0 = trial.initial_state()?;
    // the oracle is sequential, so one run serves every repetition
    let oracle = run_serial(&q0, &cfg)?;
    let pipelined = SharedOptions {
        pipelined: true,
        ..shared.clone()
    };
    let blocking = SharedOptions {
        pipelined: false,
        ..shared.clone()
    };

    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for repetition in 0..repetitions {
        let runs: [(&str, parareal::Result<ExecutionReport<Field3D>>); 3] = [
            ("msg", run_msg(&q0, &cfg)),
            ("shared", run_shared_with(&q0, &cfg, &pipelined)),
            ("shared-nopipe", run_shared_with(&q0, &cfg, &blocking)),
        ];
        let mut iterates = vec![("serial", &oracle.end_iterates)];
        for (name, run) in &runs {
            match run {
                Ok(report) => iterates.push((name, &report.end_iterates)),
                Err(e) => failures.push(Failure {
                    config: trial.clone(),
                    repetition,
                    detail: format!("{name} executor failed: {e}"),
                }),
            }
        }
        for (i, (name_a, a)) in iterates.iter().enumerate() {
            for (name_b, b) in &iterates[i + 1..] {
                match max_difference(a, b) {
                    Ok(d) if d <= TOLERANCE => worst = worst.max(d),
                    Ok(d) => {
                        worst = worst.max(d);
                        failures.push(Failure {
                            config: trial.clone(),
                            repetition,
                            detail: format!("{name_a} and {name_b} differ by {d:e}"),
                        });
                    }
                    Err(e) => failures.push(Failure {
                        config: trial.clone(),
                        repetition,
                        detail: format!("{name_a} and {name_b} are not comparable: {e}"),
                    }),
                }
            }
        }
    }
    Ok((worst, failures))
}

pub fn equivalence_suite(trials: usize, repetitions: usize, seed: u64) -> Result<EquivalenceSummary, BenchError> {
    equivalence_suite_with(trials, repetitions, seed, &SharedOptions::default())
}

/// As [`equivalence_suite`], with explicit options for the shared-memory executors.
pub fn equivalence_suite_with(
    trials: usize,
    repetitions: usize,
    seed: u64,
    shared: &SharedOptions,
) -> Result<EquivalenceSummary, BenchError> {
    if trials == 0 || repetitions == 0 {
        return Err(BenchError::Config(format!(
            "equivalence suite needs at least one trial and repetition, got {trials} and {repetitions}"
        )));
    }
    let mut summary = EquivalenceSummary {
        trials,
        repetitions,
        runs: 0,
        max_rel_diff: 0.0,
        failures: Vec::new(),
    };
    for trial in 0..trials as u64 {
        let config = TrialConfig::draw(seed, trial);
        let (worst, failures) = run_trial(&config, repetitions, shared)?;
        summary.runs += 4 * repetitions;
        summary.max_rel_diff = summary.max_rel_diff.max(worst);
        summary.failures.extend(failures);
    }
    Ok(summary)
}
