use std::path::PathBuf;

use clap::ValueEnum;
use parareal::discretization::{AdvectionScheme, DiffusionScheme, RhsConfig};
use parareal::{ExecutorKind, Field3D, GridSpec, PararealConfig, Propagator, Stepper};
use serde::{Deserialize, Serialize};

use crate::{initial_condition, BenchError};

/// Initial amplitude of the reference setup. At 40³ with ν = 0.02 the
/// explicit coarse level sits on its diffusive stability limit and the
/// upwind term tips the grid-scale mode into growth proportional to the
/// local velocity; at unit amplitude the coarse sweep overflows before
/// `T = 1`, while 0.25 keeps that growth below the Parareal defect through
/// four iterations.
pub const DEFAULT_AMPLITUDE: f64 = 0.25;

/// Propagator pair used by every Burgers run.
pub type BurgersConfig = PararealConfig<Propagator<RhsConfig>, Propagator<RhsConfig>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExecutorChoice {
    Serial,
    Msg,
    Shared,
    SharedNopipe,
}

impl ExecutorChoice {
    pub const ALL: [ExecutorChoice; 4] = [
        ExecutorChoice::Serial,
        ExecutorChoice::Msg,
        ExecutorChoice::Shared,
        ExecutorChoice::SharedNopipe,
    ];

    pub fn kind(self) -> ExecutorKind {
        match self {
            ExecutorChoice::Serial => ExecutorKind::Serial,
            ExecutorChoice::Msg => ExecutorKind::Message,
            ExecutorChoice::Shared => ExecutorKind::Shared,
            ExecutorChoice::SharedNopipe => ExecutorKind::SharedNonPipelined,
        }
    }

    /// Threads the executor keeps busy for `slices` time slices.
    pub fn workers(self, slices: usize) -> usize {
        match self {
            ExecutorChoice::Serial => 1,
            _ => slices,
        }
    }
}

/// Discretization bundle for one propagator level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeLevel {
    /// Forward Euler, first-order upwind advection, second-order diffusion.
    Low,
    /// RK3-SSP, WENO5 advection, fourth-order diffusion.
    High,
}

impl SchemeLevel {
    pub fn stepper(self) -> Stepper {
        match self {
            SchemeLevel::Low => Stepper::Euler,
            SchemeLevel::High => Stepper::Rk3Ssp,
        }
    }

    pub fn rhs(self, nu: f64) -> parareal::Result<RhsConfig> {
        match self {
            SchemeLevel::Low => RhsConfig::new(nu, AdvectionScheme::Upwind1, DiffusionScheme::Centered2),
            SchemeLevel::High => RhsConfig::new(nu, AdvectionScheme::Weno5, DiffusionScheme::Centered4),
        }
    }

    pub fn propagator(self, nu: f64, steps: usize) -> parareal::Result<Propagator<RhsConfig>> {
        Propagator::new(self.rhs(nu)?, self.stepper(), steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InitialCondition {
    /// `sin(2πx) sin(2πy) sin(2πz)`.
    ProductSine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    /// Points per direction.
    pub grid: [usize; 3],
    pub nu: f64,
    pub t_end: f64,
    pub coarse_dt: f64,
    pub fine_dt: f64,
    pub slices: usize,
    pub iterations: usize,
    pub executor: ExecutorChoice,
    pub coarse_scheme: SchemeLevel,
    pub fine_scheme: SchemeLevel,
    pub initial: InitialCondition,
    /// Scale applied to the initial condition.
    pub amplitude: f64,
    pub seed: u64,
    pub repetitions: usize,
    pub report: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

impl Default for BenchmarkConfig {
    /// The reference setup: 40³ points, ν = 0.02, T = 1, Δt = 1/192, δt = 1/240, 24 slices, 4 iterations.
    fn default() -> Self {
        Self {
            grid: [40; 3],
            nu: 0.02,
            t_end: 1.0,
            coarse_dt: 1.0 / 192.0,
            fine_dt: 1.0 / 240.0,
            slices: 24,
            iterations: 4,
            executor: ExecutorChoice::Shared,
            coarse_scheme: SchemeLevel::Low,
            fine_scheme: SchemeLevel::High,
            initial: InitialCondition::ProductSine,
            amplitude: DEFAULT_AMPLITUDE,
            seed: 0,
            repetitions: 5,
            report: None,
            csv: None,
        }
    }
}

/// Whole steps of length `dt` in a slice of length `slice`, if they fit exactly.
pub fn whole_steps(slice: f64, dt: f64) -> Option<usize> {
    if !(slice > 0.0 && dt > 0.0 && slice.is_finite() && dt.is_finite()) {
        return None;
    }
    let n = slice / dt;
    let rounded = n.round();
    (rounded >= 1.0 && (n - rounded).abs() <= 1e-9 * rounded.max(1.0)).then_some(rounded as usize)
}

impl BenchmarkConfig {
    pub fn grid_spec(&self) -> Result<GridSpec, BenchError> {
        let [nx, ny, nz] = self.grid;
        Ok(GridSpec::new(nx, ny, nz)?)
    }

    /// Coarse and fine steps per slice.
    pub fn steps_per_slice(&self) -> Result<(usize, usize), BenchError> {
        if self.slices == 0 {
            return Err(BenchError::Config("need at least one time slice".into()));
        }
        let slice = self.t_end / self.slices as f64;
        let steps = |name: &str, dt: f64| {
            whole_steps(slice, dt).ok_or_else(|| {
                BenchError::Config(format!(
                    "slice length T/P = {slice} is not a whole number of {name} steps of {dt} (ratio {})",
                    slice / dt
                ))
            })
        };
        Ok((steps("coarse", self.coarse_dt)?, steps("fine", self.fine_dt)?))
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        self.grid_spec()?;
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(BenchError::Config(format!(
                "viscosity must be non-negative, got {}",
                self.nu
            )));
        }
        if !self.amplitude.is_finite() {
            return Err(BenchError::Config(format!(
                "amplitude must be finite, got {}",
                self.amplitude
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(BenchError::Config(format!(
                "final time must be positive, got {}",
                self.t_end
            )));
        }
        if self.repetitions == 0 {
            return Err(BenchError::Config("need at least one repetition".into()));
        }
        self.steps_per_slice()?;
        Ok(())
    }

    pub fn parareal_config(&self) -> Result<BurgersConfig, BenchError> {
        self.validate()?;
        let (coarse, fine) = self.steps_per_slice()?;
        Ok(PararealConfig::new(
            self.t_end,
            self.slices,
            self.iterations,
            self.coarse_scheme.propagator(self.nu, coarse)?,
            self.fine_scheme.propagator(self.nu, fine)?,
        )?)
    }

    pub fn initial_state(&self) -> Result<Field3D, BenchError> {
        let mut q0 = initial_condition(self.grid_spec()?, self.initial, self.seed);
        q0.as_mut_slice().iter_mut().for_each(|v| *v *= self.amplitude);
        Ok(q0)
    }

    pub fn workers(&self) -> usize {
        self.executor.workers(self.slices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_steps_per_slice() {
        assert_eq!(BenchmarkConfig::default().steps_per_slice().unwrap(), (8, 10));
    }

    #[test]
    fn rejects_fractional_steps() {
        let cfg = BenchmarkConfig {
            fine_dt: 0.003,
            ..BenchmarkConfig::default()
        };
        let err = cfg.validate().unwrap_err();
        assert!(matches!(err, BenchError::Config(_)), "{err}");
        assert!(err.to_string().contains("fine"));
    }

    #[test]
    fn whole_steps_tolerance() {
        assert_eq!(whole_steps(0.1, 0.025), Some(4));
        assert_eq!(whole_steps(1.0 / 24.0, 1.0 / 192.0), Some(8));
        assert_eq!(whole_steps(0.1, 0.03), None);
        assert_eq!(whole_steps(0.1, 0.2), None);
        assert_eq!(whole_steps(0.1, 0.0), None);
    }

    #[test]
    fn initial_state_is_scaled() {
        let cfg = BenchmarkConfig {
            grid: [8; 3],
            ..BenchmarkConfig::default()
        };
        let q0 = cfg.initial_state().unwrap();
        assert_eq!(q0.get(2, 2, 2), DEFAULT_AMPLITUDE);
        let unit = BenchmarkConfig { amplitude: 1.0, ..cfg };
        assert_eq!(unit.initial_state().unwrap().get(2, 2, 2), 1.0);
    }

    #[test]
    fn invalid_grid_is_a_config_error() {
        let cfg = BenchmarkConfig {
            grid: [4, 40, 40],
            ..BenchmarkConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(BenchError::Config(_))));
    }

    #[test]
    fn executor_names_match_cli_spelling() {
        let names: Vec<String> = ExecutorChoice::ALL
            .iter()
            .map(|e| e.to_possible_value().unwrap().get_name().to_owned())
            .collect();
        assert_eq!(names, ["serial", "msg", "shared", "shared-nopipe"]);
        for e in ExecutorChoice::ALL {
            assert_eq!(serde_json::to_string(&e).unwrap(), format!("\"{}\"", e.kind().name()));
        }
    }
}
