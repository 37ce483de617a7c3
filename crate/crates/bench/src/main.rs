use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use parareal::perf_model::calibrate;
use parareal_bench::{
    config::DEFAULT_AMPLITUDE, equivalence_suite, error_study, run_benchmark, BenchError, BenchmarkConfig,
    ExecutorChoice, SchemeLevel,
};

/// Parareal benchmark on the 3D viscous Burgers equation.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    #[arg(long, default_value_t = 40)]
    nx: usize,
    #[arg(long, default_value_t = 40)]
    ny: usize,
    #[arg(long, default_value_t = 40)]
    nz: usize,
    /// Viscosity.
    #[arg(long, default_value_t = 0.02)]
    nu: f64,
    /// Final time.
    #[arg(long, default_value_t = 1.0)]
    tend: f64,
    #[arg(long, default_value_t = 1.0 / 192.0)]
    coarse_dt: f64,
    #[arg(long, default_value_t = 1.0 / 240.0)]
    fine_dt: f64,
    #[arg(long, default_value_t = 24)]
    slices: usize,
    #[arg(long, default_value_t = 4)]
    iters: usize,
    #[arg(long, value_enum, default_value_t = ExecutorChoice::Shared)]
    executor: ExecutorChoice,
    /// Scale of the product-of-sines initial condition.
    #[arg(long, default_value_t = DEFAULT_AMPLITUDE)]
    amplitude: f64,
    #[arg(long, value_enum, default_value_t = SchemeLevel::Low)]
    coarse_scheme: SchemeLevel,
    #[arg(long, value_enum, default_value_t = SchemeLevel::High)]
    fine_scheme: SchemeLevel,
    /// Repetitions of the timed run, or of each equivalence trial.
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON report path; printed to stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Only measure the coarse and fine cost per slice.
    #[arg(long)]
    calibrate: bool,
    /// Only measure discretization errors and Parareal defects.
    #[arg(long)]
    error_study: bool,
    /// Run the randomized executor equivalence suite with this many trials.
    #[arg(long, value_name = "N")]
    equivalence_trials: Option<usize>,
}

impl Cli {
    fn config(&self) -> BenchmarkConfig {
        BenchmarkConfig {
            grid: [self.nx, self.ny, self.nz],
            nu: self.nu,
            t_end: self.tend,
            coarse_dt: self.coarse_dt,
            fine_dt: self.fine_dt,
            slices: self.slices,
            iterations: self.iters,
            executor: self.executor,
            coarse_scheme: self.coarse_scheme,
            fine_scheme: self.fine_scheme,
            amplitude: self.amplitude,
            seed: self.seed,
            repetitions: self.reps,
            report: self.report.clone(),
            csv: self.csv.clone(),
            ..BenchmarkConfig::default()
        }
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), BenchError> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: &Cli) -> Result<(), BenchError> {
    if let Some(trials) = cli.equivalence_trials {
        let summary = equivalence_suite(trials, cli.reps, cli.seed)?;
        print_json(&summary)?;
        summary.into_result()?;
        return Ok(());
    }
    let cfg = cli.config();
    if cli.calibrate {
        let pcfg = cfg.parareal_config()?;
        let q0 = cfg.initial_state()?;
        let cal = calibrate(&q0, &pcfg, cfg.repetitions.max(3))?;
        if let Some(w) = &cal.warning {
            eprintln!("warning: {w}");
        }
        return print_json(&serde_json::json!({
            "c_c": cal.model.c_c(),
            "c_f": cal.model.c_f(),
            "ratio": cal.model.ratio(),
            "timer_resolution": cal.timer_resolution,
        }));
    }
    if cli.error_study {
        return print_json(&error_study(&cfg)?);
    }
    let report = run_benchmark(&cfg)?;
    if report.oversubscribed {
        eprintln!(
            "warning: {} workers on {} physical cores; measured speedup suppressed",
            cfg.workers(),
            report.environment.physical_cores
        );
    }
    if cfg.report.is_none() {
        print_json(&report)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
