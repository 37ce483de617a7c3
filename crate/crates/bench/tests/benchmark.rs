//! Library-level checks of the benchmark driver, error study and
//! equivalence suite.

use parareal::exec_shared::{Fault, SharedOptions};
use parareal_bench::equivalence::{equivalence_suite_with, run_trial, TrialConfig};
use parareal_bench::report::{read_csv, write_csv, CsvRow};
use parareal_bench::{equivalence_suite, error_study, run_benchmark, BenchmarkConfig, ExecutorChoice, SchemeLevel};

fn small(executor: ExecutorChoice) -> BenchmarkConfig {
    BenchmarkConfig {
        grid: [16; 3],
        t_end: 0.08,
        coarse_dt: 0.01,
        fine_dt: 0.005,
        slices: 4,
        iterations: 2,
        executor,
        repetitions: 2,
        ..BenchmarkConfig::default()
    }
}

#[test]
fn all_executors_report_identical_defects() {
    let reports: Vec<_> = ExecutorChoice::ALL
        .iter()
        .map(|&e| run_benchmark(&small(e)).unwrap())
        .collect();
    let reference = &reports[0];
    assert_eq!(reference.defects.len(), 3);
    for r in &reports[1..] {
        for (a, b) in r.defects.iter().zip(&reference.defects) {
            assert!((a - b).abs() <= 1e-14, "{:?}: {a} vs {b}", r.config.executor);
        }
    }
}

#[test]
fn report_is_deterministic_apart_from_timings() {
    let cfg = small(ExecutorChoice::Shared);
    let a = run_benchmark(&cfg).unwrap();
    let b = run_benchmark(&cfg).unwrap();
    assert_eq!(a.defects, b.defects);
    assert_eq!(a.checksum, b.checksum);
    assert_eq!((a.messages, a.barriers), (b.messages, b.barriers));
    assert_eq!(a.projection.memory_bytes, b.projection.memory_bytes);
    assert!(a.defects.iter().all(|d| d.is_finite()));
    assert!(a
        .wall_clock
        .samples
        .iter()
        .chain(&a.baseline.samples)
        .all(|t| *t >= 0.0));
    for p in &a.phases {
        assert!(p.predict >= 0.0 && p.fine >= 0.0 && p.correction >= 0.0 && p.wait >= 0.0);
    }
}

#[test]
fn speedup_is_suppressed_when_oversubscribed() {
    let r = run_benchmark(&small(ExecutorChoice::Msg)).unwrap();
    let over = 4 > r.environment.physical_cores;
    assert_eq!(r.oversubscribed, over);
    assert_eq!(r.speedup.is_none(), over);
}

#[test]
fn degenerate_single_slice_run() {
    let cfg = BenchmarkConfig {
        grid: [12; 3],
        t_end: 0.05,
        coarse_dt: 0.005,
        fine_dt: 0.005,
        coarse_scheme: SchemeLevel::High,
        slices: 1,
        iterations: 1,
        executor: ExecutorChoice::Serial,
        repetitions: 3,
        ..BenchmarkConfig::default()
    };
    let r = run_benchmark(&cfg).unwrap();
    assert!(r.defects[1] <= 1e-15, "{:?}", r.defects);
    // prediction, fine sweep and correction each cost one serial run
    assert!(r.speedup.unwrap() < 1.0, "{:?}", r.speedup);
}

#[test]
fn csv_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    let rows = vec![
        CsvRow {
            slices: 8,
            runtime_s: 0.123_456_789_012_345_67,
            speedup: Some(1.0 / 3.0),
            s_np: 3.428_571_428_571_428_5,
            s_p: 5.106_382_978_723_404,
            defect_final: 1.5e-5,
        },
        CsvRow {
            slices: 24,
            runtime_s: 1e-300,
            speedup: None,
            s_np: f64::MIN_POSITIVE,
            s_p: 0.1 + 0.2,
            defect_final: 0.0,
        },
    ];
    write_csv(&rows, &path).unwrap();
    assert_eq!(read_csv(&path).unwrap(), rows);
}

#[test]
fn error_study_with_identical_levels() {
    let cfg = BenchmarkConfig {
        grid: [10; 3],
        t_end: 0.1,
        coarse_dt: 0.01,
        fine_dt: 0.01,
        coarse_scheme: SchemeLevel::High,
        slices: 2,
        iterations: 1,
        ..BenchmarkConfig::default()
    };
    let study = error_study(&cfg).unwrap();
    assert_eq!(study.e_coarse, study.e_fine);
    assert!(study.defects[1] <= 1e-14);
}

#[test]
fn fine_error_is_third_order_in_time() {
    let cfg = |fine_dt| BenchmarkConfig {
        grid: [16; 3],
        t_end: 0.2,
        coarse_dt: 0.02,
        fine_dt,
        slices: 2,
        iterations: 1,
        ..BenchmarkConfig::default()
    };
    let coarse_step = error_study(&cfg(0.01)).unwrap();
    let fine_step = error_study(&cfg(0.005)).unwrap();
    let ratio = coarse_step.e_fine / fine_step.e_fine;
    assert!((4.0..=16.0).contains(&ratio), "e_fine ratio {ratio}");
}

#[test]
fn reference_setup_error_study() {
    let study = error_study(&BenchmarkConfig::default()).unwrap();
    println!(
        "e_fine = {:.3e}, e_coarse = {:.3e}, defects = {:?}",
        study.e_fine, study.e_coarse, study.defects
    );
    assert!(study.e_fine.is_finite() && study.e_coarse.is_finite());
    assert!(study.e_coarse / study.e_fine > 100.0);
}

#[test]
fn equivalence_suite_passes_on_correct_build() {
    let summary = equivalence_suite(3, 2, 99).unwrap();
    assert!(summary.passed(), "{:?}", summary.failures);
    assert_eq!(summary.runs, 3 * 2 * 4);
    assert!(summary.max_rel_diff <= 1e-14);
}

#[test]
fn tiny_trial_is_fast() {
    let trial = TrialConfig {
        seed: 0,
        trial: 0,
        nu: 0.02,
        grid: [8, 9, 10],
        slices: 2,
        iterations: 2,
        coarse_steps: 1,
        fine_steps: 2,
    };
    let start = std::time::Instant::now();
    let (worst, failures) = run_trial(&trial, 1, &SharedOptions::default()).unwrap();
    assert!(failures.is_empty() && worst <= 1e-14);
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

/// Breaking the ordered correction section must be caught by the suite.
#[test]
fn mutation_skipped_ordered_section_is_detected() {
    let broken = SharedOptions {
        fault: Some(Fault::SkipOrderedToken),
        ..SharedOptions::default()
    };
    let mut detected = false;
    for seed in 0..10 {
        let summary = equivalence_suite_with(1, 10, seed, &broken).unwrap();
        if !summary.passed() {
            detected = true;
            let err = summary.into_result().unwrap_err();
            assert_eq!(err.exit_code(), 4);
            assert!(err.to_string().contains("replay"));
            break;
        }
    }
    assert!(detected, "fault went unnoticed in 100 repetitions");
}

#[test]
fn mutation_skipped_handoff_is_detected() {
    let broken = SharedOptions {
        fault: Some(Fault::SkipHandoff),
        ..SharedOptions::default()
    };
    let detected = (0..10).any(|seed| !equivalence_suite_with(1, 10, seed, &broken).unwrap().passed());
    assert!(detected, "fault went unnoticed in 100 repetitions");
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    fn any_finite() -> impl Strategy<Value = f64> {
        any::<f64>().prop_filter("finite", |v| v.is_finite())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn csv_rows_round_trip(
            rows in prop::collection::vec(
                (1usize..10_000, any_finite(), prop::option::of(any_finite()), any_finite(), any_finite(), any_finite()),
                1..8,
            )
        ) {
            let rows: Vec<CsvRow> = rows
                .into_iter()
                .map(|(slices, runtime_s, speedup, s_np, s_p, defect_final)| CsvRow {
                    slices, runtime_s, speedup, s_np, s_p, defect_final,
                })
                .collect();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("rows.csv");
            write_csv(&rows, &path).unwrap();
            prop_assert_eq!(read_csv(&path).unwrap(), rows);
        }

        #[test]
        fn step_counts_are_whole_or_rejected(slices in 1usize..48, coarse in 1usize..16, fine in 1usize..16) {
            let cfg = BenchmarkConfig {
                t_end: 1.0,
                slices,
                coarse_dt: 1.0 / (slices * coarse) as f64,
                fine_dt: 1.0 / (slices * fine) as f64,
                ..BenchmarkConfig::default()
            };
            prop_assert_eq!(cfg.steps_per_slice().unwrap(), (coarse, fine));
            let off = BenchmarkConfig { fine_dt: cfg.fine_dt * 1.37, ..cfg };
            prop_assert!(off.steps_per_slice().is_err());
        }
    }
}
