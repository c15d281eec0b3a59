//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use ensemble_gop::analysis::ensemble_threshold_max_n;
use ensemble_gop::cli::bench;
use ensemble_gop::config::{BenchConfig, RunConfig};
use ensemble_gop::descent::{refine, DescentConfig};
use ensemble_gop::ensemble::{prepare_state, run_trials, MeasurementModel, Partition};
use ensemble_gop::mapping::{
    choose_grid_resolution, choose_sharpening_exponent, index_to_midpoint, DiscreteOracle, GridSpec,
};
use ensemble_gop::objective::{ObjectiveSpec, Point};
use ensemble_gop::pipeline::{solve, SolveStatus};
use ensemble_gop::search::{required_trials, run_search, SearchConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MAX_EXHAUSTIVE_BITS: u32 = 10;
const NOISE_STD_REL_TOL: f64 = 0.15;
const NOISE_REPETITIONS: usize = 1000;
const SCHEDULE_MAX_N: u32 = 20;
const SLOPE_TARGET: f64 = 2.0;
const SLOPE_TOL: f64 = 0.1;
const THRESHOLD_DELTA1: f64 = 1e-7;
const THRESHOLD_RANGE: (u64, u64) = (100_000_000, 1_000_000_000);
const THRESHOLD_MIN_BITS: u32 = 27;
const GOLF_EPSILON: f64 = 1.0 / 32.0;
const GOLF_PLACEMENTS: usize = 100;
const NOISY_RUNS: u64 = 1000;
const NOISY_MIN_SUCCESS: f64 = 0.9;
const OPTIMUM_TOL: f64 = 1e-4;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn signal_formula() -> Check {
    let mut cases = 0u64;
    for bits in 1..=MAX_EXHAUSTIVE_BITS {
        let n = 1u64 << bits;
        for q in 0..n {
            let oracle = DiscreteOracle::from_marked(n, &[q]).map_err(|e| e.to_string())?;
            let mut p = n;
            while p >= 1 {
                for j in 0..n / p {
                    let part = Partition::new(j * p, (j + 1) * p).unwrap();
                    let mut state = prepare_state(part);
                    state.apply_oracle(&oracle).map_err(|e| e.to_string())?;
                    let expect = if part.contains(q) {
                        0.5 + 0.5 / p as f64
                    } else {
                        0.5
                    };
                    ensure(state.out_frac_one() == expect, || {
                        format!(
                            "n {n} q {q} [{}, {}): {}",
                            part.lo(),
                            part.hi(),
                            state.out_frac_one()
                        )
                    })?;
                    cases += 1;
                }
                p /= 2;
            }
        }
    }
    Ok(format!("{cases} (partition, mark) pairs exact"))
}

fn noiseless_search() -> Check {
    let mut runs = 0u64;
    let model = MeasurementModel::noiseless();
    let config = SearchConfig::default();
    for bits in 1..=MAX_EXHAUSTIVE_BITS {
        let n = 1u64 << bits;
        for q in 0..n {
            let oracle = DiscreteOracle::from_marked(n, &[q]).unwrap();
            let r =
                run_search(&oracle, &model, &config).map_err(|e| format!("n {n} q {q}: {e}"))?;
            ensure(
                r.found.0 == q
                    && r.trace.len() == bits as usize
                    && r.total_queries == bits as u64 + 1,
                || {
                    format!(
                        "n {n} q {q}: found {} tests {} queries {}",
                        r.found.0,
                        r.trace.len(),
                        r.total_queries
                    )
                },
            )?;
            runs += 1;
        }
    }
    Ok(format!("{runs} searches exact"))
}

fn repetition_law() -> Check {
    let n = 64u64;
    let oracle = DiscreteOracle::from_marked(n, &[5]).unwrap();
    let part = Partition::new(0, n / 2).unwrap();
    let mut worst = 0.0f64;
    for (i, &delta1) in [0.05, 0.1, 0.2].iter().enumerate() {
        for (j, &n_e) in [16u64, 64, 256].iter().enumerate() {
            let model = MeasurementModel::new(delta1, 1000 + (3 * i + j) as u64).unwrap();
            let mut rng = model.rng();
            let means: Vec<f64> = (0..NOISE_REPETITIONS)
                .map(|_| {
                    run_trials(part, &oracle, &model, n_e, &mut rng)
                        .unwrap()
                        .mean_signal
                })
                .collect();
            let k = means.len() as f64;
            let mu = means.iter().sum::<f64>() / k;
            let sd = (means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
            let expect = delta1 / (n_e as f64).sqrt();
            let rel = (sd / expect - 1.0).abs();
            worst = worst.max(rel);
            ensure(rel <= NOISE_STD_REL_TOL, || {
                format!("delta1 {delta1} n_e {n_e}: std {sd:.5} vs {expect:.5}")
            })?;
        }
    }
    Ok(format!("worst relative deviation {:.1}%", 100.0 * worst))
}

fn trial_schedule() -> Check {
    let mut cases = 0;
    for n in 1..=SCHEDULE_MAX_N {
        let big_n = 1u64 << (n + 1);
        for k in 1..=n {
            let got = required_trials(big_n / 2, 0.5f64.powi(k as i32), 1.0);
            let expect = 1u64 << (2 * (n + 1 - k));
            ensure(got == expect, || format!("n {n} k {k}: {got} != {expect}"))?;
            cases += 1;
        }
    }
    Ok(format!("{cases} (n, k) pairs exact"))
}

fn complexity_regimes() -> Check {
    let config = RunConfig {
        bench: BenchConfig {
            bits: (6..=20).collect(),
            delta1: vec![0.0, 0.1],
            runs: 2,
            max_realized_queries: 1_000_000,
        },
        ..RunConfig::default()
    };
    let report = bench(&config).map_err(|e| e.to_string())?;
    for row in report.rows.iter().filter(|r| r.delta1 == 0.0) {
        ensure(row.predicted_queries == row.tests as u64 + 1, || {
            format!(
                "noiseless n {} predicted {}",
                row.n_padded, row.predicted_queries
            )
        })?;
        ensure(
            row.realized_mean_queries == Some(row.predicted_queries as f64),
            || {
                format!(
                    "noiseless n {} realized {:?}",
                    row.n_padded, row.realized_mean_queries
                )
            },
        )?;
    }
    for row in report.rows.iter().filter(|r| r.realized_runs > 0) {
        ensure(row.accounting_exact == Some(true), || {
            format!(
                "n {} delta1 {}: realized != predicted",
                row.n_padded, row.delta1
            )
        })?;
    }
    let slope = report
        .slopes
        .iter()
        .find(|s| s.delta1 == 0.1)
        .ok_or("missing slope")?
        .loglog_slope;
    ensure((slope - SLOPE_TARGET).abs() <= SLOPE_TOL, || {
        format!("slope {slope:.4}")
    })?;
    Ok(format!(
        "noisy slope {slope:.4}; noiseless rows = log2 N + 1"
    ))
}

fn crossover() -> Check {
    let t = ensemble_threshold_max_n(THRESHOLD_DELTA1).map_err(|e| e.to_string())?;
    ensure(
        (THRESHOLD_RANGE.0..THRESHOLD_RANGE.1).contains(&t.max_unrestricted)
            && t.max_pow2_bits >= THRESHOLD_MIN_BITS,
        || format!("{t:?}"),
    )?;
    Ok(format!(
        "max N {}, power-of-two floor 2^{}",
        t.max_unrestricted, t.max_pow2_bits
    ))
}

fn golf_end_to_end() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let half = GOLF_EPSILON / 2.0;
    let mut solved = 0;
    for d in [1usize, 2] {
        for _ in 0..GOLF_PLACEMENTS {
            let center: Vec<f64> = (0..d)
                .map(|_| rng.random_range(half..=1.0 - half))
                .collect();
            let config = RunConfig::golf_course(&center, GOLF_EPSILON);
            let r = solve(&config).map_err(|e| e.to_string())?;
            let desc = r
                .descent
                .as_ref()
                .ok_or_else(|| format!("{center:?}: no descent"))?;
            let inside = desc.point.max_dist(&Point::new(center.clone())) <= half;
            ensure(
                r.status == SolveStatus::Success && desc.f_value == 0.0 && inside,
                || format!("{center:?}: {:?} f {}", r.status, desc.f_value),
            )?;
            let tests = r.grid.n_bits() as u64;
            ensure(r.counters.oracle_queries == tests + 1, || {
                format!(
                    "{center:?}: {} queries for {tests} tests",
                    r.counters.oracle_queries
                )
            })?;
            ensure(r.counters.objective_evals == 1 + desc.evals_used, || {
                format!("{center:?}: {} evals", r.counters.objective_evals)
            })?;
            solved += 1;
        }
    }
    Ok(format!(
        "{solved}/{} placements solved (d = 1, 2)",
        2 * GOLF_PLACEMENTS
    ))
}

fn noisy_end_to_end() -> Check {
    let center = [0.618];
    let mut config = RunConfig::golf_course(&center, GOLF_EPSILON);
    let n_padded = {
        let spec = config.build_objective().unwrap();
        let m = choose_grid_resolution(spec.basin_size(), config.grid_safety).unwrap();
        GridSpec::new(1, m).unwrap().n_padded()
    };
    // Largest noise level at which every test still needs a single trial.
    config.delta1 = 1.0 / (config.safety_c * n_padded as f64);
    let optimum = Point::new(center.to_vec());
    let (mut successes, mut detected) = (0u64, 0u64);
    for seed in 0..NOISY_RUNS {
        config.seed = seed;
        let r = solve(&config).map_err(|e| e.to_string())?;
        match r.status {
            SolveStatus::Success => {
                let p = r.point().unwrap();
                ensure(p.max_dist(&optimum) <= GOLF_EPSILON / 2.0, || {
                    format!("seed {seed}: silent wrong answer {p:?}")
                })?;
                successes += 1;
            }
            SolveStatus::SearchFailed => {
                ensure(
                    !r.search.verified && r.search.verification_performed,
                    || format!("seed {seed}: failure not flagged by verification"),
                )?;
                detected += 1;
            }
            SolveStatus::DescentIncomplete => {
                return Err(format!("seed {seed}: descent incomplete"))
            }
        }
    }
    let rate = successes as f64 / NOISY_RUNS as f64;
    ensure(rate >= NOISY_MIN_SUCCESS, || format!("success rate {rate}"))?;
    Ok(format!(
        "delta1 = 1/{}: success {rate:.3}, {detected} detected failures, 0 silent",
        (1.0 / config.delta1) as u64
    ))
}

fn mapping_guarantee() -> Check {
    let objectives = vec![
        ObjectiveSpec::golf_course(&[0.3], 1.0 / 16.0),
        ObjectiveSpec::golf_course(&[0.3, 0.7], 1.0 / 16.0),
        ObjectiveSpec::gaussian_well(&[0.41], 0.05),
        ObjectiveSpec::gaussian_well(&[0.41, 0.63], 0.05),
        ObjectiveSpec::multiwell(&[vec![0.2], vec![0.7]], &[0.0, 0.6], 0.5),
        ObjectiveSpec::multiwell(&[vec![0.25, 0.25], vec![0.75, 0.7]], &[0.0, 0.55], 0.5),
    ];
    let descent = DescentConfig::default();
    let mut checked = 0;
    for spec in objectives {
        let spec = Arc::new(spec.map_err(|e| e.to_string())?);
        let optimum = spec.known_optimum().unwrap().clone();
        let golf = matches!(
            spec.kind(),
            ensemble_gop::objective::ObjectiveKind::GolfCourse { .. }
        );
        for safety in [1.0, 1.5, 2.0] {
            let m_cells = choose_grid_resolution(spec.basin_size(), safety).unwrap();
            let grid = GridSpec::new(spec.dimension(), m_cells).unwrap();
            let m = choose_sharpening_exponent(spec.gap_delta()).unwrap();
            let oracle = DiscreteOracle::from_objective(Arc::clone(&spec), grid, m).unwrap();
            let marked = oracle
                .marked_indices_bruteforce()
                .map_err(|e| e.to_string())?;
            ensure(!marked.is_empty(), || {
                format!("{:?} safety {safety}: no marked cell", spec.kind())
            })?;
            for cell in marked {
                let start = index_to_midpoint(&grid, cell).unwrap();
                let r = refine(&spec, &start, &descent).map_err(|e| e.to_string())?;
                let ok = if golf {
                    r.f_value == 0.0
                } else {
                    r.f_value < descent.f_tol && r.point.dist(&optimum) < OPTIMUM_TOL
                };
                ensure(ok, || {
                    format!(
                        "{:?} safety {safety} cell {}: {:?}",
                        spec.kind(),
                        cell.0,
                        r.point
                    )
                })?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} marked midpoints descend to the optimum"))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("run.json");
    std::fs::write(
        &path,
        r#"{"objective": {"kind": "golf_course", "center": [0.3, 0.7], "epsilon": 0.0625},
            "delta1": 0.002, "descent": {"f_tol": 1e-10}}"#,
    )
    .unwrap();
    let exe = env!("CARGO_BIN_EXE_ensemble-gop");
    let mut outputs = Vec::new();
    for cmd in ["solve", "bench", "compare", "validate"] {
        let run = || {
            let out = Command::new(exe)
                .args([cmd, "--config", path.to_str().unwrap(), "--seed", "42"])
                .output()
                .map_err(|e| e.to_string())?;
            ensure(out.status.code().is_some_and(|c| c == 0), || {
                format!("{cmd} exited with {:?}", out.status)
            })?;
            Ok::<_, String>(out.stdout)
        };
        let (a, b) = (run()?, run()?);
        ensure(a == b, || format!("{cmd}: outputs differ"))?;
        outputs.push(a.len());
    }
    Ok(format!(
        "solve/bench/compare/validate byte-identical ({outputs:?} bytes)"
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("signal formula", signal_formula),
        ("noiseless search", noiseless_search),
        ("repetition law", repetition_law),
        ("trial schedule", trial_schedule),
        ("complexity regimes", complexity_regimes),
        ("crossover threshold", crossover),
        ("golf course end to end", golf_end_to_end),
        ("noisy end to end", noisy_end_to_end),
        ("mapping guarantee", mapping_guarantee),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = check();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
