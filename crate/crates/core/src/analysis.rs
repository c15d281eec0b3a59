//! Query-complexity baselines and repeated-run statistics.
//!
//! Grover baselines are order-of-magnitude models with fixed constants:
//! `ceil(pi/4 sqrt N)` for the pure-state search and `ceil(N^2 sqrt N)` for
//! the pseudopure-state variant. Outputs label them as models.

use std::f64::consts::FRAC_PI_4;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::pipeline::{solve, SolveStatus};
use crate::search::{predict_total_queries, required_trials};

pub const BASELINE_LABEL: &str = "model: unit-constant asymptotic counts";

fn ceil_to_u64(x: f64) -> u64 {
    // saturating
    x.ceil() as u64
}

pub fn grover_pure_queries(n: u64) -> u64 {
    ceil_to_u64(FRAC_PI_4 * (n.max(1) as f64).sqrt()).max(1)
}

pub fn grover_pseudopure_queries(n: u64) -> u64 {
    let n = n.max(1) as f64;
    ceil_to_u64(n * n * n.sqrt()).max(1)
}

/// Left side of the crossover condition, `N sqrt(N) log2 N`.
pub fn crossover_lhs(n: u64) -> f64 {
    let n = n as f64;
    n * n.sqrt() * n.log2()
}

/// Whether `N sqrt(N) log2 N < delta1^-2`; a noiseless machine always wins.
pub fn ensemble_beats_pure(n: u64, delta1: f64) -> bool {
    delta1 == 0.0 || crossover_lhs(n) < delta1.powi(-2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub delta1: f64,
    /// Largest power of two satisfying the crossover condition.
    pub max_pow2: u64,
    pub max_pow2_bits: u32,
    /// Largest integer satisfying it.
    pub max_unrestricted: u64,
}

/// Largest database sizes for which the ensemble search beats pure-state
/// Grover at noise level `delta1`.
pub fn ensemble_threshold_max_n(delta1: f64) -> Result<ThresholdReport> {
    if !(delta1 > 0.0 && delta1 < 1.0) {
        return Err(Error::param("delta1", format!("{delta1} not in (0, 1)")));
    }
    let target = delta1.powi(-2);
    let holds = |n: u64| crossover_lhs(n) < target;

    let mut bits = 0u32;
    while bits < 62 && holds(1u64 << (bits + 1)) {
        bits += 1;
    }

    // lhs(1) = 0, so `lo` always satisfies the condition.
    let mut lo = 1u64;
    let mut hi = 2u64;
    while holds(hi) {
        lo = hi;
        hi = hi.saturating_mul(2);
        if hi == u64::MAX {
            break;
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    Ok(ThresholdReport {
        delta1,
        max_pow2: 1u64 << bits,
        max_pow2_bits: bits,
        max_unrestricted: lo,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub n_items: u64,
    pub delta1: f64,
    pub safety_c: f64,
    pub ensemble_queries: u64,
    pub first_test_trials: u64,
    pub grover_pure: u64,
    pub grover_pseudopure: u64,
    pub ensemble_wins_vs_pure: bool,
}

pub fn compare(n: u64, delta1: f64, safety_c: f64) -> Result<ComparisonRow> {
    if !n.is_power_of_two() {
        return Err(Error::param(
            "n_items",
            format!("{n} is not a power of two"),
        ));
    }
    if !(delta1 >= 0.0 && delta1.is_finite()) {
        return Err(Error::param("delta1", format!("{delta1} must be >= 0")));
    }
    Ok(ComparisonRow {
        n_items: n,
        delta1,
        safety_c,
        ensemble_queries: predict_total_queries(n, delta1, safety_c),
        first_test_trials: if n >= 2 {
            required_trials(n / 2, delta1, safety_c)
        } else {
            0
        },
        grover_pure: grover_pure_queries(n),
        grover_pseudopure: grover_pseudopure_queries(n),
        ensemble_wins_vs_pure: ensemble_beats_pure(n, delta1),
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentStats {
    pub runs: u32,
    pub successes: u32,
    /// Runs whose search verification failed.
    pub detected_failures: u32,
    /// Runs whose descent stopped above tolerance after a verified search.
    pub descent_failures: u32,
    /// Runs that aborted with a pipeline error.
    pub errors: u32,
    pub mean_queries: f64,
    pub std_queries: f64,
    /// Seconds; the only field that is not reproducible.
    pub mean_wall_time: f64,
}

impl ExperimentStats {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.runs as f64
    }

    /// Equality ignoring wall time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        ExperimentStats {
            mean_wall_time: 0.0,
            ..self.clone()
        } == ExperimentStats {
            mean_wall_time: 0.0,
            ..other.clone()
        }
    }
}

/// SplitMix64 finalizer; derives well-separated per-run seeds.
pub fn derive_seed(seed: u64, run: u64) -> u64 {
    let mut z = seed.wrapping_add(run.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Solves `config` `runs` times with derived seeds and aggregates outcomes.
pub fn run_experiment(config: &RunConfig, runs: u32, seed: u64) -> Result<ExperimentStats> {
    if runs == 0 {
        return Err(Error::param("runs", "must be >= 1"));
    }
    let mut stats = ExperimentStats {
        runs,
        successes: 0,
        detected_failures: 0,
        descent_failures: 0,
        errors: 0,
        mean_queries: 0.0,
        std_queries: 0.0,
        mean_wall_time: 0.0,
    };
    let mut queries = Vec::with_capacity(runs as usize);
    let mut wall = 0.0;
    for r in 0..runs {
        let mut cfg = config.clone();
        cfg.seed = derive_seed(seed, r as u64);
        let started = Instant::now();
        let outcome = solve(&cfg);
        wall += started.elapsed().as_secs_f64();
        match outcome {
            Ok(report) => {
                queries.push(report.search.total_queries as f64);
                match report.status {
                    SolveStatus::Success => stats.successes += 1,
                    SolveStatus::SearchFailed => stats.detected_failures += 1,
                    SolveStatus::DescentIncomplete => stats.descent_failures += 1,
                }
            }
            Err(_) => stats.errors += 1,
        }
    }
    if !queries.is_empty() {
        let n = queries.len() as f64;
        let mean = queries.iter().sum::<f64>() / n;
        let var = queries.iter().map(|q| (q - mean) * (q - mean)).sum::<f64>() / n;
        stats.mean_queries = mean;
        stats.std_queries = var.sqrt();
    }
    stats.mean_wall_time = wall / runs as f64;
    Ok(stats)
}
