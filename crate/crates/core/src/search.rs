//! Binary-partition search on the ensemble machine.
//!
//! Starting from the whole padded index space, each test measures only the
//! lower half of the current candidate range and keeps it iff the averaged
//! signal reaches `1/(2P)`, the midpoint between the no-hit signal `0` and
//! the single-hit signal `1/P`. Otherwise the upper half is kept by
//! elimination. After `log2(n_padded)` tests one index survives.
//!
//! The number of trials per test follows the current partition size, so the
//! precision requirement relaxes as the partitions shrink.

use serde::{Deserialize, Serialize};

use crate::ensemble::{run_trials, MeasurementModel, Partition};
use crate::error::{Error, Result};
use crate::mapping::{CellIndex, DiscreteOracle};

pub const DEFAULT_SAFETY_C: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    /// Multiplier on the averaged-noise margin; the averaged noise std is at
    /// most `1/safety_c` of the decision threshold.
    #[serde(default = "default_safety_c")]
    pub safety_c: f64,
    #[serde(default = "default_true")]
    pub verify_result: bool,
    #[serde(default)]
    pub max_tests: Option<u32>,
}

fn default_safety_c() -> f64 {
    DEFAULT_SAFETY_C
}

fn default_true() -> bool {
    true
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            safety_c: DEFAULT_SAFETY_C,
            verify_result: true,
            max_tests: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.safety_c >= 1.0 && self.safety_c.is_finite()) {
            return Err(Error::param(
                "safety_c",
                format!("{} must be >= 1", self.safety_c),
            ));
        }
        Ok(())
    }

    /// Closed-form query total for this config, honouring `verify_result`.
    pub fn predicted_queries(&self, n_padded: u64, delta1: f64) -> u64 {
        let tests = predict_test_queries(n_padded, delta1, self.safety_c);
        tests.saturating_add(u64::from(self.verify_result))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Lower,
    Upper,
}

/// Record of one halving decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionTest {
    /// 1-based test number.
    pub k: u32,
    /// The measured lower half.
    pub tested: Partition,
    pub partition_size: u64,
    pub n_e: u64,
    pub mean_signal: f64,
    pub threshold: f64,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub found: CellIndex,
    pub trace: Vec<PartitionTest>,
    pub total_queries: u64,
    pub verification_performed: bool,
    pub verified: bool,
}

/// Midpoint between the no-hit and single-hit normalized signals of a
/// partition of size `p`.
pub fn decision_threshold(p: u64) -> f64 {
    1.0 / (2.0 * p as f64)
}

/// Trials needed so that the averaged noise `delta1 / sqrt(N_e)` is at most
/// `1/safety_c` of the decision threshold of a size-`p` partition.
pub fn required_trials(p: u64, delta1: f64, safety_c: f64) -> u64 {
    let scale = safety_c * 2.0 * p as f64;
    if delta1 * scale <= 1.0 {
        return 1;
    }
    // `as` saturates for astronomically large requirements.
    let n = (scale * delta1).powi(2).ceil();
    n as u64
}

fn predict_test_queries(n_padded: u64, delta1: f64, safety_c: f64) -> u64 {
    let tests = tests_needed(n_padded);
    (1..=tests)
        .map(|k| required_trials(n_padded >> k, delta1, safety_c))
        .fold(0u64, u64::saturating_add)
}

/// Predicted total queries of a verified search over `n_padded` indices.
pub fn predict_total_queries(n_padded: u64, delta1: f64, safety_c: f64) -> u64 {
    predict_test_queries(n_padded, delta1, safety_c).saturating_add(1)
}

fn tests_needed(n_padded: u64) -> u32 {
    n_padded.trailing_zeros()
}

/// Finds a marked index by `log2(n_padded)` partition tests.
///
/// Returns [`Error::VerificationFailed`] carrying the full result when
/// verification is enabled and the surviving index turns out unmarked.
pub fn run_search(
    oracle: &DiscreteOracle,
    model: &MeasurementModel,
    config: &SearchConfig,
) -> Result<SearchResult> {
    config.validate()?;
    model.validate()?;
    let n_padded = oracle.n_padded();
    let tests = tests_needed(n_padded);
    if let Some(max) = config.max_tests {
        if tests > max {
            return Err(Error::TestBudgetExceeded { needed: tests, max });
        }
    }

    let mut rng = model.rng();
    let mut candidate = Partition::new(0, n_padded)?;
    let mut trace = Vec::with_capacity(tests as usize);
    let mut total_queries = 0u64;

    for k in 1..=tests {
        let (lower, upper) = candidate
            .halves()
            .expect("candidate range is a power of two above one");
        let size = lower.size();
        // Re-prepare the same [0, P) mixture and remap the oracle onto it.
        let view = oracle.view(lower.lo(), size)?;
        let n_e = required_trials(size, model.delta1, config.safety_c);
        let summary = run_trials(Partition::new(0, size)?, &view, model, n_e, &mut rng)?;
        let threshold = decision_threshold(size);
        let decision = if summary.mean_signal >= threshold {
            Decision::Lower
        } else {
            Decision::Upper
        };
        total_queries = total_queries.saturating_add(summary.queries);
        trace.push(PartitionTest {
            k,
            tested: lower,
            partition_size: size,
            n_e,
            mean_signal: summary.mean_signal,
            threshold,
            decision,
        });
        candidate = match decision {
            Decision::Lower => lower,
            Decision::Upper => upper,
        };
    }

    let found = CellIndex(candidate.lo());
    let mut verified = false;
    if config.verify_result {
        verified = oracle.query(found)?;
        total_queries += 1;
    }
    let result = SearchResult {
        found,
        trace,
        total_queries,
        verification_performed: config.verify_result,
        verified,
    };
    if config.verify_result && !verified {
        return Err(Error::VerificationFailed(Box::new(result)));
    }
    Ok(result)
}
