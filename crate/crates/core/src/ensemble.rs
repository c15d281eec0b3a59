//! Coherence-free ensemble machine, simulated classically.
//!
//! The input register holds a uniform mixture over a contiguous partition of
//! indices; the one-spin output register starts as a thermal 1/2-1/2 mixture.
//! Applying the oracle leaves the input distribution untouched and flips the
//! output of every marked sub-ensemble to `|1>`, so the fraction of `|1>`
//! output spins becomes `1/2 + marked / (2P)`.
//!
//! The measured quantity is the normalized signal `S = 2 (frac_one - 1/2)`,
//! which equals `marked / P` for an ideal ensemble. Measurement adds
//! Gaussian noise of standard deviation `delta1` per trial and optionally
//! binomial shot noise from a finite number of molecules.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::EnsembleOracle;

/// Contiguous index range `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    lo: u64,
    hi: u64,
}

impl Partition {
    pub fn new(lo: u64, hi: u64) -> Result<Self> {
        if hi <= lo {
            return Err(Error::param(
                "partition",
                format!("empty range [{lo}, {hi})"),
            ));
        }
        Ok(Partition { lo, hi })
    }

    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn size(&self) -> u64 {
        self.hi - self.lo
    }

    pub fn contains(&self, i: u64) -> bool {
        (self.lo..self.hi).contains(&i)
    }

    /// Lower and upper halves. `None` for singletons.
    pub fn halves(&self) -> Option<(Partition, Partition)> {
        if self.size() < 2 {
            return None;
        }
        let mid = self.lo + self.size() / 2;
        Some((
            Partition {
                lo: self.lo,
                hi: mid,
            },
            Partition {
                lo: mid,
                hi: self.hi,
            },
        ))
    }
}

/// Diagonal ensemble state: uniform input mixture plus the output-register
/// `|1>` fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedState {
    partition: Partition,
    out_frac_one: f64,
    marked: Option<u64>,
}

/// Thermal state over `partition`.
pub fn prepare_state(partition: Partition) -> MixedState {
    MixedState {
        partition,
        out_frac_one: 0.5,
        marked: None,
    }
}

impl MixedState {
    pub fn partition(&self) -> Partition {
        self.partition
    }

    /// Diagonal weight of input configuration `i`.
    pub fn input_weight(&self, i: u64) -> f64 {
        if self.partition.contains(i) {
            1.0 / self.partition.size() as f64
        } else {
            0.0
        }
    }

    /// Full input diagonal over `[0, n)`; intended for small `n`.
    pub fn input_diagonal(&self, n: u64) -> Vec<f64> {
        (0..n).map(|i| self.input_weight(i)).collect()
    }

    pub fn out_frac_one(&self) -> f64 {
        self.out_frac_one
    }

    pub fn oracle_applied(&self) -> bool {
        self.marked.is_some()
    }

    /// Marked configurations seen by the last oracle application.
    pub fn marked_count(&self) -> Option<u64> {
        self.marked
    }

    /// Noise-free normalized signal `2 (frac_one - 1/2)`.
    pub fn ideal_signal(&self) -> f64 {
        2.0 * (self.out_frac_one - 0.5)
    }

    /// Applies `U_h` to every sub-ensemble at once. Charges one query.
    pub fn apply_oracle<O: EnsembleOracle + ?Sized>(&mut self, oracle: &O) -> Result<()> {
        if self.oracle_applied() {
            return Err(Error::OracleAlreadyApplied);
        }
        self.check_fits(oracle)?;
        let marked = oracle.marked_in(self.partition.lo, self.partition.hi)?;
        self.apply_counted(oracle, marked);
        Ok(())
    }

    fn check_fits<O: EnsembleOracle + ?Sized>(&self, oracle: &O) -> Result<()> {
        if self.partition.hi > oracle.index_space() {
            return Err(Error::IndexOutOfRange {
                index: self.partition.hi,
                limit: oracle.index_space(),
            });
        }
        Ok(())
    }

    /// Same as [`apply_oracle`](Self::apply_oracle) with the marked count
    /// already known for this partition (h is deterministic).
    fn apply_counted<O: EnsembleOracle + ?Sized>(&mut self, oracle: &O, marked: u64) {
        let size = self.partition.size();
        oracle.charge_application(size);
        // Exact for power-of-two sizes.
        self.out_frac_one = 0.5 + marked as f64 / (2.0 * size as f64);
        self.marked = Some(marked);
    }
}

/// Noise model of a single trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementModel {
    /// Standard deviation of the additive Gaussian noise on `S`.
    pub delta1: f64,
    /// Enables binomial shot noise over `molecules * P` output spins.
    #[serde(default)]
    pub molecules_per_subensemble: Option<u64>,
    #[serde(default)]
    pub rng_seed: u64,
}

impl MeasurementModel {
    pub fn new(delta1: f64, rng_seed: u64) -> Result<Self> {
        let model = MeasurementModel {
            delta1,
            molecules_per_subensemble: None,
            rng_seed,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn noiseless() -> Self {
        MeasurementModel {
            delta1: 0.0,
            molecules_per_subensemble: None,
            rng_seed: 0,
        }
    }

    pub fn with_molecules(mut self, molecules: u64) -> Result<Self> {
        self.molecules_per_subensemble = Some(molecules);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta1 >= 0.0 && self.delta1.is_finite()) {
            return Err(Error::param(
                "delta1",
                format!("{} must be >= 0", self.delta1),
            ));
        }
        if self.molecules_per_subensemble == Some(0) {
            return Err(Error::param("molecules_per_subensemble", "must be >= 1"));
        }
        Ok(())
    }

    /// Fresh generator for this model's seed.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.rng_seed)
    }
}

/// One noisy sample of the normalized signal.
pub fn measure_signal<R: Rng + ?Sized>(
    state: &MixedState,
    model: &MeasurementModel,
    rng: &mut R,
) -> Result<f64> {
    if !state.oracle_applied() {
        return Err(Error::OracleNotApplied);
    }
    let mut frac = state.out_frac_one;
    if let Some(k) = model.molecules_per_subensemble {
        let spins = k
            .checked_mul(state.partition.size())
            .ok_or_else(|| Error::param("molecules_per_subensemble", "spin count overflows"))?;
        let ones = Binomial::new(spins, frac)
            .map_err(|e| Error::param("molecules_per_subensemble", e.to_string()))?
            .sample(rng);
        frac = ones as f64 / spins as f64;
    }
    let mut s = 2.0 * (frac - 0.5);
    if model.delta1 > 0.0 {
        let noise =
            Normal::new(0.0, model.delta1).map_err(|e| Error::param("delta1", e.to_string()))?;
        s += noise.sample(rng);
    }
    Ok(s)
}

/// Mean signal over a batch of trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub mean_signal: f64,
    pub queries: u64,
}

/// Runs `n_trials` independent prepare/apply/measure cycles on `partition`.
///
/// The marked count is computed once and reused, but every trial is charged
/// as its own ensemble application.
pub fn run_trials<O, R>(
    partition: Partition,
    oracle: &O,
    model: &MeasurementModel,
    n_trials: u64,
    rng: &mut R,
) -> Result<TrialSummary>
where
    O: EnsembleOracle + ?Sized,
    R: Rng + ?Sized,
{
    if n_trials == 0 {
        return Err(Error::param("n_trials", "must be >= 1"));
    }
    model.validate()?;
    let probe = prepare_state(partition);
    probe.check_fits(oracle)?;
    let marked = oracle.marked_in(partition.lo, partition.hi)?;
    let mut sum = 0.0;
    for _ in 0..n_trials {
        let mut state = prepare_state(partition);
        state.apply_counted(oracle, marked);
        sum += measure_signal(&state, model, rng)?;
    }
    Ok(TrialSummary {
        mean_signal: sum / n_trials as f64,
        queries: n_trials,
    })
}
