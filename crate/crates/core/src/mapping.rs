//! Reduction of the continuous problem to a marked-cell search.
//!
//! The unit hypercube is cut into `M^d` cells of side `1/M`. Cell indices are
//! row-major (first coordinate most significant) and 0-based, and the index
//! space is padded up to the next power of two so that it can be halved down
//! to a single cell. A cell is *marked* when `h = 1 - floor(f^(1/m) + 1/2)`
//! is one at its midpoint, which happens exactly when `f < 2^-m` there.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{ObjectiveSpec, Point};

/// Default multiplier applied in [`choose_grid_resolution`].
pub const DEFAULT_GRID_SAFETY: f64 = 2.0;

/// Largest padded index space the exhaustive counters will scan.
pub const MAX_BRUTEFORCE_CELLS: u64 = 1 << 24;

const MAX_PADDED_CELLS: u64 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellIndex(pub u64);

impl CellIndex {
    pub fn value(self) -> u64 {
        self.0
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Uniform grid on `[0,1]^d` with `M` cells per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    dimension: usize,
    cells_per_dim: u64,
    n_cells: u64,
    n_padded: u64,
    n_bits: u32,
}

impl GridSpec {
    pub fn new(dimension: usize, cells_per_dim: u64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::param("dimension", "must be positive"));
        }
        if cells_per_dim == 0 {
            return Err(Error::param("cells_per_dim", "must be positive"));
        }
        let n_cells = u32::try_from(dimension)
            .ok()
            .and_then(|d| cells_per_dim.checked_pow(d))
            .filter(|&n| n <= MAX_PADDED_CELLS)
            .ok_or_else(|| {
                Error::param(
                    "cells_per_dim",
                    format!("{cells_per_dim}^{dimension} cells overflows the index space"),
                )
            })?;
        let n_padded = n_cells.next_power_of_two();
        Ok(GridSpec {
            dimension,
            cells_per_dim,
            n_cells,
            n_padded,
            n_bits: n_padded.trailing_zeros(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn cells_per_dim(&self) -> u64 {
        self.cells_per_dim
    }

    /// `1/M`. Coordinates are computed by dividing by `M` directly, so the
    /// grid itself is exact in `M`.
    pub fn cell_width(&self) -> f64 {
        1.0 / self.cells_per_dim as f64
    }

    pub fn n_cells(&self) -> u64 {
        self.n_cells
    }

    pub fn n_padded(&self) -> u64 {
        self.n_padded
    }

    pub fn n_bits(&self) -> u32 {
        self.n_bits
    }
}

/// Smallest `m` with `delta^(1/m) >= 1/2`, i.e. `2^-m <= delta`.
pub fn choose_sharpening_exponent(delta: f64) -> Result<u32> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", format!("{delta} not in (0, 1)")));
    }
    let mut m = 1u32;
    while 0.5f64.powi(m as i32) > delta {
        m += 1;
    }
    Ok(m)
}

/// `M = ceil(safety / min_j r_j)`: a lattice of spacing `1/M` then puts at
/// least one midpoint inside every interval of width `min_j r_j`.
pub fn choose_grid_resolution(basin_size: &[f64], safety: f64) -> Result<u64> {
    if basin_size.is_empty() {
        return Err(Error::param("basin_size", "empty"));
    }
    if !(safety >= 1.0 && safety.is_finite()) {
        return Err(Error::param("safety", format!("{safety} must be >= 1")));
    }
    if let Some(r) = basin_size.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
        return Err(Error::param("basin_size", format!("{r} not in (0, 1]")));
    }
    let min_r = basin_size.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((safety / min_r).ceil() as u64)
}

/// Midpoint of cell `i`.
pub fn index_to_midpoint(grid: &GridSpec, i: CellIndex) -> Result<Point> {
    if i.0 >= grid.n_cells {
        return Err(Error::IndexOutOfRange {
            index: i.0,
            limit: grid.n_cells,
        });
    }
    let m = grid.cells_per_dim;
    let mut coords = vec![0.0; grid.dimension];
    let mut rest = i.0;
    for x in coords.iter_mut().rev() {
        let digit = rest % m;
        rest /= m;
        *x = (digit as f64 + 0.5) / m as f64;
    }
    Ok(Point::new(coords))
}

/// Index of the cell containing `p`. Cells are `[c/M, (c+1)/M)`, the last
/// one closed at 1.
pub fn midpoint_to_index(grid: &GridSpec, p: &Point) -> Result<CellIndex> {
    p.check_domain(grid.dimension)?;
    let m = grid.cells_per_dim;
    let mf = m as f64;
    let mut index = 0u64;
    for &x in p.coords() {
        let mut c = ((x * mf).floor() as u64).min(m - 1);
        // Snap against the exact edges c/M used elsewhere.
        if c + 1 < m && (c + 1) as f64 / mf <= x {
            c += 1;
        } else if c > 0 && c as f64 / mf > x {
            c -= 1;
        }
        index = index * m + c;
    }
    Ok(CellIndex(index))
}

/// `g = f^(1/m)`; `0` and `1` are preserved exactly.
pub fn sharpen(spec: &ObjectiveSpec, m: u32, p: &Point) -> Result<f64> {
    if m == 0 {
        return Err(Error::param("m", "must be >= 1"));
    }
    Ok(sharpen_value(spec.evaluate(p)?, m))
}

pub fn sharpen_value(f: f64, m: u32) -> f64 {
    match m {
        1 => f,
        _ if f == 0.0 || f == 1.0 => f,
        _ => f.powf(1.0 / m as f64),
    }
}

/// `h = 1 - floor(f^(1/m) + 1/2)` as a boolean.
///
/// For `f` in `[0,1]` this equals `f < 2^-m`; the comparison is done in that
/// form because `powf` can round `(2^-m)^(1/m)` just below `1/2`.
pub fn marked_value(f: f64, m: u32) -> bool {
    f < 0.5f64.powi(m as i32)
}

#[derive(Debug)]
enum Source {
    Objective(Arc<ObjectiveSpec>),
    /// Explicit marked set (sorted, deduplicated) for search-only runs.
    Marked(Vec<u64>),
}

/// The binary function `h` over cell indices, with query accounting.
///
/// `query_count` counts solver queries: single `h` evaluations and ensemble
/// applications, one each. `classical_work` counts the per-index `h`
/// evaluations the simulator performs to emulate an ensemble application.
#[derive(Debug)]
pub struct DiscreteOracle {
    grid: GridSpec,
    sharpening_m: u32,
    source: Source,
    queries: AtomicU64,
    work: AtomicU64,
}

impl DiscreteOracle {
    pub fn from_objective(spec: Arc<ObjectiveSpec>, grid: GridSpec, m: u32) -> Result<Self> {
        if spec.dimension() != grid.dimension() {
            return Err(Error::DimensionMismatch {
                expected: grid.dimension(),
                actual: spec.dimension(),
            });
        }
        if m == 0 {
            return Err(Error::param("m", "must be >= 1"));
        }
        Ok(DiscreteOracle {
            grid,
            sharpening_m: m,
            source: Source::Objective(spec),
            queries: AtomicU64::new(0),
            work: AtomicU64::new(0),
        })
    }

    /// One-dimensional oracle over `n_cells` indices with an explicit marked
    /// set.
    pub fn from_marked(n_cells: u64, marked: &[u64]) -> Result<Self> {
        let grid = GridSpec::new(1, n_cells)?;
        let mut set = marked.to_vec();
        set.sort_unstable();
        set.dedup();
        if let Some(&bad) = set.iter().find(|&&i| i >= n_cells) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                limit: n_cells,
            });
        }
        Ok(DiscreteOracle {
            grid,
            sharpening_m: 1,
            source: Source::Marked(set),
            queries: AtomicU64::new(0),
            work: AtomicU64::new(0),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn n_padded(&self) -> u64 {
        self.grid.n_padded
    }

    pub fn sharpening_m(&self) -> u32 {
        self.sharpening_m
    }

    pub fn underlying(&self) -> Option<&Arc<ObjectiveSpec>> {
        match &self.source {
            Source::Objective(spec) => Some(spec),
            Source::Marked(_) => None,
        }
    }

    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn classical_work(&self) -> u64 {
        self.work.load(Ordering::Relaxed)
    }

    fn check_index(&self, i: CellIndex) -> Result<()> {
        if i.0 < self.grid.n_padded {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i.0,
                limit: self.grid.n_padded,
            })
        }
    }

    /// One solver query of `h(i)`; charges the query counter and, for real
    /// cells, the objective's evaluation counter.
    pub fn query(&self, i: CellIndex) -> Result<bool> {
        self.check_index(i)?;
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.eval_h(i, Charge::Solver)
    }

    /// `h(i)` on the objective's scan counter; not a solver query.
    pub fn scan(&self, i: CellIndex) -> Result<bool> {
        self.check_index(i)?;
        self.eval_h(i, Charge::Scan)
    }

    fn eval_h(&self, i: CellIndex, charge: Charge) -> Result<bool> {
        if i.0 >= self.grid.n_cells {
            return Ok(false);
        }
        match &self.source {
            Source::Marked(set) => Ok(set.binary_search(&i.0).is_ok()),
            Source::Objective(spec) => {
                let p = index_to_midpoint(&self.grid, i)?;
                let f = match charge {
                    Charge::Solver => spec.evaluate(&p)?,
                    Charge::Scan => spec.evaluate_scan(&p)?,
                    Charge::Work => spec.evaluate_uncounted(&p)?,
                };
                Ok(marked_value(f, self.sharpening_m))
            }
        }
    }

    /// Number of marked indices in `[lo, hi)`, evaluated index by index
    /// without touching any counter. Ensemble applications account for this
    /// through [`EnsembleOracle::charge_application`].
    pub(crate) fn count_marked_in(&self, lo: u64, hi: u64) -> Result<u64> {
        if lo > hi || hi > self.grid.n_padded {
            return Err(Error::IndexOutOfRange {
                index: hi,
                limit: self.grid.n_padded,
            });
        }
        match &self.source {
            Source::Marked(set) => {
                let a = set.partition_point(|&x| x < lo);
                let b = set.partition_point(|&x| x < hi);
                Ok((b - a) as u64)
            }
            Source::Objective(_) => {
                let mut count = 0;
                for i in lo..hi.min(self.grid.n_cells) {
                    if self.eval_h(CellIndex(i), Charge::Work)? {
                        count += 1;
                    }
                }
                Ok(count)
            }
        }
    }

    pub(crate) fn charge_query(&self) {
        self.queries.fetch_add(1, Ordering::Relaxed);
    }

    pub(crate) fn charge_work(&self, n: u64) {
        self.work.fetch_add(n, Ordering::Relaxed);
    }

    /// Exhaustive count of marked indices on the scan counter.
    pub fn count_marked_bruteforce(&self) -> Result<u64> {
        Ok(self.marked_indices_bruteforce()?.len() as u64)
    }

    /// Every marked index, found by exhaustive scan.
    pub fn marked_indices_bruteforce(&self) -> Result<Vec<CellIndex>> {
        if self.grid.n_padded > MAX_BRUTEFORCE_CELLS {
            return Err(Error::param(
                "n_padded",
                format!("{} exceeds the exhaustive scan limit", self.grid.n_padded),
            ));
        }
        let mut out = Vec::new();
        for i in 0..self.grid.n_padded {
            if self.scan(CellIndex(i))? {
                out.push(CellIndex(i));
            }
        }
        Ok(out)
    }

    /// The oracle seen through an index offset: local index `j` maps to
    /// global index `offset + j`.
    pub fn view(&self, offset: u64, len: u64) -> Result<OracleView<'_>> {
        match offset.checked_add(len) {
            Some(end) if end <= self.grid.n_padded => Ok(OracleView {
                oracle: self,
                offset,
                len,
            }),
            _ => Err(Error::IndexOutOfRange {
                index: offset.saturating_add(len),
                limit: self.grid.n_padded,
            }),
        }
    }
}

#[derive(Clone, Copy)]
enum Charge {
    Solver,
    Scan,
    Work,
}

/// A remapped oracle over the window `[offset, offset + len)`.
#[derive(Debug, Clone, Copy)]
pub struct OracleView<'a> {
    oracle: &'a DiscreteOracle,
    offset: u64,
    len: u64,
}

impl<'a> OracleView<'a> {
    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn inner(&self) -> &'a DiscreteOracle {
        self.oracle
    }
}

/// Capability the ensemble simulator needs from an oracle.
pub trait EnsembleOracle {
    /// Size of the index space partitions are drawn from.
    fn index_space(&self) -> u64;

    /// Marked count over `[lo, hi)`; charges nothing.
    fn marked_in(&self, lo: u64, hi: u64) -> Result<u64>;

    /// Charges one ensemble application.
    fn charge_application(&self, partition_size: u64);
}

impl EnsembleOracle for DiscreteOracle {
    fn index_space(&self) -> u64 {
        self.grid.n_padded
    }

    fn marked_in(&self, lo: u64, hi: u64) -> Result<u64> {
        self.count_marked_in(lo, hi)
    }

    fn charge_application(&self, partition_size: u64) {
        self.charge_query();
        self.charge_work(partition_size);
    }
}

impl EnsembleOracle for OracleView<'_> {
    fn index_space(&self) -> u64 {
        self.len
    }

    fn marked_in(&self, lo: u64, hi: u64) -> Result<u64> {
        if hi > self.len {
            return Err(Error::IndexOutOfRange {
                index: hi,
                limit: self.len,
            });
        }
        self.oracle
            .count_marked_in(self.offset + lo, self.offset + hi)
    }

    fn charge_application(&self, partition_size: u64) {
        self.oracle.charge_application(partition_size);
    }
}
