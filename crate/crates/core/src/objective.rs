//! Continuous objectives on the unit hypercube.
//!
//! Every objective maps `[0,1]^d -> [0,1]` and carries the structural
//! metadata the solver relies on: the gap `delta` separating the global
//! minimum from every other local minimum, and the per-dimension width
//! `basin_size` of the global basin measured at height `delta`.
//!
//! Evaluation counters are atomic, so an `ObjectiveSpec` can be shared
//! across threads and every call is counted exactly once. Solver-path calls
//! ([`ObjectiveSpec::evaluate`]) and validation scans
//! ([`ObjectiveSpec::evaluate_scan`]) are tallied separately.

use std::collections::VecDeque;
use std::fmt;
use std::ops::Deref;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gap used when a built-in constructor is not given one.
pub const DEFAULT_GAP_DELTA: f64 = 0.5;

/// Curvature of each paraboloid in [`ObjectiveSpec::multiwell`].
pub const DEFAULT_WELL_SLOPE: f64 = 40.0;

/// Largest scan the assumption validator will run.
pub const MAX_SCAN_CELLS: u64 = 1 << 26;

/// Measured-to-declared basin width ratio accepted by the validator.
pub const BASIN_RATIO_TOLERANCE: f64 = 1.5;

/// A point in `[0,1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// L-infinity distance to `other`.
    pub fn max_dist(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Euclidean distance to `other`.
    pub fn dist(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn check_domain(&self, dimension: usize) -> Result<()> {
        if self.0.len() != dimension {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                actual: self.0.len(),
            });
        }
        for (index, &value) in self.0.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfDomain { index, value });
            }
        }
        Ok(())
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl From<&[f64]> for Point {
    fn from(v: &[f64]) -> Self {
        Point(v.to_vec())
    }
}

/// Serializable description of an objective; built-ins carry their
/// parameters so configs can be echoed and rebuilt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveKind {
    GolfCourse {
        center: Vec<f64>,
        epsilon: f64,
    },
    GaussianWell {
        center: Vec<f64>,
        sigma: f64,
    },
    Multiwell {
        centers: Vec<Vec<f64>>,
        depths: Vec<f64>,
        slope: f64,
    },
    Custom {
        name: String,
    },
}

impl ObjectiveKind {
    /// Analytic basin width at height `delta`, when one exists.
    fn basin_at(&self, delta: f64) -> Option<Vec<f64>> {
        match self {
            ObjectiveKind::GolfCourse { center, epsilon } => Some(vec![*epsilon; center.len()]),
            ObjectiveKind::GaussianWell { center, sigma } => {
                let w = gaussian_basin_width(*sigma, delta);
                Some(vec![w.min(1.0); center.len()])
            }
            ObjectiveKind::Multiwell { centers, slope, .. } => {
                let w = 2.0 * (delta / slope).sqrt();
                Some(vec![w.min(1.0); centers[0].len()])
            }
            ObjectiveKind::Custom { .. } => None,
        }
    }
}

/// Full width of the region where `1 - exp(-r^2 / 2 sigma^2) < delta`.
pub fn gaussian_basin_width(sigma: f64, delta: f64) -> f64 {
    2.0 * sigma * (2.0 * (1.0 / (1.0 - delta)).ln()).sqrt()
}

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// An objective `f: [0,1]^d -> [0,1]` with its gap and basin metadata.
pub struct ObjectiveSpec {
    kind: ObjectiveKind,
    dimension: usize,
    evaluator: Evaluator,
    gap_delta: f64,
    basin_size: Vec<f64>,
    known_optimum: Option<Point>,
    evals: AtomicU64,
    scan_evals: AtomicU64,
}

/// Shares the evaluator; the copy starts with zeroed counters.
impl Clone for ObjectiveSpec {
    fn clone(&self) -> Self {
        ObjectiveSpec {
            kind: self.kind.clone(),
            dimension: self.dimension,
            evaluator: Arc::clone(&self.evaluator),
            gap_delta: self.gap_delta,
            basin_size: self.basin_size.clone(),
            known_optimum: self.known_optimum.clone(),
            evals: AtomicU64::new(0),
            scan_evals: AtomicU64::new(0),
        }
    }
}

impl fmt::Debug for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveSpec")
            .field("kind", &self.kind)
            .field("dimension", &self.dimension)
            .field("gap_delta", &self.gap_delta)
            .field("basin_size", &self.basin_size)
            .field("eval_count", &self.eval_count())
            .field("scan_count", &self.scan_count())
            .finish_non_exhaustive()
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::param("delta", format!("{delta} not in (0, 1)")))
    }
}

fn check_basin(basin: &[f64], dimension: usize) -> Result<()> {
    if basin.len() != dimension {
        return Err(Error::DimensionMismatch {
            expected: dimension,
            actual: basin.len(),
        });
    }
    if let Some(r) = basin.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
        return Err(Error::param("basin_size", format!("{r} not in (0, 1]")));
    }
    Ok(())
}

fn check_dimension(d: usize) -> Result<()> {
    if d == 0 {
        Err(Error::param("dimension", "must be positive"))
    } else {
        Ok(())
    }
}

impl ObjectiveSpec {
    /// Golf-course objective: `0` on the closed hypercube of side `epsilon`
    /// centred at `center`, `1` everywhere else.
    pub fn golf_course(center: &[f64], epsilon: f64) -> Result<Self> {
        let d = center.len();
        check_dimension(d)?;
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::param("epsilon", format!("{epsilon} not in (0, 1)")));
        }
        let half = epsilon / 2.0;
        if let Some(&a) = center.iter().find(|&&a| a - half < 0.0 || a + half > 1.0) {
            return Err(Error::param(
                "center",
                format!("{a} closer than epsilon/2 to the boundary"),
            ));
        }
        // The well edges are precomputed so that `a + epsilon/2` itself maps to 0.
        let bounds: Vec<(f64, f64)> = center.iter().map(|&a| (a - half, a + half)).collect();
        let evaluator: Evaluator = Arc::new(move |p: &[f64]| {
            let inside = p
                .iter()
                .zip(&bounds)
                .all(|(&x, &(lo, hi))| x >= lo && x <= hi);
            if inside {
                0.0
            } else {
                1.0
            }
        });
        let kind = ObjectiveKind::GolfCourse {
            center: center.to_vec(),
            epsilon,
        };
        Ok(Self::assemble(
            kind,
            d,
            evaluator,
            DEFAULT_GAP_DELTA,
            Some(Point::from(center)),
        ))
    }

    /// Smooth well `1 - exp(-|p - a|^2 / (2 sigma^2))`.
    pub fn gaussian_well(center: &[f64], sigma: f64) -> Result<Self> {
        let d = center.len();
        check_dimension(d)?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param("sigma", format!("{sigma} must be positive")));
        }
        if let Some(&a) = center.iter().find(|&&a| !(a > 0.0 && a < 1.0)) {
            return Err(Error::param("center", format!("{a} not interior")));
        }
        let a = center.to_vec();
        let two_s2 = 2.0 * sigma * sigma;
        let evaluator: Evaluator = Arc::new(move |p: &[f64]| {
            let r2: f64 = p.iter().zip(&a).map(|(x, c)| (x - c) * (x - c)).sum();
            1.0 - (-r2 / two_s2).exp()
        });
        let kind = ObjectiveKind::GaussianWell {
            center: center.to_vec(),
            sigma,
        };
        Ok(Self::assemble(
            kind,
            d,
            evaluator,
            DEFAULT_GAP_DELTA,
            Some(Point::from(center)),
        ))
    }

    /// Several paraboloid wells `depth_j + slope |p - c_j|^2`, clipped at 1.
    ///
    /// Exactly one depth must be zero and every other depth must be at least
    /// `delta`. Wells are disjoint when the unit-height balls around their
    /// centres do not overlap.
    pub fn multiwell(centers: &[Vec<f64>], depths: &[f64], delta: f64) -> Result<Self> {
        Self::multiwell_with_slope(centers, depths, delta, DEFAULT_WELL_SLOPE)
    }

    pub fn multiwell_with_slope(
        centers: &[Vec<f64>],
        depths: &[f64],
        delta: f64,
        slope: f64,
    ) -> Result<Self> {
        check_delta(delta)?;
        if centers.is_empty() || centers.len() != depths.len() {
            return Err(Error::param(
                "depths",
                format!("{} centers but {} depths", centers.len(), depths.len()),
            ));
        }
        if !(slope > 0.0 && slope.is_finite()) {
            return Err(Error::param("slope", format!("{slope} must be positive")));
        }
        let d = centers[0].len();
        check_dimension(d)?;
        for c in centers {
            Point::from(c.as_slice()).check_domain(d)?;
        }
        let zeros: Vec<usize> = (0..depths.len()).filter(|&j| depths[j] == 0.0).collect();
        if zeros.len() != 1 {
            return Err(Error::param(
                "depths",
                format!("exactly one depth must be 0, found {}", zeros.len()),
            ));
        }
        for &depth in depths {
            if depth != 0.0 && !(depth >= delta && depth < 1.0) {
                return Err(Error::param(
                    "depths",
                    format!("local depth {depth} not in [delta, 1) with delta = {delta}"),
                ));
            }
        }
        let radius = |depth: f64| ((1.0 - depth) / slope).sqrt();
        for i in 0..centers.len() {
            for j in (i + 1)..centers.len() {
                let gap =
                    Point::from(centers[i].as_slice()).dist(&Point::from(centers[j].as_slice()));
                if gap < radius(depths[i]) + radius(depths[j]) {
                    return Err(Error::param(
                        "centers",
                        format!("wells {i} and {j} overlap"),
                    ));
                }
            }
        }
        let wells: Vec<(Vec<f64>, f64)> = centers
            .iter()
            .cloned()
            .zip(depths.iter().copied())
            .collect();
        let evaluator: Evaluator = Arc::new(move |p: &[f64]| {
            let best = wells
                .iter()
                .map(|(c, depth)| {
                    let r2: f64 = p.iter().zip(c).map(|(x, y)| (x - y) * (x - y)).sum();
                    depth + slope * r2
                })
                .fold(f64::INFINITY, f64::min);
            best.min(1.0)
        });
        let optimum = Point::from(centers[zeros[0]].as_slice());
        let kind = ObjectiveKind::Multiwell {
            centers: centers.to_vec(),
            depths: depths.to_vec(),
            slope,
        };
        Ok(Self::assemble(kind, d, evaluator, delta, Some(optimum)))
    }

    /// User-supplied objective. The closure must map `[0,1]^d` into `[0,1]`;
    /// out-of-range outputs surface as [`Error::ObjectiveRange`].
    pub fn custom<F>(
        name: &str,
        dimension: usize,
        gap_delta: f64,
        basin_size: Vec<f64>,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        check_dimension(dimension)?;
        check_delta(gap_delta)?;
        check_basin(&basin_size, dimension)?;
        Ok(ObjectiveSpec {
            kind: ObjectiveKind::Custom {
                name: name.to_string(),
            },
            dimension,
            evaluator: Arc::new(f),
            gap_delta,
            basin_size,
            known_optimum: None,
            evals: AtomicU64::new(0),
            scan_evals: AtomicU64::new(0),
        })
    }

    fn assemble(
        kind: ObjectiveKind,
        dimension: usize,
        evaluator: Evaluator,
        gap_delta: f64,
        known_optimum: Option<Point>,
    ) -> Self {
        let basin_size = kind
            .basin_at(gap_delta)
            .expect("built-in objectives have an analytic basin");
        ObjectiveSpec {
            kind,
            dimension,
            evaluator,
            gap_delta,
            basin_size,
            known_optimum,
            evals: AtomicU64::new(0),
            scan_evals: AtomicU64::new(0),
        }
    }

    /// Replaces the gap. Built-ins recompute their basin width for the new
    /// height.
    pub fn with_gap_delta(mut self, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        if let ObjectiveKind::Multiwell { depths, .. } = &self.kind {
            if let Some(&bad) = depths.iter().find(|&&x| x != 0.0 && x < delta) {
                return Err(Error::param(
                    "delta",
                    format!("local depth {bad} is below delta = {delta}"),
                ));
            }
        }
        self.gap_delta = delta;
        if let Some(basin) = self.kind.basin_at(delta) {
            self.basin_size = basin;
        }
        Ok(self)
    }

    /// Overrides the declared basin width.
    pub fn with_basin_size(mut self, basin: Vec<f64>) -> Result<Self> {
        check_basin(&basin, self.dimension)?;
        self.basin_size = basin;
        Ok(self)
    }

    /// Attaches a ground-truth minimizer, used only by tests and reports.
    pub fn with_known_optimum(mut self, optimum: Point) -> Result<Self> {
        optimum.check_domain(self.dimension)?;
        self.known_optimum = Some(optimum);
        Ok(self)
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn gap_delta(&self) -> f64 {
        self.gap_delta
    }

    pub fn basin_size(&self) -> &[f64] {
        &self.basin_size
    }

    /// Ground truth for verification. The mapping, search and descent code
    /// paths never read this.
    pub fn known_optimum(&self) -> Option<&Point> {
        self.known_optimum.as_ref()
    }

    /// Solver-path evaluations so far.
    pub fn eval_count(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    /// Validation and scan evaluations so far.
    pub fn scan_count(&self) -> u64 {
        self.scan_evals.load(Ordering::Relaxed)
    }

    /// Evaluates `f(p)` on the solver counter.
    pub fn evaluate(&self, p: &Point) -> Result<f64> {
        p.check_domain(self.dimension)?;
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.call(p)
    }

    /// Evaluates `f(p)` on the scan counter.
    pub fn evaluate_scan(&self, p: &Point) -> Result<f64> {
        p.check_domain(self.dimension)?;
        self.scan_evals.fetch_add(1, Ordering::Relaxed);
        self.call(p)
    }

    /// Uncounted evaluation for callers that keep their own tally.
    pub(crate) fn evaluate_uncounted(&self, p: &Point) -> Result<f64> {
        p.check_domain(self.dimension)?;
        self.call(p)
    }

    fn call(&self, p: &Point) -> Result<f64> {
        let v = (self.evaluator)(p.coords());
        if (0.0..=1.0).contains(&v) {
            Ok(v)
        } else {
            Err(Error::ObjectiveRange(v))
        }
    }
}

/// Outcome of an exhaustive scan of the objective's structural assumptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// The scanned minimum is near zero and the near-zero cells form one cluster.
    pub unique_min_zero: bool,
    /// Every scanned cell below `delta` belongs to the global basin.
    pub gap_holds: bool,
    /// Measured basin width agrees with the declared one within
    /// [`BASIN_RATIO_TOLERANCE`] in every dimension.
    pub basin_size_consistent: bool,
    pub scan_resolution: usize,
    /// Largest shortfall over the failed checks; 0 when all pass.
    pub worst_violation: f64,
    pub min_value: f64,
    pub measured_basin: Vec<f64>,
    pub zero_clusters: usize,
    pub sublevel_components: usize,
}

/// Threshold under which a scanned value counts as "zero".
fn zero_level(delta: f64) -> f64 {
    delta / 4.0
}

/// Exhaustively scans the midpoints of a `resolution^d` lattice and checks
/// unique-zero-minimum, gap and basin-width assumptions. Uses the scan
/// counter only.
pub fn validate_assumptions(spec: &ObjectiveSpec, resolution: usize) -> Result<AssumptionReport> {
    if resolution == 0 {
        return Err(Error::param("resolution", "must be positive"));
    }
    let d = spec.dimension();
    let total = (resolution as u64)
        .checked_pow(d as u32)
        .filter(|&n| n <= MAX_SCAN_CELLS)
        .ok_or_else(|| Error::param("resolution", format!("{resolution}^{d} cells is too many")))?
        as usize;

    let lattice = Lattice { res: resolution, d };
    let mut values = Vec::with_capacity(total);
    let mut digits = vec![0usize; d];
    for idx in 0..total {
        lattice.decode(idx, &mut digits);
        let p: Point = digits
            .iter()
            .map(|&c| (c as f64 + 0.5) / resolution as f64)
            .collect::<Vec<_>>()
            .into();
        values.push(spec.evaluate_scan(&p)?);
    }

    let (argmin, min_value) =
        values
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |best, (i, v)| if v < best.1 { (i, v) } else { best },
            );

    let delta = spec.gap_delta();
    let zl = zero_level(delta);

    let zero_labels = lattice.components(|i| values[i] <= zl);
    let zero_clusters = zero_labels.count;
    let unique_min_zero = min_value <= zl && zero_clusters == 1;

    let sub = lattice.components(|i| values[i] < delta);
    let sublevel_components = sub.count;
    let gap_holds = sublevel_components == 1;

    let global = sub.labels[argmin];
    let mut lo = vec![usize::MAX; d];
    let mut hi = vec![0usize; d];
    let mut secondary_min = f64::INFINITY;
    for (i, label) in sub.labels.iter().enumerate() {
        match label {
            Some(l) if Some(*l) == global => {
                lattice.decode(i, &mut digits);
                for j in 0..d {
                    lo[j] = lo[j].min(digits[j]);
                    hi[j] = hi[j].max(digits[j]);
                }
            }
            Some(_) => secondary_min = secondary_min.min(values[i]),
            None => {}
        }
    }
    let measured_basin: Vec<f64> = if global.is_some() {
        (0..d)
            .map(|j| (hi[j] - lo[j] + 1) as f64 / resolution as f64)
            .collect()
    } else {
        vec![0.0; d]
    };

    let mut basin_excess: f64 = 0.0;
    for (m, r) in measured_basin.iter().zip(spec.basin_size()) {
        let ratio = if *m > 0.0 {
            (m / r).max(r / m)
        } else {
            f64::INFINITY
        };
        basin_excess = basin_excess.max(ratio - BASIN_RATIO_TOLERANCE);
    }
    let basin_size_consistent = basin_excess <= 0.0;

    let mut worst: f64 = 0.0;
    if !unique_min_zero {
        worst = worst.max(min_value - zl);
        if zero_clusters > 1 {
            worst = worst.max(delta - secondary_min.min(delta));
        }
    }
    if !gap_holds {
        worst = worst.max(delta - secondary_min.min(delta));
        if sublevel_components == 0 {
            worst = worst.max(min_value - delta);
        }
    }
    if !basin_size_consistent {
        worst = worst.max(basin_excess.min(f64::MAX));
    }

    Ok(AssumptionReport {
        unique_min_zero,
        gap_holds,
        basin_size_consistent,
        scan_resolution: resolution,
        worst_violation: worst.max(0.0),
        min_value,
        measured_basin,
        zero_clusters,
        sublevel_components,
    })
}

struct Lattice {
    res: usize,
    d: usize,
}

struct Labels {
    labels: Vec<Option<usize>>,
    count: usize,
}

impl Lattice {
    /// Row-major decode: the first coordinate is the most significant digit.
    fn decode(&self, mut idx: usize, digits: &mut [usize]) {
        for j in (0..self.d).rev() {
            digits[j] = idx % self.res;
            idx /= self.res;
        }
    }

    /// Axis-adjacent connected components of the cells selected by `keep`.
    fn components(&self, keep: impl Fn(usize) -> bool) -> Labels {
        let total = self.res.pow(self.d as u32);
        let mut labels = vec![None; total];
        let mut count = 0;
        let mut queue = VecDeque::new();
        let mut digits = vec![0usize; self.d];
        for start in 0..total {
            if labels[start].is_some() || !keep(start) {
                continue;
            }
            labels[start] = Some(count);
            queue.push_back(start);
            while let Some(cur) = queue.pop_front() {
                self.decode(cur, &mut digits);
                let mut stride = 1usize;
                for j in (0..self.d).rev() {
                    if digits[j] > 0 {
                        let nb = cur - stride;
                        if labels[nb].is_none() && keep(nb) {
                            labels[nb] = Some(count);
                            queue.push_back(nb);
                        }
                    }
                    if digits[j] + 1 < self.res {
                        let nb = cur + stride;
                        if labels[nb].is_none() && keep(nb) {
                            labels[nb] = Some(count);
                            queue.push_back(nb);
                        }
                    }
                    stride *= self.res;
                }
            }
            count += 1;
        }
        Labels { labels, count }
    }
}
