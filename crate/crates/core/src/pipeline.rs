//! End-to-end solve: map the objective to a marked-cell search, run the
//! ensemble search, then refine the found midpoint by descent.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::descent::{refine, DescentResult};
use crate::error::{Error, Result};
use crate::mapping::{
    choose_grid_resolution, choose_sharpening_exponent, index_to_midpoint, DiscreteOracle, GridSpec,
};
use crate::objective::{ObjectiveSpec, Point};
use crate::search::{run_search, SearchResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Search verified (or unverified by request) and descent reached `f_tol`.
    Success,
    /// The surviving cell is not marked.
    SearchFailed,
    /// Search succeeded but descent stopped above `f_tol`.
    DescentIncomplete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    /// Solver oracle queries (ensemble applications plus single queries).
    pub oracle_queries: u64,
    /// Solver-path evaluations of `f` (verification plus descent).
    pub objective_evals: u64,
    /// Per-index `h` evaluations spent simulating ensemble applications.
    pub classical_work: u64,
    pub scan_evals: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub grid: GridSpec,
    pub sharpening_m: u32,
    pub cut_height: f64,
    pub found_cell: u64,
    pub found_midpoint: Option<Point>,
    pub search: SearchResult,
    pub descent: Option<DescentResult>,
    pub counters: Counters,
}

impl SolveReport {
    pub fn succeeded(&self) -> bool {
        self.status == SolveStatus::Success
    }

    /// Refined point, if descent ran.
    pub fn point(&self) -> Option<&Point> {
        self.descent.as_ref().map(|d| &d.point)
    }
}

/// Grid and sharpening exponent the config resolves to for `spec`.
pub fn resolve_mapping(config: &RunConfig, spec: &ObjectiveSpec) -> Result<(GridSpec, u32)> {
    let cells = match config.cells_per_dim {
        Some(m) => m,
        None => {
            let basin = config
                .basin_override
                .as_deref()
                .unwrap_or(spec.basin_size());
            choose_grid_resolution(basin, config.grid_safety)?
        }
    };
    let grid = GridSpec::new(spec.dimension(), cells)?;
    let m = match config.m_override {
        Some(0) => return Err(Error::param("m_override", "must be >= 1")),
        Some(m) => m,
        None => choose_sharpening_exponent(spec.gap_delta())?,
    };
    Ok((grid, m))
}

/// Runs the full pipeline for `config`.
///
/// Configuration problems are errors; a failed search or an incomplete
/// descent is reported through [`SolveReport::status`].
pub fn solve(config: &RunConfig) -> Result<SolveReport> {
    let spec = Arc::new(config.build_objective()?);
    solve_with(config, spec)
}

/// Same as [`solve`] with a caller-built objective (custom objectives).
pub fn solve_with(config: &RunConfig, spec: Arc<ObjectiveSpec>) -> Result<SolveReport> {
    let (grid, m) = resolve_mapping(config, &spec)?;
    let cut_height = 0.5f64.powi(m as i32);
    if config.descent.f_tol >= cut_height {
        return Err(Error::param(
            "descent.f_tol",
            format!(
                "{} must be below the cut height {cut_height}",
                config.descent.f_tol
            ),
        ));
    }
    config.descent.validate()?;
    let model = config.measurement_model()?;
    let oracle = DiscreteOracle::from_objective(Arc::clone(&spec), grid, m)?;

    let (search, search_ok) = match run_search(&oracle, &model, &config.search_config()) {
        Ok(r) => (r, true),
        Err(Error::VerificationFailed(r)) => (*r, false),
        Err(e) => return Err(e),
    };

    let found = search.found;
    let found_midpoint = index_to_midpoint(&grid, found).ok();
    let descent = match (&found_midpoint, search_ok) {
        (Some(start), true) => Some(refine(&spec, start, &config.descent)?),
        _ => None,
    };

    let status = match (&descent, search_ok) {
        (_, false) | (None, _) => SolveStatus::SearchFailed,
        (Some(d), true) if d.f_value < config.descent.f_tol => SolveStatus::Success,
        (Some(_), true) => SolveStatus::DescentIncomplete,
    };

    Ok(SolveReport {
        status,
        grid,
        sharpening_m: m,
        cut_height,
        found_cell: found.0,
        found_midpoint,
        search,
        descent,
        counters: Counters {
            oracle_queries: oracle.query_count(),
            objective_evals: spec.eval_count(),
            classical_work: oracle.classical_work(),
            scan_evals: spec.scan_count(),
        },
    })
}
