//! Global optimization by reduction to a marked-cell search that is solved
//! on a classically simulated ensemble machine.
//!
//! The pipeline is: [`objective`] (a continuous `f` with a known basin size)
//! → [`mapping`] (sharpening, grid, binary oracle) → [`search`]
//! (binary-partition tests on [`ensemble`] states) → [`descent`] (local
//! refinement). [`analysis`] holds the query-complexity baselines.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod descent;
pub mod ensemble;
pub mod error;
pub mod mapping;
pub mod objective;
pub mod pipeline;
pub mod search;

pub use config::RunConfig;
pub use descent::{refine, DescentConfig, DescentResult};
pub use ensemble::{MeasurementModel, MixedState, Partition};
pub use error::{Error, Result};
pub use mapping::{CellIndex, DiscreteOracle, GridSpec};
pub use objective::{ObjectiveSpec, Point};
pub use pipeline::{solve, SolveReport, SolveStatus};
pub use search::{run_search, SearchConfig, SearchResult};
