//! Run configuration shared by the CLI, the experiment runner and the
//! Python bindings. One JSON document drives every subcommand; sections a
//! command does not use are ignored but still echoed.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::descent::DescentConfig;
use crate::ensemble::MeasurementModel;
use crate::error::{Error, Result};
use crate::mapping::DEFAULT_GRID_SAFETY;
use crate::objective::{ObjectiveSpec, DEFAULT_WELL_SLOPE};
use crate::search::{SearchConfig, DEFAULT_SAFETY_C};

/// Built-in objective selected by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveConfig {
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
        #[serde(default = "default_slope")]
        slope: f64,
    },
}

fn default_slope() -> f64 {
    DEFAULT_WELL_SLOPE
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub format: OutputFormat,
}

/// Explicit marked set for search-only runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchInput {
    pub n_padded: u64,
    pub marked: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    /// Sweep over `n_padded = 2^bits`.
    #[serde(default = "default_bench_bits")]
    pub bits: Vec<u32>,
    #[serde(default = "default_bench_delta1")]
    pub delta1: Vec<f64>,
    /// Realized searches per row.
    #[serde(default = "default_bench_runs")]
    pub runs: u32,
    /// Rows whose predicted cost exceeds this are not realized.
    #[serde(default = "default_bench_budget")]
    pub max_realized_queries: u64,
}

fn default_bench_bits() -> Vec<u32> {
    (4..=14).collect()
}

fn default_bench_delta1() -> Vec<f64> {
    vec![0.0, 0.5f64.powi(6)]
}

fn default_bench_runs() -> u32 {
    3
}

fn default_bench_budget() -> u64 {
    2_000_000
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            bits: default_bench_bits(),
            delta1: default_bench_delta1(),
            runs: default_bench_runs(),
            max_realized_queries: default_bench_budget(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    #[serde(default = "default_compare_bits")]
    pub bits: Vec<u32>,
    #[serde(default = "default_compare_delta1")]
    pub delta1: Vec<f64>,
}

fn default_compare_bits() -> Vec<u32> {
    (4..=20).step_by(4).collect()
}

fn default_compare_delta1() -> Vec<f64> {
    vec![0.0, 1e-7, 1e-2]
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            bits: default_compare_bits(),
            delta1: default_compare_delta1(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn default_resolution() -> usize {
    256
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            resolution: default_resolution(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub objective: Option<ObjectiveConfig>,
    /// Gap override; built-ins default to 1/2.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Basin width used for grid sizing instead of the objective's metadata.
    #[serde(default)]
    pub basin_override: Option<Vec<f64>>,
    #[serde(default)]
    pub delta1: f64,
    #[serde(default)]
    pub molecules_per_subensemble: Option<u64>,
    #[serde(default = "default_safety_c")]
    pub safety_c: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_grid_safety")]
    pub grid_safety: f64,
    /// Explicit `M`, bypassing the resolution rule.
    #[serde(default)]
    pub cells_per_dim: Option<u64>,
    #[serde(default)]
    pub m_override: Option<u32>,
    #[serde(default = "default_true")]
    pub verify_result: bool,
    #[serde(default)]
    pub max_tests: Option<u32>,
    #[serde(default)]
    pub descent: DescentConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub search: Option<SearchInput>,
    #[serde(default)]
    pub bench: BenchConfig,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default)]
    pub validate: ValidateConfig,
}

fn default_safety_c() -> f64 {
    DEFAULT_SAFETY_C
}

fn default_grid_safety() -> f64 {
    DEFAULT_GRID_SAFETY
}

fn default_true() -> bool {
    true
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            objective: None,
            delta: None,
            basin_override: None,
            delta1: 0.0,
            molecules_per_subensemble: None,
            safety_c: DEFAULT_SAFETY_C,
            seed: 0,
            grid_safety: DEFAULT_GRID_SAFETY,
            cells_per_dim: None,
            m_override: None,
            verify_result: true,
            max_tests: None,
            descent: DescentConfig::default(),
            output: OutputConfig::default(),
            search: None,
            bench: BenchConfig::default(),
            compare: CompareConfig::default(),
            validate: ValidateConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn golf_course(center: &[f64], epsilon: f64) -> Self {
        RunConfig {
            objective: Some(ObjectiveConfig::GolfCourse {
                center: center.to_vec(),
                epsilon,
            }),
            ..RunConfig::default()
        }
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            safety_c: self.safety_c,
            verify_result: self.verify_result,
            max_tests: self.max_tests,
        }
    }

    pub fn measurement_model(&self) -> Result<MeasurementModel> {
        let model = MeasurementModel {
            delta1: self.delta1,
            molecules_per_subensemble: self.molecules_per_subensemble,
            rng_seed: self.seed,
        };
        model.validate()?;
        Ok(model)
    }

    /// Builds the configured objective, applying the gap override.
    pub fn build_objective(&self) -> Result<ObjectiveSpec> {
        let objective = self
            .objective
            .as_ref()
            .ok_or_else(|| Error::Config("no `objective` section".into()))?;
        let delta = self.delta;
        let spec = match objective {
            ObjectiveConfig::GolfCourse { center, epsilon } => {
                ObjectiveSpec::golf_course(center, *epsilon)?
            }
            ObjectiveConfig::GaussianWell { center, sigma } => {
                ObjectiveSpec::gaussian_well(center, *sigma)?
            }
            ObjectiveConfig::Multiwell {
                centers,
                depths,
                slope,
            } => {
                let d = delta.unwrap_or(crate::objective::DEFAULT_GAP_DELTA);
                return ObjectiveSpec::multiwell_with_slope(centers, depths, d, *slope);
            }
        };
        match delta {
            Some(d) => spec.with_gap_delta(d),
            None => Ok(spec),
        }
    }
}
