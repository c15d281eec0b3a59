//! Command-line front end.
//!
//! Every subcommand reads one JSON [`RunConfig`], applies flag overrides,
//! and writes a record that embeds the resolved config. JSON is the default
//! output; `--format csv` writes the command's table instead, preceded by a
//! `# ensemble-gop <command> v1` comment line. Exit codes: 0 success,
//! 1 usage or configuration error, 2 detected failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde::Serialize;

use crate::analysis::{
    compare, derive_seed, ensemble_threshold_max_n, loglog_slope, ComparisonRow, ThresholdReport,
    BASELINE_LABEL,
};
use crate::config::{OutputFormat, RunConfig};
use crate::ensemble::MeasurementModel;
use crate::error::{Error, Result};
use crate::mapping::DiscreteOracle;
use crate::objective::validate_assumptions;
use crate::pipeline::{solve, SolveStatus};
use crate::search::{required_trials, run_search, SearchResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

const SCHEMA_VERSION: u32 = 1;
const TOOL: &str = "ensemble-gop";

#[derive(Debug, Parser)]
#[command(
    name = "ensemble-gop",
    version,
    about = "Ensemble-search global optimizer"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Map, search and refine a configured objective.
    Solve(CommonArgs),
    /// Search an explicit marked set (no objective, no descent).
    Search(CommonArgs),
    /// Sweep sizes and noise levels; emit query-count tables.
    Bench(CommonArgs),
    /// Compare against the Grover baselines and report the crossover size.
    Compare(CommonArgs),
    /// Exhaustively check the objective's structural assumptions.
    Validate(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Search(_) => "search",
            Command::Bench(_) => "bench",
            Command::Compare(_) => "compare",
            Command::Validate(_) => "validate",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Solve(a)
            | Command::Search(a)
            | Command::Bench(a)
            | Command::Compare(a)
            | Command::Validate(a) => a,
        }
    }
}

/// Tabular view of a command's result.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

/// What a command produced: a JSON-serializable result, an optional table
/// and the exit code.
pub struct Outcome {
    pub result: serde_json::Value,
    pub table: Option<Table>,
    pub exit_code: i32,
}

#[derive(Serialize)]
struct Record<'a> {
    tool: &'static str,
    schema_version: u32,
    command: &'a str,
    config: &'a RunConfig,
    result: &'a serde_json::Value,
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("results serialize")
}

/// Loads the config named by `args` and applies the flag overrides.
pub fn resolve_config(args: &CommonArgs) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output.path = Some(out.display().to_string());
    }
    if let Some(format) = args.format {
        config.output.format = format;
    }
    Ok(config)
}

pub fn cmd_solve(config: &RunConfig) -> Result<Outcome> {
    let report = solve(config)?;
    let exit_code = if report.status == SolveStatus::Success {
        EXIT_OK
    } else {
        EXIT_FAILURE
    };
    if report.status == SolveStatus::SearchFailed {
        eprintln!(
            "search failed: cell {} is not marked after {} tests; the grid (M = {}) may be coarser than the basin",
            report.found_cell,
            report.search.trace.len(),
            report.grid.cells_per_dim()
        );
    }
    Ok(Outcome {
        table: Some(trace_table(&report.search)),
        result: to_value(&report),
        exit_code,
    })
}

pub fn cmd_search(config: &RunConfig) -> Result<Outcome> {
    let input = config
        .search
        .as_ref()
        .ok_or_else(|| Error::Config("no `search` section".into()))?;
    if !input.n_padded.is_power_of_two() {
        return Err(Error::Config(format!(
            "search.n_padded = {} is not a power of two",
            input.n_padded
        )));
    }
    let oracle = DiscreteOracle::from_marked(input.n_padded, &input.marked)?;
    let model = config.measurement_model()?;
    let (result, exit_code) = match run_search(&oracle, &model, &config.search_config()) {
        Ok(r) => (r, EXIT_OK),
        Err(Error::VerificationFailed(r)) => (*r, EXIT_FAILURE),
        Err(e) => return Err(e),
    };
    Ok(Outcome {
        table: Some(trace_table(&result)),
        result: to_value(&result),
        exit_code,
    })
}

fn trace_table(result: &SearchResult) -> Table {
    Table {
        header: vec![
            "k",
            "lo",
            "hi",
            "partition_size",
            "n_e",
            "mean_signal",
            "threshold",
            "decision",
        ],
        rows: result
            .trace
            .iter()
            .map(|t| {
                vec![
                    t.k.to_string(),
                    t.tested.lo().to_string(),
                    t.tested.hi().to_string(),
                    t.partition_size.to_string(),
                    t.n_e.to_string(),
                    t.mean_signal.to_string(),
                    t.threshold.to_string(),
                    serde_json::to_value(t.decision)
                        .unwrap()
                        .as_str()
                        .unwrap()
                        .to_string(),
                ]
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n_padded: u64,
    pub delta1: f64,
    pub safety_c: f64,
    pub tests: u32,
    pub predicted_queries: u64,
    pub first_test_trials: u64,
    pub realized_runs: u32,
    pub realized_mean_queries: Option<f64>,
    pub realized_successes: u32,
    /// Every realized run used exactly the predicted number of queries.
    pub accounting_exact: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSlope {
    pub delta1: f64,
    /// Least-squares slope of log(predicted queries) against log(n).
    pub loglog_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub slopes: Vec<BenchSlope>,
}

/// Predicted and realized query counts over the configured sweep.
pub fn bench(config: &RunConfig) -> Result<BenchReport> {
    let b = &config.bench;
    if let Some(&bits) = b.bits.iter().find(|&&bits| bits == 0 || bits > 40) {
        return Err(Error::Config(format!("bench.bits {bits} not in 1..=40")));
    }
    let search_cfg = config.search_config();
    search_cfg.validate()?;
    let mut rows = Vec::new();
    let mut row_id = 0u64;
    for &delta1 in &b.delta1 {
        for &bits in &b.bits {
            let n = 1u64 << bits;
            let predicted = search_cfg.predicted_queries(n, delta1);
            let mut row = BenchRow {
                n_padded: n,
                delta1,
                safety_c: config.safety_c,
                tests: bits,
                predicted_queries: predicted,
                first_test_trials: required_trials(n / 2, delta1, config.safety_c),
                realized_runs: 0,
                realized_mean_queries: None,
                realized_successes: 0,
                accounting_exact: None,
            };
            let budget = predicted.saturating_mul(b.runs as u64);
            if b.runs > 0 && budget <= b.max_realized_queries {
                let mut pick = MeasurementModel {
                    delta1: 0.0,
                    molecules_per_subensemble: None,
                    rng_seed: derive_seed(config.seed, row_id),
                }
                .rng();
                let mut total = 0u64;
                let mut exact = true;
                for run in 0..b.runs {
                    let q = pick.random_range(0..n);
                    let oracle = DiscreteOracle::from_marked(n, &[q])?;
                    let model = MeasurementModel {
                        delta1,
                        molecules_per_subensemble: config.molecules_per_subensemble,
                        rng_seed: derive_seed(config.seed ^ row_id.rotate_left(32), run as u64),
                    };
                    let result = match run_search(&oracle, &model, &search_cfg) {
                        Ok(r) => {
                            row.realized_successes += 1;
                            r
                        }
                        Err(Error::VerificationFailed(r)) => *r,
                        Err(e) => return Err(e),
                    };
                    exact &= result.total_queries == predicted;
                    total += result.total_queries;
                }
                row.realized_runs = b.runs;
                row.realized_mean_queries = Some(total as f64 / b.runs as f64);
                row.accounting_exact = Some(exact);
            }
            rows.push(row);
            row_id += 1;
        }
    }
    let slopes = b
        .delta1
        .iter()
        .filter(|_| b.bits.len() >= 2)
        .map(|&delta1| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.delta1 == delta1)
                .map(|r| (r.n_padded as f64, r.predicted_queries as f64))
                .unzip();
            BenchSlope {
                delta1,
                loglog_slope: loglog_slope(&xs, &ys),
            }
        })
        .collect();
    Ok(BenchReport { rows, slopes })
}

pub fn cmd_bench(config: &RunConfig) -> Result<Outcome> {
    let report = bench(config)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    let table = Table {
        header: vec![
            "n_padded",
            "delta1",
            "safety_c",
            "tests",
            "predicted_queries",
            "first_test_trials",
            "realized_runs",
            "realized_mean_queries",
            "realized_successes",
            "accounting_exact",
        ],
        rows: report
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.n_padded.to_string(),
                    r.delta1.to_string(),
                    r.safety_c.to_string(),
                    r.tests.to_string(),
                    r.predicted_queries.to_string(),
                    r.first_test_trials.to_string(),
                    r.realized_runs.to_string(),
                    opt(r.realized_mean_queries.map(|x| x.to_string())),
                    r.realized_successes.to_string(),
                    opt(r.accounting_exact.map(|x| x.to_string())),
                ]
            })
            .collect(),
    };
    Ok(Outcome {
        result: to_value(&report),
        table: Some(table),
        exit_code: EXIT_OK,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub baseline: &'static str,
    pub rows: Vec<ComparisonRow>,
    pub thresholds: Vec<ThresholdReport>,
}

pub fn cmd_compare(config: &RunConfig) -> Result<Outcome> {
    let c = &config.compare;
    let mut rows = Vec::new();
    for &delta1 in &c.delta1 {
        for &bits in &c.bits {
            if bits > 62 {
                return Err(Error::Config(format!("compare.bits {bits} exceeds 62")));
            }
            rows.push(compare(1u64 << bits, delta1, config.safety_c)?);
        }
    }
    let thresholds = c
        .delta1
        .iter()
        .filter(|&&d| d > 0.0 && d < 1.0)
        .map(|&d| ensemble_threshold_max_n(d))
        .collect::<Result<Vec<_>>>()?;
    let table = Table {
        header: vec![
            "n_items",
            "delta1",
            "safety_c",
            "ensemble_queries",
            "first_test_trials",
            "grover_pure",
            "grover_pseudopure",
            "ensemble_wins_vs_pure",
        ],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.n_items.to_string(),
                    r.delta1.to_string(),
                    r.safety_c.to_string(),
                    r.ensemble_queries.to_string(),
                    r.first_test_trials.to_string(),
                    r.grover_pure.to_string(),
                    r.grover_pseudopure.to_string(),
                    r.ensemble_wins_vs_pure.to_string(),
                ]
            })
            .collect(),
    };
    let report = CompareReport {
        baseline: BASELINE_LABEL,
        rows,
        thresholds,
    };
    Ok(Outcome {
        result: to_value(&report),
        table: Some(table),
        exit_code: EXIT_OK,
    })
}

pub fn cmd_validate(config: &RunConfig) -> Result<Outcome> {
    let spec = config.build_objective()?;
    let report = validate_assumptions(&spec, config.validate.resolution)?;
    let all = report.unique_min_zero && report.gap_holds && report.basin_size_consistent;
    let table = Table {
        header: vec![
            "unique_min_zero",
            "gap_holds",
            "basin_size_consistent",
            "scan_resolution",
            "worst_violation",
        ],
        rows: vec![vec![
            report.unique_min_zero.to_string(),
            report.gap_holds.to_string(),
            report.basin_size_consistent.to_string(),
            report.scan_resolution.to_string(),
            report.worst_violation.to_string(),
        ]],
    };
    Ok(Outcome {
        result: to_value(&report),
        table: Some(table),
        exit_code: if all { EXIT_OK } else { EXIT_FAILURE },
    })
}

/// Renders `outcome` for `command` in the configured format.
pub fn render(command: &str, config: &RunConfig, outcome: &Outcome) -> Result<String> {
    match config.output.format {
        OutputFormat::Json => {
            let record = Record {
                tool: TOOL,
                schema_version: SCHEMA_VERSION,
                command,
                config,
                result: &outcome.result,
            };
            let mut text = serde_json::to_string_pretty(&record).expect("record serializes");
            text.push('\n');
            Ok(text)
        }
        OutputFormat::Csv => {
            let table = outcome
                .table
                .as_ref()
                .ok_or_else(|| Error::Config(format!("`{command}` has no CSV form")))?;
            let mut buf = format!("# {TOOL} {command} v{SCHEMA_VERSION}\n").into_bytes();
            {
                let mut w = csv::Writer::from_writer(&mut buf);
                let io = |e: csv::Error| Error::Config(e.to_string());
                w.write_record(&table.header).map_err(io)?;
                for row in &table.rows {
                    w.write_record(row).map_err(io)?;
                }
                w.flush().map_err(|e| Error::Config(e.to_string()))?;
            }
            Ok(String::from_utf8(buf).expect("csv output is utf-8"))
        }
    }
}

fn execute(command: &Command) -> Result<i32> {
    let config = resolve_config(command.args())?;
    let outcome = match command {
        Command::Solve(_) => cmd_solve(&config)?,
        Command::Search(_) => cmd_search(&config)?,
        Command::Bench(_) => cmd_bench(&config)?,
        Command::Compare(_) => cmd_compare(&config)?,
        Command::Validate(_) => cmd_validate(&config)?,
    };
    let text = render(command.name(), &config, &outcome)?;
    match &config.output.path {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Error::Config(format!("writing {path}: {e}")))?
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Error::Config(e.to_string()))?;
        }
    }
    Ok(outcome.exit_code)
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
