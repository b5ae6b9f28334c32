//! Command-line flags and their JSON config-file counterparts.
//!
//! Every subcommand's options can also come from `--config <file>`; flags
//! given on the command line win over the file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use minpen::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::commands::CliError;

#[derive(Debug, Parser)]
#[command(name = "minpen", version, about = "Minimum-penalty multi-response regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit at a single (delta, gamma).
    Fit(FitArgs),
    /// Select (delta, gamma) by cross-validation or a held-out test set.
    Tune(TuneArgs),
    /// Solve every relation graph and keep the best.
    Oracle(OracleArgs),
    /// Selective confidence intervals for a fitted gaussian model.
    Infer(InferArgs),
    /// Replicated simulation study.
    Simulate(SimulateArgs),
}

/// Fills every unset field of `$dst` from `$src`.
macro_rules! fill {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f.take(); } )*
    };
}

fn read_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
}

/// Flags shared by every command that reads a data CSV.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Response columns, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub responses: Option<Vec<String>>,
    /// Trial-count columns paired with the responses (binomial counts data).
    #[arg(long, value_delimiter = ',')]
    pub trials: Option<Vec<String>>,
    /// Predictor columns; defaults to all remaining columns.
    #[arg(long, value_delimiter = ',')]
    pub predictors: Option<Vec<String>>,
    /// gaussian or binomial.
    #[arg(long)]
    pub family: Option<String>,
}

impl DataArgs {
    fn fill_from(&mut self, mut o: DataArgs) {
        fill!(self, o; data, responses, trials, predictors, family);
    }
}

/// Solver switches available as flags; everything else lives in the
/// config file's `solver` object.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverArgs {
    /// Fit on the input scale without centering or scaling.
    #[arg(long)]
    pub no_standardize: bool,
    /// Report coefficients on the standardized scale.
    #[arg(long)]
    pub report_standardized: bool,
    /// Full solver settings (config file only).
    #[arg(skip)]
    pub settings: Option<SolverConfig>,
}

impl SolverArgs {
    fn fill_from(&mut self, o: SolverArgs) {
        self.no_standardize |= o.no_standardize;
        self.report_standardized |= o.report_standardized;
        if self.settings.is_none() {
            self.settings = o.settings;
        }
    }

    pub fn resolve(&self) -> SolverConfig {
        let mut cfg = self.settings.clone().unwrap_or_default();
        if self.no_standardize {
            cfg.standardize = false;
        }
        if self.report_standardized {
            cfg.report_standardized = true;
        }
        cfg
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitArgs {
    /// JSON config file; flags override its entries.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Keep this relation graph (r x r JSON integer matrix) fixed.
    #[arg(long)]
    pub fixed_graph: Option<PathBuf>,
    /// Output model JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    /// Delta grid, comma separated; defaults to a 20-point log path from delta_max.
    #[arg(long, value_delimiter = ',')]
    pub grid_delta: Option<Vec<f64>>,
    /// Gamma grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub grid_gamma: Option<Vec<f64>>,
    /// Number of cross-validation folds.
    #[arg(long, conflicts_with = "test_data")]
    pub folds: Option<usize>,
    /// Held-out CSV scored instead of cross-validation.
    #[arg(long)]
    pub test_data: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output loss table CSV; the chosen pair goes to `<stem>.chosen.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Largest number of ordered response pairs to enumerate over.
    #[arg(long)]
    pub max_pairs: Option<usize>,
    /// Output model JSON; the per-graph table goes to `<stem>.graphs.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Model JSON written by `fit`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// known:<csv file>, residual-full or diagonal.
    #[arg(long)]
    pub sigma: Option<String>,
    /// Target of each interval: selected (projection onto the selected
    /// columns) or full (full-design coefficient).
    #[arg(long)]
    pub target: Option<String>,
    /// Output interval CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// block, overlap or binom_block.
    #[arg(long)]
    pub design: Option<String>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub v: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub n_val: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma separated subset of minpen, t_minpen, sen.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub grid_gamma: Option<Vec<f64>>,
    #[arg(long)]
    pub path_len: Option<usize>,
    /// Output long-format metrics CSV; summaries go to `<stem>.summary.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

/// Merges flags over an optional config file.
pub trait Resolve: Sized + Serialize {
    fn config_path(&self) -> Option<&Path>;
    fn fill_from(&mut self, file: Self);

    fn resolve(mut self) -> Result<Self, CliError>
    where
        Self: for<'de> Deserialize<'de>,
    {
        if let Some(path) = self.config_path().map(Path::to_path_buf) {
            let file: Self = read_config(&path)?;
            self.fill_from(file);
        }
        Ok(self)
    }

    /// Resolved settings as written next to the outputs.
    fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

impl Resolve for FitArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }
    fn fill_from(&mut self, mut o: Self) {
        self.data.fill_from(std::mem::take(&mut o.data));
        self.solver.fill_from(std::mem::take(&mut o.solver));
        fill!(self, o; delta, gamma, fixed_graph, out);
    }
}

impl Resolve for TuneArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }
    fn fill_from(&mut self, mut o: Self) {
        self.data.fill_from(std::mem::take(&mut o.data));
        self.solver.fill_from(std::mem::take(&mut o.solver));
        fill!(self, o; grid_delta, grid_gamma, folds, test_data, seed, out);
    }
}

impl Resolve for OracleArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }
    fn fill_from(&mut self, mut o: Self) {
        self.data.fill_from(std::mem::take(&mut o.data));
        self.solver.fill_from(std::mem::take(&mut o.solver));
        fill!(self, o; delta, gamma, max_pairs, out);
    }
}

impl Resolve for InferArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }
    fn fill_from(&mut self, mut o: Self) {
        self.data.fill_from(std::mem::take(&mut o.data));
        fill!(self, o; model, alpha, sigma, target, out);
    }
}

impl Resolve for SimulateArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }
    fn fill_from(&mut self, mut o: Self) {
        self.solver.fill_from(std::mem::take(&mut o.solver));
        fill!(self, o; design, p, n, r, eta, lambda, v, rho, n_val, reps, seed, methods, grid_gamma, path_len, out);
    }
}
