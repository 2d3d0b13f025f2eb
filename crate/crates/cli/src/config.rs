//! Run configuration and per-command parameter sets.
//!
//! A config file carries the command name and a `params` object; each command
//! parses `params` into its own struct with unknown keys rejected. The same
//! structs double as the flag sets of the `qlc0` subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use qlc0_core::learner::AccuracySchedule;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    ApproxCz,
    ApproxCircuit,
    Choi,
    Learn,
    TolerantTest,
    Reduce,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::ApproxCz => "approx-cz",
            Command::ApproxCircuit => "approx-circuit",
            Command::Choi => "choi",
            Command::Learn => "learn",
            Command::TolerantTest => "tolerant-test",
            Command::Reduce => "reduce",
        }
    }
}

fn default_kappa() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit_path: Option<PathBuf>,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_path: Option<PathBuf>,
    #[serde(default)]
    pub strict: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_qubits: Option<usize>,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            circuit_path: None,
            params: BTreeMap::new(),
            seed: 0,
            out_path: None,
            strict: false,
            max_qubits: None,
            kappa: 1.0,
        }
    }

    /// Reads a config file. Relative `circuit_path` and `out_path` entries are
    /// resolved against the file's directory.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.circuit_path, &mut cfg.out_path].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn with_params<P: Serialize>(mut self, params: &P) -> Self {
        if let Value::Object(map) = serde_json::to_value(params).expect("params serialize") {
            self.params = map.into_iter().collect();
        }
        self
    }

    pub(crate) fn parse_params<P: for<'de> Deserialize<'de>>(&self) -> Result<P, CliError> {
        let map: serde_json::Map<String, Value> = self.params.clone().into_iter().collect();
        serde_json::from_value(Value::Object(map))
            .map_err(|e| CliError::Validation(format!("{} params: {e}", self.command.name())))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumTarget {
    /// Unitary on all wires.
    #[default]
    Unitary,
    /// Choi representation of the channel.
    Choi,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct SpectrumParams {
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub of: SpectrumTarget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ApproxCzParams {
    #[arg(long)]
    pub k: usize,
    /// Single value of r; without it a sweep over `--r-grid` is run.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// Sweep points; values outside (1, k] are skipped.
    #[arg(long, value_delimiter = ',', default_values_t = [2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0])]
    #[serde(default = "default_r_grid")]
    pub r_grid: Vec<f64>,
}

fn default_r_grid() -> Vec<f64> {
    (1..=8).map(|i| 2.0 * i as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ApproxCircuitParams {
    /// Pauli string such as `ZIIX`, or a spectrum CSV file.
    #[arg(long)]
    pub observable: String,
    #[arg(long)]
    pub r: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ChoiParams {
    /// Number of shadow samples of the Choi state to record.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shadows: Option<u64>,
    /// JSON-lines file receiving the shadow samples.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shadow_out: Option<PathBuf>,
    /// Median-of-means batches recorded with the shadows.
    #[arg(long, default_value_t = 1)]
    #[serde(default = "one")]
    pub batches: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleArg {
    Algorithm1,
    Parseval,
}

impl From<ScheduleArg> for AccuracySchedule {
    fn from(s: ScheduleArg) -> Self {
        match s {
            ScheduleArg::Algorithm1 => AccuracySchedule::Algorithm1,
            ScheduleArg::Parseval => AccuracySchedule::Parseval,
        }
    }
}

fn algorithm1() -> ScheduleArg {
    ScheduleArg::Algorithm1
}

fn parseval() -> ScheduleArg {
    ScheduleArg::Parseval
}

fn batch_constant() -> f64 {
    4.0
}

fn max_samples() -> f64 {
    1e15
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct LearnParams {
    /// Truncation degree; derived from the degree schedule when absent.
    #[arg(long = "D")]
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Algorithm1)]
    #[serde(default = "algorithm1")]
    pub schedule: ScheduleArg,
    #[arg(long, default_value_t = 4.0)]
    #[serde(default = "batch_constant")]
    pub batch_constant: f64,
    #[arg(long, default_value_t = 1e15)]
    #[serde(default = "max_samples")]
    pub max_samples: f64,
    /// Learn from recorded shadows instead of simulating new ones.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shadows_in: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PurityArg {
    #[default]
    Exact,
    Sampled,
}

fn purity_samples() -> u64 {
    1_000_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct TolerantParams {
    #[arg(long = "D")]
    #[serde(rename = "D")]
    pub d: usize,
    #[arg(long)]
    pub eps1: f64,
    #[arg(long)]
    pub eps2: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub purity: PurityArg,
    #[arg(long, default_value_t = 1_000_000)]
    #[serde(default = "purity_samples")]
    pub purity_samples: u64,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Parseval)]
    #[serde(default = "parseval")]
    pub schedule: ScheduleArg,
    #[arg(long, default_value_t = 1e15)]
    #[serde(default = "max_samples")]
    pub max_samples: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ReduceModeArg {
    #[default]
    Exact,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ReduceParams {
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub mode: ReduceModeArg,
    /// Learner accuracy (sampled mode).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Overall failure budget (sampled mode).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}
