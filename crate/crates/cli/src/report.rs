use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::CliError;

/// Version of the report layout.
pub const FORMAT_VERSION: u32 = 1;

/// A measured value compared against a named bound or oracle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    /// The bound carries no information (for example it exceeds a trivial
    /// norm bound); such checks always pass.
    pub vacuous: bool,
    pub passed: bool,
}

impl Check {
    /// `measured <= bound` with a small absolute slack.
    pub fn at_most(name: &str, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), measured, bound, vacuous: false, passed: measured <= bound + 1e-9 }
    }

    pub fn vacuous(name: &str, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), measured, bound, vacuous: true, passed: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Versions {
    pub format: u32,
    pub package: &'static str,
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub config_echo: ExperimentConfig,
    /// Wall-clock milliseconds per phase.
    pub timings: BTreeMap<String, f64>,
    pub results: Value,
    pub checks: Vec<Check>,
    pub versions: Versions,
    /// Tabular payload as CSV text with a header row.
    #[serde(skip)]
    pub csv: Option<String>,
}

impl RunReport {
    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Everything except timings; identical across replays of the same config.
    pub fn payload_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Value::Object(map) = &mut v {
            map.remove("timings");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }
}

/// Writes the JSON report to `out` (stdout when `None`) and, for tabular
/// payloads, the CSV next to it with a `.csv` extension. Returns the files written.
pub fn emit_report(r: &RunReport, out: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let json = r.to_json();
    let Some(path) = out else {
        let mut stdout = std::io::stdout().lock();
        writeln!(stdout, "{json}").map_err(|e| CliError::Io(format!("stdout: {e}")))?;
        return Ok(Vec::new());
    };
    let mut written = Vec::new();
    write_file(path, &json)?;
    written.push(path.to_path_buf());
    if let Some(csv) = &r.csv {
        let csv_path = path.with_extension("csv");
        write_file(&csv_path, csv)?;
        written.push(csv_path);
    }
    Ok(written)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}
