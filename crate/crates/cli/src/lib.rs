//! Library side of the `qlc0` command-line tool: run configurations, command
//! dispatch and report emission.

pub mod commands;
pub mod config;
pub mod report;

use std::collections::BTreeMap;
use std::time::Instant;

use qlc0_core::config::set_max_qubits;
use qlc0_core::Error;
use serde_json::json;

pub use config::{Command, ExperimentConfig};
pub use report::{emit_report, Check, RunReport, Versions, FORMAT_VERSION};

/// Exit status for validation failures (bad input, bad parameters).
pub const EXIT_VALIDATION: i32 = 2;
/// Exit status for capacity and I/O failures.
pub const EXIT_CAPACITY: i32 = 3;
/// Exit status when `--strict` is set and a guarantee check failed.
pub const EXIT_STRICT: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::Capacity { .. }) | CliError::Io(_) => EXIT_CAPACITY,
            CliError::Core(Error::Learner(_)) => 1,
            CliError::Core(_) | CliError::Validation(_) => EXIT_VALIDATION,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                Error::Capacity { .. } => "capacity",
                Error::Argument(_) => "argument",
                Error::Validation(_) => "validation",
                Error::Precondition(_) => "precondition",
                Error::NotPsd(_) => "not_psd",
                Error::Norm(_) => "norm",
                Error::Infeasible { .. } => "infeasible",
                Error::InvalidInversion(_) => "invalid_inversion",
                Error::Learner(_) => "learner",
            },
            CliError::Validation(_) => "validation",
            CliError::Io(_) => "io",
        }
    }

    /// Error object written to stderr.
    pub fn to_json(&self) -> String {
        let mut err = json!({
            "kind": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        if let CliError::Core(Error::Infeasible { required_samples, .. }) = self {
            err["required_samples"] = json!(required_samples.to_string());
        }
        json!({ "error": err }).to_string()
    }
}

/// Runs one configured command. Checks that fail are recorded in the report;
/// whether they turn into a non-zero exit is up to the caller (see
/// [`RunReport::all_checks_passed`]).
pub fn run_config(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    if let Some(limit) = cfg.max_qubits {
        set_max_qubits(limit);
    }
    if !(cfg.kappa > 0.0 && cfg.kappa.is_finite()) {
        return Err(CliError::Validation(format!("kappa must be positive, got {}", cfg.kappa)));
    }
    let start = Instant::now();
    let outcome = match cfg.command {
        Command::Spectrum => commands::spectrum(cfg),
        Command::ApproxCz => commands::approx_cz(cfg),
        Command::ApproxCircuit => commands::approx_circuit_cmd(cfg),
        Command::Choi => commands::choi_cmd(cfg),
        Command::Learn => commands::learn(cfg),
        Command::TolerantTest => commands::tolerant(cfg),
        Command::Reduce => commands::reduce(cfg),
    }?;
    let mut timings = BTreeMap::new();
    timings.insert(cfg.command.name().to_string(), start.elapsed().as_secs_f64() * 1e3);
    Ok(RunReport {
        config_echo: cfg.clone(),
        timings,
        results: outcome.results,
        checks: outcome.checks,
        versions: Versions { format: FORMAT_VERSION, package: env!("CARGO_PKG_VERSION"), kappa: cfg.kappa },
        csv: outcome.csv,
    })
}

/// Runs, emits, and maps the result to an exit status. Errors are written to
/// stderr as a JSON object.
pub fn run_and_emit(cfg: &ExperimentConfig) -> i32 {
    let result = run_config(cfg).and_then(|r| emit_report(&r, cfg.out_path.as_deref()).map(|_| r));
    match result {
        Ok(r) if cfg.strict && !r.all_checks_passed() => {
            let msg = json!({"error": {
                "kind": "guarantee",
                "message": format!("failed checks: {}", r.failed_checks().join(", ")),
                "exit_code": EXIT_STRICT,
            }});
            eprintln!("{msg}");
            EXIT_STRICT
        }
        Ok(_) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
