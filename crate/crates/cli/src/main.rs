use std::path::PathBuf;

use clap::{Parser, Subcommand};
use qlc0_cli::config::*;
use qlc0_cli::{run_and_emit, CliError};

#[derive(Parser)]
#[command(name = "qlc0", version, about = "Analysis, approximation and learning of shallow quantum circuits")]
struct Cli {
    /// Circuit JSON file.
    #[arg(long, global = true)]
    circuit: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON report path; tabular results go next to it as `.csv`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Exit with status 4 when a guarantee check fails.
    #[arg(long, global = true)]
    strict: bool,
    /// Capacity limit on dense operators (qubits).
    #[arg(long, global = true)]
    max_qubits: Option<usize>,
    /// Constant in the learning-degree schedule.
    #[arg(long, global = true)]
    kappa: Option<f64>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Pauli spectrum of the circuit unitary or Choi representation.
    Spectrum(SpectrumParams),
    /// Low-degree approximation of a k-qubit CZ gate.
    ApproxCz(ApproxCzParams),
    /// Layer-by-layer low-degree approximation of a conjugated observable.
    ApproxCircuit(ApproxCircuitParams),
    /// Choi representation, optionally with recorded shadows.
    Choi(ChoiParams),
    /// Learn the low-degree part of the Choi representation.
    Learn(LearnParams),
    /// Tolerant test for closeness to low-degree operators.
    TolerantTest(TolerantParams),
    /// Local-inversion sewing reduction.
    Reduce(ReduceParams),
    /// Run a stored configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn build(cli: Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.command {
        Cmd::Spectrum(p) => ExperimentConfig::new(Command::Spectrum).with_params(p),
        Cmd::ApproxCz(p) => ExperimentConfig::new(Command::ApproxCz).with_params(p),
        Cmd::ApproxCircuit(p) => ExperimentConfig::new(Command::ApproxCircuit).with_params(p),
        Cmd::Choi(p) => ExperimentConfig::new(Command::Choi).with_params(p),
        Cmd::Learn(p) => ExperimentConfig::new(Command::Learn).with_params(p),
        Cmd::TolerantTest(p) => ExperimentConfig::new(Command::TolerantTest).with_params(p),
        Cmd::Reduce(p) => ExperimentConfig::new(Command::Reduce).with_params(p),
        Cmd::Run { config } => ExperimentConfig::from_file(config)?,
    };
    // Flags override the stored configuration.
    if cli.circuit.is_some() {
        cfg.circuit_path = cli.circuit;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.out.is_some() {
        cfg.out_path = cli.out;
    }
    cfg.strict |= cli.strict;
    if cli.max_qubits.is_some() {
        cfg.max_qubits = cli.max_qubits;
    }
    if let Some(k) = cli.kappa {
        cfg.kappa = k;
    }
    Ok(cfg)
}

fn main() {
    let code = match build(Cli::parse()) {
        Ok(cfg) => run_and_emit(&cfg),
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    };
    std::process::exit(code);
}
