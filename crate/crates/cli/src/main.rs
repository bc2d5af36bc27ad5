use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mbswap_cli::table::write_output;
use mbswap_cli::{init_workers, run_command, CliError, Command, ExperimentConfig, OutputFormat, Provenance, WORKERS_ENV};

#[derive(Parser)]
#[command(name = "mbswap", version, about = "Many-body entanglement swapping experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults are used for anything missing.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted. CSV output also writes a
    /// `.provenance.json` sidecar next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured shot count.
    #[arg(long, global = true)]
    shots: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: OutputFormat,
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Single run of the configured protocol against its closed forms.
    Swap,
    /// Postselected chains of 1..=nodes intermediate nodes.
    Network,
    /// Two-qubit θ family over a grid of angles.
    ThetaSweep,
    /// Random brickwork states, half-cut analytics per system size.
    RandomCircuits,
    /// GHZ protocol under each noise source.
    NoiseScan,
    /// Postselection-free sharing with per-class statistics.
    FeedforwardDemo,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Swap => Command::Swap,
            Sub::Network => Command::Network,
            Sub::ThetaSweep => Command::ThetaSweep,
            Sub::RandomCircuits => Command::RandomCircuits,
            Sub::NoiseScan => Command::NoiseScan,
            Sub::FeedforwardDemo => Command::FeedforwardDemo,
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let common = cli.common;
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(shots) = common.shots {
        config.shots = shots;
    }
    if common.print_config {
        print!("{}", config.to_toml());
        return Ok(());
    }
    init_workers(common.workers)?;
    let command = Command::from(cli.command);
    let table = run_command(command, &config)?;
    let provenance = Provenance::new(command.name(), &config, table.rows.len());
    write_output(&table, &provenance, common.format, common.out.as_deref())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mbswap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
