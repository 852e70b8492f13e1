use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use qsim_cli::experiments::{
    cutoff_from_env, parse_delays, parse_message, DEFAULT_CUTOFF, HOM_CUTOFF, JDR_CUTOFF,
};
use qsim_cli::export::write_table_csv;
use qsim_cli::graph::validate_text;
use qsim_cli::serve::{serve, ServeConfig};
use qsim_cli::{export_results, load_experiment, run_graph, run_hom_sweep, run_jdr, HomParams, JdrParams, ResultSet};
use qsim_core::devices::GuessOrder;

/// Discrete-event simulator for photonic quantum experiments.
///
/// QSIM_CUTOFF overrides the default Fock cutoff of every command.
#[derive(Parser)]
#[command(name = "qsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    #[value(name = "from_000")]
    From000,
    #[value(name = "from_001")]
    From001,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment file.
    Run {
        file: PathBuf,
        /// Write CSV/JSON results here instead of printing tables.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hong-Ou-Mandel coincidence versus delay.
    HomSweep {
        /// Delays in seconds as start:stop:count.
        #[arg(long, allow_hyphen_values = true)]
        delays: String,
        #[arg(long, default_value_t = HomParams::default().sigma)]
        sigma: f64,
        #[arg(long, default_value_t = HomParams::default().omega)]
        omega: f64,
        #[arg(long)]
        cutoff: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sequential joint-detection decoding of a BPSK codeword.
    Jdr {
        /// Decimal, or binary with a 0b prefix.
        #[arg(long)]
        message: String,
        #[arg(long, default_value_t = 0.4)]
        alpha: f64,
        #[arg(long, default_value_t = 3)]
        pulses: usize,
        /// Sample Y/N outcomes with this seed instead of listing p(Y).
        #[arg(long)]
        sample: Option<u64>,
        #[arg(long, value_enum, default_value = "from_000")]
        order: Order,
        /// Skip the Wigner snapshots.
        #[arg(long)]
        no_snapshots: bool,
        #[arg(long)]
        cutoff: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an experiment file; exits non-zero if it has errors.
    Validate { file: PathBuf },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Simulations allowed to run at once.
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn emit(rs: &ResultSet, out: Option<PathBuf>) -> Result<()> {
    match out {
        Some(dir) => {
            for path in export_results(rs, &dir)? {
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            for (name, table) in &rs.tables {
                writeln!(stdout, "# {name}")?;
                write_table_csv(table, &mut stdout)?;
            }
        }
    }
    for w in &rs.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    let cutoff = |explicit: Option<usize>, fallback| match explicit {
        Some(c) => Ok(c),
        None => cutoff_from_env(fallback).map_err(|e| anyhow!(e)),
    };
    match cli.command {
        Command::Run { file, out } => {
            let graph = load_experiment(&file)?;
            let rs = run_graph(&graph, cutoff(None, DEFAULT_CUTOFF)?)?;
            emit(&rs, out)?;
        }
        Command::HomSweep { delays, sigma, omega, cutoff: c, out } => {
            let delays = parse_delays(&delays).map_err(|e| anyhow!(e))?;
            let rs = run_hom_sweep(&delays, &HomParams { sigma, omega }, cutoff(c, HOM_CUTOFF)?)?;
            emit(&rs, out)?;
        }
        Command::Jdr { message, alpha, pulses, sample, order, no_snapshots, cutoff: c, out } => {
            let order = match order {
                Order::From000 => GuessOrder::From000,
                Order::From001 => GuessOrder::From001,
            };
            let params = JdrParams {
                message: parse_message(&message).map_err(|e| anyhow!(e))?,
                pulses,
                alpha,
                order,
                sample_seed: sample,
                snapshots: !no_snapshots,
            };
            let rs = run_jdr(&params, cutoff(c, JDR_CUTOFF)?)?;
            emit(&rs, out)?;
        }
        Command::Validate { file } => {
            let text = std::fs::read_to_string(&file).with_context(|| file.display().to_string())?;
            let errors = validate_text(&text);
            let report = serde_json::json!({ "valid": errors.is_empty(), "errors": errors });
            println!("{}", serde_json::to_string_pretty(&report)?);
            if !errors.is_empty() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Serve { bind, workers } => {
            let workers = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(2, |n| n.get()));
            let config = ServeConfig { default_cutoff: cutoff(None, DEFAULT_CUTOFF)?, workers };
            tokio::runtime::Runtime::new()?.block_on(serve(bind, config))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
