//! `bitml`: check, compile, simulate and replay contracts.

mod commands;
mod repl;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bitml", version, about = "Contracts with renegotiation: check, compile, simulate, replay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GraphFormat {
    Json,
    Dot,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a program and check that it is well formed.
    Check { file: PathBuf },
    /// Compile the main contract to transactions.
    Compile {
        file: PathBuf,
        /// `name=txid:index` pairs, comma separated, or `mock` to derive
        /// outpoints from the deposit names.
        #[arg(long)]
        deposits: String,
        /// `secret=payload` pairs used to build the commitments.
        #[arg(long, default_value = "")]
        secrets: String,
        #[arg(long, value_enum, default_value = "json")]
        format: GraphFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run strategies against each other and record the run.
    Simulate {
        file: PathBuf,
        /// `participant=strategy`; may be repeated. Unlisted participants
        /// use `always-consent`.
        #[arg(long = "strategy", value_name = "P=NAME")]
        strategies: Vec<String>,
        #[arg(long, value_parser = ["progress", "random", "adversarial"], default_value = "random")]
        scheduler: String,
        #[arg(long, env = "BITML_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        fuel: usize,
        /// Where to write the trace JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Step through the run from standard input.
        #[arg(long)]
        interactive: bool,
        /// Keep the deposit operations (join, divide, donate, destroy) in the menus.
        #[arg(long)]
        deposit_ops: bool,
    },
    /// Replay a trace on the mock chain.
    Replay {
        trace: PathBuf,
        /// Exit with status 1 unless the chain is coherent with the run.
        #[arg(long)]
        check: bool,
        /// Where to write the chain JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write the chain as DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Monte Carlo fairness experiment on the bundled coin flipping game.
    ExperimentCfg {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        runs: u64,
        #[arg(long, env = "BITML_SEED", default_value_t = 0)]
        seed: u64,
        /// Strategy of B; A always plays rationally.
        #[arg(long, default_value = "rational")]
        adversary: String,
        #[arg(long, value_parser = ["progress", "random", "adversarial"])]
        scheduler: Option<String>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { file } => commands::check(&file),
        Command::Compile { file, deposits, secrets, format, out } => {
            commands::compile(&file, &deposits, &secrets, format, out.as_deref())
        }
        Command::Simulate { file, strategies, scheduler, seed, fuel, trace, interactive, deposit_ops } => {
            commands::simulate(commands::SimulateArgs {
                file,
                strategies,
                scheduler: scheduler.parse().expect("checked by clap"),
                seed,
                fuel,
                trace,
                interactive,
                deposit_ops,
            })
        }
        Command::Replay { trace, check, out, dot } => commands::replay(&trace, check, out.as_deref(), dot.as_deref()),
        Command::ExperimentCfg { runs, seed, adversary, scheduler, csv } => {
            commands::experiment_cfg(runs as usize, seed, &adversary, scheduler.map(|s| s.parse().expect("checked by clap")), csv.as_deref())
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
