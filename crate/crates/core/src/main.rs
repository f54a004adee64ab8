use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use allab::cli::{self, CliError};

#[derive(Parser)]
#[command(name = "allab", version, about = "Pool-based active learning experiments")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured strategy for every configured seed.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every strategy × seed combination and write a manifest.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated, e.g. `random,entropy,allsh,allsh-wca:jsd`.
        #[arg(long)]
        strategies: String,
        #[arg(long)]
        seeds: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize result files into mean ± std per strategy and budget.
    Report {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic JSONL dataset.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run { config, out } => {
            for path in cli::cmd_run(&config, out.as_deref())? {
                println!("{}", path.display());
            }
        }
        Command::Sweep { config, strategies, seeds, out } => {
            let strategies: Vec<String> = cli::parse_csv_list("strategies", &strategies)?;
            let seeds: Vec<u64> = cli::parse_csv_list("seeds", &seeds)?;
            let manifest = cli::cmd_sweep(&config, &strategies, &seeds, out.as_deref(), None)?;
            let missing = manifest.missing().count();
            println!("{} cells, {} missing", manifest.cells.len(), missing);
            if missing > 0 {
                return Err(CliError::Data(format!("{missing} sweep cells failed")));
            }
        }
        Command::Report { dir, out } => {
            println!("{}", cli::cmd_report(&dir, out.as_deref())?.display());
        }
        Command::Gen { spec, seed, out } => cli::cmd_gen_synthetic(&spec, seed, &out)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    match dispatch(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
