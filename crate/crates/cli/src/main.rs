mod compare;
mod eval;
mod files;
mod gen;
mod graph;
#[macro_use]
mod options;
mod train;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tgraph::{Error, Execution};

/// Synthetic sparse-view pose regression with translation-graph supervision.
#[derive(Parser)]
#[command(name = "tgraph", version)]
struct Cli {
    /// Worker threads for scene-level parallelism [default: all cores]
    #[arg(long, global = true, env = "TGRAPH_THREADS")]
    threads: Option<usize>,

    /// Run every stage on the calling thread
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic scenes as JSON files
    Gen(options::GenOptions),
    /// Export normalized ground-truth translation graphs beside each scene
    GtGraph(options::GraphOptions),
    /// Train the pose regressor, optionally with a translation-graph branch
    Train(options::TrainOptions),
    /// Evaluate a checkpoint for each number of views
    Eval(options::EvalOptions),
    /// Tabulate several evaluation runs side by side
    Compare(options::CompareOptions),
}

/// Exit status for partially completed batch work.
const EXIT_PARTIAL: u8 = 3;
const EXIT_DIVERGED: u8 = 4;

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Some(threads) = cli.threads {
        tgraph::exec::configure_threads(threads)?;
    }
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match cli.command {
        Command::Gen(o) => gen::run(o.resolve()?, exec)?,
        Command::GtGraph(o) => {
            let skipped = graph::run(o.resolve()?, exec)?;
            if skipped > 0 {
                eprintln!("{skipped} scene(s) skipped");
                return Ok(ExitCode::from(EXIT_PARTIAL));
            }
        }
        Command::Train(o) => train::run(o.resolve()?, exec)?,
        Command::Eval(o) => eval::run(o.resolve()?, exec)?,
        Command::Compare(o) => compare::run(o.resolve()?)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if matches!(e.downcast_ref::<Error>(), Some(Error::Diverged { .. })) {
                ExitCode::from(EXIT_DIVERGED)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
