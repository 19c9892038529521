//! Pipeline driver. Subcommands cover the full loop: render a synthetic
//! world, synthesize the shifted labeled dataset, train the regression
//! model, evaluate controllers closed-loop, plus PLY export and artifact
//! verification. Exit codes: 0 ok, 1 usage, 2 bad input data, 3 internal.

mod commands;
mod config;
mod error;
mod manifest;

use clap::Parser;
use error::CliError;
use std::path::PathBuf;

#[derive(clap::Args, Debug)]
pub struct CommonArgs {
    /// Experiment config file (INI); unset keys fall back to defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed override for this command.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for data-parallel stages (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Parser, Debug)]
#[command(name = "cloudshift", version, about = "Self-supervised lateral control pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand, Debug)]
enum Command {
    /// Render a synthetic sequence (depth, intensity, poses) from a track spec.
    GenWorld(commands::gen_world::GenWorldArgs),
    /// Build the augmented, labeled point-cloud dataset from a sequence.
    GenDataset(commands::gen_dataset::GenDatasetArgs),
    /// Train the regression model on a dataset.
    Train(commands::train::TrainArgs),
    /// Run closed-loop episodes and write report CSVs and BEV SVGs.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Convert a depth map to a PLY point cloud.
    ExportPly(commands::export_ply::ExportPlyArgs),
    /// Check artifact digests against a directory's manifest.
    Verify(commands::verify::VerifyArgs),
}

fn jobs_of(command: &Command) -> Option<usize> {
    match command {
        Command::GenWorld(a) => a.common.jobs,
        Command::GenDataset(a) => a.common.jobs,
        Command::Train(a) => a.common.jobs,
        Command::Evaluate(a) => a.common.jobs,
        Command::ExportPly(a) => a.common.jobs,
        Command::Verify(_) => None,
    }
}

#[cfg(feature = "parallel")]
fn init_pool(jobs: Option<usize>) -> Result<(), CliError> {
    if let Some(jobs) = jobs {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::internal(format!("thread pool: {e}")))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn init_pool(_jobs: Option<usize>) -> Result<(), CliError> {
    Ok(())
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::GenWorld(args) => commands::gen_world::run(args),
        Command::GenDataset(args) => commands::gen_dataset::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::ExportPly(args) => commands::export_ply::run(args),
        Command::Verify(args) => commands::verify::run(args),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version land here too; they are not usage errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = init_pool(jobs_of(&cli.command)).and_then(|()| dispatch(&cli.command));
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
