use std::path::PathBuf;
use std::process::ExitCode;

use bfae::config::resolve;
use bfae::experiment;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bfae", version, about = "Bi-functional autoencoder experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write simulated (or synthetic real-data) datasets
    Simulate(Common),
    /// Train one BFAE and write the model and its loss history
    Train(Common),
    /// Reconstruction benchmark over simulation cells and replications
    Benchmark(Common),
    /// Reconstruction and downstream evaluation on real data
    Realdata(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration file; unset keys take the preset of its `kind`
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads
    #[arg(long, default_value_t = default_jobs())]
    jobs: usize,
    /// Override a key, e.g. `--set bfae.epochs=500` or `--set kind=phoneme`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Use the full replication counts and simulation grid
    #[arg(long)]
    paper_scale: bool,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn run(cli: Cli) -> bfae::Result<Vec<PathBuf>> {
    let (Command::Simulate(c) | Command::Train(c) | Command::Benchmark(c) | Command::Realdata(c)) = &cli.command;
    let config = resolve(c.config.as_deref(), &c.overrides, c.seed, c.paper_scale)?;
    match cli.command {
        Command::Simulate(_) => experiment::simulate(&config, &c.out),
        Command::Train(_) => Ok(experiment::train(&config, &c.out)?.files),
        Command::Benchmark(_) => Ok(experiment::benchmark(&config, &c.out, c.jobs)?.files),
        Command::Realdata(_) => Ok(experiment::realdata(&config, &c.out, c.jobs)?.files),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
