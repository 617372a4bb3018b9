use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod artifacts;
mod commands;
mod config;
mod manifest;
mod train;

/// Quantum GAN for 8-pixel calorimeter shower images.
#[derive(Debug, Parser)]
#[command(name = "qgan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic shower dataset as CSV.
    GenData(commands::GenDataArgs),
    /// Train one or more trials of the full or hybrid model.
    Train(train::TrainArgs),
    /// Generate images from a trained parameter file.
    Infer(commands::InferArgs),
    /// Compare generated images against a reference set.
    Eval(commands::EvalArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (stage, result) = match &cli.command {
        Command::GenData(a) => ("gen-data", commands::gen_data(a)),
        Command::Train(a) => (
            "train",
            train::run(a).map(|_| println!("{}", a.out.join(manifest::MANIFEST_FILE).display())),
        ),
        Command::Infer(a) => ("infer", commands::infer(a)),
        Command::Eval(a) => (
            "eval",
            commands::eval(a).map(|r| println!("mse {:e} std {:e}", r.mse.mse, r.mse.std)),
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qgan {stage}: {e:#}");
            ExitCode::FAILURE
        }
    }
}
