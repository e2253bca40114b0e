use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gpia::error::Error;
use gpia::experiment::{train_model, AnalysisKind, Command, Experiment, RunManifest, TrainArgs};
use gpia::gnn::Arch;

/// Group property inference attacks and defenses on graph neural networks.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate the configured synthetic graphs.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a GNN on a graph directory.
    Train {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value = "gcn")]
        arch: Arch,
        #[arg(long, default_value_t = 2)]
        layers: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        property_col: usize,
        #[arg(long, default_value_t = 0.7)]
        train_fraction: f64,
    },
    /// Run the configured attacks.
    Attack {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the configured attacks under each configured defense.
    Defend {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one analysis: influence, disparity, correlation, gapbuckets or distribution.
    Analyze {
        kind: AnalysisKind,
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the cross-product of the configured sweep axes.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn run(cli: Cli) -> gpia::error::Result<RunManifest> {
    let (config, cmd) = match cli.cmd {
        Cmd::Train { graph, arch, layers, seed, out, property_col, train_fraction } => {
            return train_model(&TrainArgs { graph, arch, layers, seed, out, property_col, train_fraction });
        }
        Cmd::Synth { config, out } => (config, Command::Synth { out: Some(out) }),
        Cmd::Attack { config } => (config, Command::Attack),
        Cmd::Defend { config } => (config, Command::Defend),
        Cmd::Analyze { kind, config } => (config, Command::Analyze(kind)),
        Cmd::Sweep { config, jobs } => (config, Command::Sweep { jobs }),
    };
    Experiment::load(config)?.run(&cmd)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(m) => {
            for line in &m.summary {
                println!("{line}");
            }
            for f in &m.failures {
                eprintln!("failed at {}: {}", f.stage, f.message);
            }
            if m.succeeded() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => {
            match &e {
                Error::Validation(errs) => {
                    eprintln!("invalid configuration:");
                    for err in errs {
                        eprintln!("  {err}");
                    }
                }
                other => eprintln!("error: {other}"),
            }
            match e.root() {
                Error::Validation(_) | Error::Config(_) | Error::Usage(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
