//! Configured experiments: strict JSON configs, the subcommands that run
//! them and the files they write.

mod config;
mod run;

pub use config::{AnalysisOptions, AttackEntry, ExperimentConfig, GraphSource, NoiseTarget, PartialSource, SweepAxes};
pub use run::{
    train_model, AnalysisKind, Command, Experiment, RunManifest, StageFailure, SweepRow, TrainArgs, OUTPUT_ENV,
};
