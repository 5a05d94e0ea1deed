//! Experiment harness: synthetic losses and noise, multi-seed runs, regret
//! traces and their serialization.

pub mod config;
pub mod coverage;
pub mod experiment;
pub mod loss;
pub mod noise;
pub mod rng;
pub mod trace;

pub use config::{Algorithm, ExperimentConfig, LearnerConfig, LossConfig, NoiseConfig, RunConfig};
pub use experiment::{run_experiment, write_outputs, ExperimentOutput, Summary};
pub use trace::{Format, RegretTrace, TraceRow};
