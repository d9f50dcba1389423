//! Configuration, experiment orchestration and file output.

pub mod cli;
pub mod config;
pub mod run;

pub use config::{load_config, ExperimentConfig, SweepParam, SweepSpec};
pub use run::{
    run_hysteresis, run_replicates, run_single, run_sobol, run_sweep, HysteresisOutput, RunOutput,
    SobolCampaign, SweepResult, METRIC_NAMES,
};
