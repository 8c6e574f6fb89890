//! Experiment configuration, the `N_o × N_s` sweep, and the command
//! implementations behind the `simpinn` binary.

mod commands;
mod config;
mod sweep;

pub use commands::{
    cmd_eval, cmd_gen, cmd_lambda_cv, cmd_render, cmd_sweep, cmd_train, dataset_paths, run_dir,
    DatasetPaths, Paths,
};
pub use config::{ExperimentConfig, Profile, KEYS, OUTPUT_ENV};
pub use sweep::{
    cells, median, method_label, resolve_noise, run_cell, run_sweep, test_pool, CellKey,
    CellMetrics, CellRow, Metric, SweepOutputs, SweepReport, CSV_HEADER,
};
