//! Experiment configuration, execution and CSV output behind the `qnes`
//! command-line tool.
//!
//! An experiment is described by a TOML file:
//!
//! ```toml
//! experiment = "stateprep"   # stateprep, vqe, variance_scan, batch, hybrid, compare_gd
//! optimizer = "snes"         # canonical, snes, xnes, gd, hybrid
//! seeds = [0, 1, 2]
//! max_iterations = 500
//! output = "out/stateprep"   # relative to this file
//!
//! [ansatz]
//! family = "rpqc"
//! qubits = 5
//! layers = 10
//! ```
//!
//! Every key can be replaced from the command line with
//! `--override section.key=value`.

mod config;
mod run;

pub use config::{
    parse_override, BatchSection, ExperimentConfig, ExperimentKind, GdSection, HybridSection, NesSection,
    ObservableKind, OptimizerKind, StrategyKind, VarianceSection, VqeSection,
};
pub use run::{run_experiment, summarize_files, write_variance_csv, RunReport, SNAPSHOT_SCHEMA, VARIANCE_SCHEMA};
