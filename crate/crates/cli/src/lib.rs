//! File formats, the cross-validated experiment runner and the command-line
//! front end for `adacos-core`.

pub mod experiment;
pub mod instance;
pub mod io;

pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport, ExperimentRun};
pub use io::{load_bundle, load_costs, load_dataset, save_bundle, IoError};
