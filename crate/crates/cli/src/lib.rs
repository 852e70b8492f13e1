//! Experiment files, reference experiments, result export and the HTTP
//! serve mode behind the `qsim` binary.

pub mod experiments;
pub mod export;
pub mod graph;
pub mod results;
pub mod serve;

pub use experiments::{run_graph, run_hom_sweep, run_jdr, HomParams, JdrParams, RunError};
pub use export::export_results;
pub use graph::{load_experiment, validate, ExperimentGraph, Issue};
pub use results::{Cell, ResultSet, Table};
