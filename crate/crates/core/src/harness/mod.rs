//! Experiment orchestration: configuration, independent oracles, the
//! convergence study and report emission.

pub mod config;
pub mod oracles;
pub mod report;
pub mod study;

pub use config::{parse_config, ExperimentConfig, Model, Tolerances};
pub use oracles::{
    oracle_classical_sector_sum, oracle_scalar_curie_weiss, oracle_transfer_matrix_1d,
};
pub use report::{emit_report, ReportPaths};
pub use study::{run_convergence_study, ConvergenceReport};
