//! Experiment orchestration behind the `qdc` CLI.
//!
//! A JSON [`ExperimentConfig`] describes a β × T grid, a Haar ensemble and
//! optional open-system, robust, filter and κ settings. Jobs run on a rayon
//! pool and are collected in grid order, so results do not depend on the
//! thread count. Target `k` is seeded with [`seeds::target_seed`]`(seed, k)`
//! and is shared by every grid cell.

mod config;
mod experiments;
mod kappa;
mod output;
mod qsl;
pub mod seeds;

pub use config::{ExperimentConfig, FilterConfig, KappaConfig, OpenSystemConfig, TaskKind, Units};
pub use experiments::{
    run_filter_eval, run_landscape, run_parallel, run_robust_comparison, CellSummary, FilterRecord,
    RobustRecord, SweepRecord, SweepResult, Variant,
};
pub use kappa::{run_kappa_curve, KappaRecord};
pub use output::{config_hash, write_csv, Manifest};
pub use qsl::{extract_qsl, QslEstimate};
