//! Experiment drivers and report formats on top of `boselab-core`.
//!
//! Each driver runs a complete, seeded, reproducible experiment — sampling,
//! statistics, theory reference values — and returns a serializable
//! [`experiment::ExperimentReport`] carrying everything needed to rerun or
//! to judge it against its pass bar.

pub mod experiment;

pub use experiment::{
    run_coloring, run_condensation, run_deviation, run_profile, ExperimentReport, RunOptions,
};
