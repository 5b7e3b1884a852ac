//! Experiment driver: configuration files, problem and compressor setup,
//! stepsize sweeps, multi-seed runs, and CSV/SVG output.

pub mod config;
pub mod emit;
pub mod error;
pub mod experiment;
pub mod sweep;
pub mod trace;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use experiment::{build_experiment, Experiment};
pub use sweep::sweep_gamma;
pub use trace::{SeedTrace, TraceSet};
