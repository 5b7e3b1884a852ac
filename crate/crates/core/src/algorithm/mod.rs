//! The iteration itself, its parameters, and the driver loop.

mod config;
mod params;
mod run;
mod schedule;
mod state;
mod step;

pub use config::{AlgoConfig, Regime};
pub use params::{
    corollary_params, corollary_probability, corollary_sparsity, default_params, general_convex_params,
    CorollaryParams, SparsifyStrategy, Sparsity, StepParams,
};
pub use run::{
    lyapunov_probability, run, run_from, RunOptions, RunStatus, RunTrace, StopMetric, StoppingRule,
};
pub use schedule::PSchedule;
pub use state::{AlgoState, InitMode, DUAL_SUM_TOLERANCE};
pub use step::{step, step_with_coin, RoundOutcome};
