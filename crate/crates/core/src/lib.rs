//! Core library for simulating bidirectionally compressed distributed
//! optimization with local training on a star network.
//!
//! The crate is organised as follows:
//!
//! - [`compressors`]: unbiased compression operators, their variance
//!   parameters, bit costs, and a fixed-width wire codec.
//! - [`problems`]: objective instances (logistic regression, quadratics),
//!   the LibSVM loader, and constant estimation.
//! - [`algorithm`]: the primal–dual iteration with shared coin flips and
//!   shared coordinate subsets, parameter selection, and the run loop.
//! - [`metrics`]: Lyapunov and Bregman progress measures, a reference
//!   solver, and the explicit consensus operators used by oracle tests.
//! - [`accounting`]: the α-weighted uplink/downlink bit cost model.

pub mod accounting;
pub mod algorithm;
pub mod compressors;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod problems;
pub mod rng;

pub use error::{Error, Result};
