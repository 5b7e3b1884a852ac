use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Communication probabilities `(p_t)_{t ≥ 1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PSchedule {
    Constant {
        p: f64,
    },
    /// `p_t = √(b / (a + t))`.
    Decreasing {
        a: f64,
        b: f64,
    },
}

impl PSchedule {
    /// `p_t` for `t ≥ 1`.
    pub fn prob(&self, t: u64) -> f64 {
        match *self {
            PSchedule::Constant { p } => p,
            PSchedule::Decreasing { a, b } => (b / (a + t as f64)).sqrt(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, PSchedule::Constant { .. })
    }

    /// The decreasing schedule with `b = ⌈1/η⌉` and `a = b − 1`, so that
    /// `p_1 = 1`.
    pub fn decreasing_for_eta(eta: f64) -> Self {
        let b = (1.0 / eta).ceil();
        PSchedule::Decreasing { a: b - 1.0, b }
    }

    /// Checks `p ∈ (0, 1]`, or `b ≥ 1/η` and `a ≥ b − 1` for the decreasing
    /// schedule.
    pub fn validate(&self, eta: f64) -> Result<()> {
        match *self {
            PSchedule::Constant { p } if !(p > 0.0 && p <= 1.0) => {
                Err(Error::Contract(format!("constant probability must lie in (0, 1], got {p}")))
            }
            PSchedule::Decreasing { a, b } if !(b > 0.0 && b * eta >= 1.0 - 1e-12 && a >= b - 1.0) => {
                Err(Error::Contract(format!(
                    "decreasing schedule needs b >= 1/eta = {} and a >= b - 1, got a = {a}, b = {b}",
                    1.0 / eta
                )))
            }
            _ => Ok(()),
        }
    }

    /// Expected number of communication rounds in the first `iterations`
    /// iterations, `Σ_{t=1}^{T} p_t`.
    pub fn expected_rounds(&self, iterations: u64) -> f64 {
        match *self {
            PSchedule::Constant { p } => p * iterations as f64,
            PSchedule::Decreasing { .. } => (1..=iterations).map(|t| self.prob(t)).sum(),
        }
    }

    /// Constant schedule with the same expected number of rounds over
    /// `iterations` iterations.
    pub fn matched_constant(&self, iterations: u64) -> Self {
        PSchedule::Constant { p: self.expected_rounds(iterations) / iterations.max(1) as f64 }
    }
}
