use serde::{Deserialize, Serialize};

use super::params::{default_params, general_convex_params, StepParams};
use super::schedule::PSchedule;
use crate::compressors::{omega_av_on, CompressorSpec};
use crate::error::{Error, Result};

/// Which convergence regime the default stepsizes target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regime {
    StronglyConvex,
    /// Dual stepsizes shrunk by `c ∈ (0, 1)`.
    GeneralConvex {
        c: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    /// Primal stepsize γ.
    pub gamma: f64,
    pub rho: f64,
    pub rho_y: f64,
    pub eta: f64,
    pub eta_y: f64,
    /// Size of the shared coordinate subset, in `[1, d]`.
    pub k: usize,
    pub schedule: PSchedule,
    /// One compressor per client.
    pub uplink: Vec<CompressorSpec>,
    pub downlink: CompressorSpec,
    pub omega_av: f64,
    /// Round float-coded payloads to f32 before use.
    #[serde(default)]
    pub strict_f32: bool,
    /// Verify the dual-sum and replica invariants after every step.
    #[serde(default = "default_true")]
    pub check_invariants: bool,
}

fn default_true() -> bool {
    true
}

impl AlgoConfig {
    /// Builds a configuration with the stepsizes derived from the
    /// compressors' variances. `omega_av_override` replaces the averaged
    /// uplink variance that would otherwise follow from the compressors'
    /// independence class.
    pub fn with_defaults(
        gamma: f64,
        k: usize,
        schedule: PSchedule,
        uplink: Vec<CompressorSpec>,
        downlink: CompressorSpec,
        regime: Regime,
        omega_av_override: Option<f64>,
    ) -> Result<Self> {
        if uplink.is_empty() {
            return Err(Error::Contract("need one uplink compressor per client".into()));
        }
        if k == 0 || k > downlink.dim {
            return Err(Error::Contract(format!("subset size k = {k} outside [1, {}]", downlink.dim)));
        }
        let omega = uplink[0].omega_restricted(k);
        let omega_av = match omega_av_override {
            Some(v) => v,
            None => omega_av_on(&uplink, k)?,
        };
        let omega_s = downlink.omega_restricted(k);
        let StepParams { rho, rho_y, eta, eta_y } = match regime {
            Regime::StronglyConvex => default_params(omega, omega_av, omega_s),
            Regime::GeneralConvex { c } => general_convex_params(omega, omega_av, omega_s, c)?,
        };
        let cfg = Self {
            gamma,
            rho,
            rho_y,
            eta,
            eta_y,
            k,
            schedule,
            uplink,
            downlink,
            omega_av,
            strict_f32: false,
            check_invariants: true,
        };
        cfg.validate(cfg.uplink.len(), cfg.downlink.dim)?;
        Ok(cfg)
    }

    /// Uplink relative variance on the shared subset.
    pub fn omega(&self) -> f64 {
        self.uplink[0].omega_restricted(self.k)
    }

    /// Downlink relative variance on the shared subset.
    pub fn omega_s(&self) -> f64 {
        self.downlink.omega_restricted(self.k)
    }

    pub fn validate(&self, n: usize, d: usize) -> Result<()> {
        let positive = [
            ("gamma", self.gamma),
            ("rho", self.rho),
            ("rho_y", self.rho_y),
            ("eta", self.eta),
            ("eta_y", self.eta_y),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Contract(format!("{name} must be positive, got {v}")));
        }
        if self.uplink.len() != n {
            return Err(Error::Contract(format!("{} uplink compressors for {n} clients", self.uplink.len())));
        }
        if let Some(s) = self.uplink.iter().chain(std::iter::once(&self.downlink)).find(|s| s.dim != d) {
            return Err(Error::DimensionMismatch { expected: d, got: s.dim });
        }
        if self.k == 0 || self.k > d {
            return Err(Error::Contract(format!("subset size k = {} outside [1, {d}]", self.k)));
        }
        self.schedule.validate(self.eta)
    }

    /// Whether γ lies in the range covered by the convergence guarantees:
    /// `γ < 2/L` for constant schedules, `γ ≤ 1/L` for decreasing ones.
    pub fn gamma_within_theory(&self, smoothness: f64) -> bool {
        if self.schedule.is_constant() {
            self.gamma * smoothness < 2.0
        } else {
            self.gamma * smoothness <= 1.0
        }
    }
}
