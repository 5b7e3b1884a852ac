//! Stepsize and communication-parameter selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Consensus stepsizes `ρ, ρ_y` and dual stepsizes `η, η_y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub rho: f64,
    pub rho_y: f64,
    pub eta: f64,
    pub eta_y: f64,
}

/// Largest stepsizes guaranteeing linear convergence for uplink variance
/// `omega`, averaged uplink variance `omega_av`, and downlink variance
/// `omega_s`:
///
/// ```text
/// ρ = ρ_y = 1 / (2 + ω_av + 2ω_s)
/// η = η_y = 1 / ((1 + 2ω + 2ω_s)(2 + ω_av + 2ω_s))
/// ```
pub fn default_params(omega: f64, omega_av: f64, omega_s: f64) -> StepParams {
    let rho_den = 2.0 + omega_av + 2.0 * omega_s;
    let rho = 1.0 / rho_den;
    let eta = 1.0 / ((1.0 + 2.0 * omega + 2.0 * omega_s) * rho_den);
    StepParams { rho, rho_y: rho, eta, eta_y: eta }
}

/// The general convex variant: dual stepsizes shrunk by `c ∈ (0, 1)`.
pub fn general_convex_params(omega: f64, omega_av: f64, omega_s: f64, c: f64) -> Result<StepParams> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Contract(format!("shrink constant must lie in (0, 1), got {c}")));
    }
    let mut p = default_params(omega, omega_av, omega_s);
    p.eta *= c;
    p.eta_y *= c;
    Ok(p)
}

/// How communication is sparsified.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparsifyStrategy {
    /// Full subsets (`k = d`) with independent rand-K compressors.
    RandK,
    /// A shared random `k`-subset per round with dense (quantizing)
    /// compressors.
    SubsetK,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sparsity {
    /// Downlink rand-K level.
    pub k_server: usize,
    /// Uplink rand-K level.
    pub k_client: usize,
    /// Shared subset size.
    pub k: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorollaryParams {
    pub k_server: usize,
    pub k_client: usize,
    pub k: usize,
    pub p: f64,
}

fn ceil_clamped(v: f64, d: usize) -> usize {
    (v.ceil() as usize).clamp(1, d)
}

fn check_inputs(alpha: f64, d: usize, n: usize, kappa: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Contract(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if d == 0 || n == 0 {
        return Err(Error::Contract("d and n must be positive".into()));
    }
    if !(kappa > 1.0) {
        return Err(Error::Contract(format!("kappa must exceed 1, got {kappa}")));
    }
    Ok(())
}

/// Sparsification levels that balance the `√κ` and `d` terms of the total
/// communication cost:
///
/// - rand-K: `K_s = ⌈d/√κ⌉`, `K = ⌈max(α, 1/n) d/√κ⌉`, `k = d`;
/// - subset: `k = ⌈d/√κ⌉`, no rand-K (`K = K_s = d`).
pub fn corollary_sparsity(
    alpha: f64,
    d: usize,
    n: usize,
    kappa: f64,
    strategy: SparsifyStrategy,
) -> Result<Sparsity> {
    check_inputs(alpha, d, n, kappa)?;
    let base = d as f64 / kappa.sqrt();
    Ok(match strategy {
        SparsifyStrategy::RandK => Sparsity {
            k_server: ceil_clamped(base, d),
            k_client: ceil_clamped(alpha.max(1.0 / n as f64) * base, d),
            k: d,
        },
        SparsifyStrategy::SubsetK => Sparsity { k_server: d, k_client: d, k: ceil_clamped(base, d) },
    })
}

/// Communication probability `p = min(d / (k √(ηκ)), 1)`, which is
/// `min(1/√(ηκ), 1)` when `k = d`.
pub fn corollary_probability(d: usize, k: usize, kappa: f64, eta: f64) -> f64 {
    (d as f64 / (k as f64 * (eta * kappa).sqrt())).min(1.0)
}

pub fn corollary_params(
    alpha: f64,
    d: usize,
    n: usize,
    kappa: f64,
    eta: f64,
    strategy: SparsifyStrategy,
) -> Result<CorollaryParams> {
    let s = corollary_sparsity(alpha, d, n, kappa, strategy)?;
    if !(eta > 0.0) {
        return Err(Error::Contract(format!("eta must be positive, got {eta}")));
    }
    Ok(CorollaryParams {
        k_server: s.k_server,
        k_client: s.k_client,
        k: s.k,
        p: corollary_probability(d, s.k, kappa, eta),
    })
}
