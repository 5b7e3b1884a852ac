//! Progress measures for runs: the Lyapunov function of the strongly convex
//! analysis, Bregman sums for the general convex case, consensus gaps, and
//! suboptimality, together with the reference solver that provides `x*`.

mod operators;
mod reference;

pub use operators::{build_operators, ConsensusOperators};
pub use reference::{solve_reference, ReferenceSolution, SolverOptions};

use serde::{Deserialize, Serialize};

use crate::algorithm::AlgoState;
use crate::error::{Error, Result};
use crate::linalg::{dist_sq, dot, sub};
use crate::problems::{Objective, ProblemInstance};

/// Bregman slack tolerated before reporting a convexity violation.
pub const BREGMAN_TOLERANCE: f64 = 1e-10;

/// `Ψ = (1/γ)(Σ‖x_i − x*‖² + 2n‖x_s − x*‖² + n‖y − x*‖²)
///    + (d²γ / (p²k²η))(Σ‖u_i − u_i*‖² + n‖u_y − u_y*‖²)`.
///
/// There is no `u_s` term.
pub fn lyapunov(
    state: &AlgoState,
    reference: &ReferenceSolution,
    gamma: f64,
    p: f64,
    k: usize,
    d: usize,
    eta: f64,
) -> f64 {
    let n = state.n() as f64;
    let xs = &reference.x_star;
    let primal: f64 = state.x_clients.iter().map(|x| dist_sq(x, xs)).sum::<f64>()
        + 2.0 * n * dist_sq(&state.x_server, xs)
        + n * dist_sq(state.y(), xs);
    let dual: f64 =
        state.u_clients.iter().zip(&reference.u_clients).map(|(u, us)| dist_sq(u, us)).sum::<f64>()
            + n * dist_sq(state.u_y(), &reference.u_shared);
    let pk = p * k as f64;
    primal / gamma + (d as f64).powi(2) * gamma / (pk * pk * eta) * dual
}

/// `φ(x) − φ(x_ref) − ⟨∇φ(x_ref), x − x_ref⟩`.
pub fn bregman(phi: &dyn Objective, x: &[f64], x_ref: &[f64]) -> Result<f64> {
    let g = phi.gradient(x_ref);
    let v = phi.value(x) - phi.value(x_ref) - dot(&g, &sub(x, x_ref));
    if v < -BREGMAN_TOLERANCE {
        return Err(Error::Convexity(v));
    }
    Ok(v.max(0.0))
}

/// Progress measures at one iteration. Bit counts are cumulative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub t: u64,
    pub psi: f64,
    /// `F(x̄) − F*`, with `x̄` the average client/server iterate.
    pub subopt: f64,
    /// `Σ D_{f_i}(x_i, x*) + 2n D_{f_s}(x_s, x*) + n D_g(y, x*)`.
    pub bregman_sum: f64,
    /// `(1/γ) Σ ‖x_i − x_s‖²`.
    pub consensus_client: f64,
    /// `(n/γ) ‖x_s − y‖²`.
    pub consensus_y: f64,
    /// `‖x̄ − x*‖²`.
    pub dist_sq: f64,
    pub upcom_bits: u64,
    pub downcom_bits: u64,
    pub totalcom_bits: f64,
}

/// Everything needed to evaluate a [`MetricRecord`] besides the state.
#[derive(Clone, Copy, Debug)]
pub struct MetricInputs<'a> {
    pub reference: &'a ReferenceSolution,
    pub gamma: f64,
    /// Probability used in the Lyapunov weight.
    pub p: f64,
    pub k: usize,
    pub eta: f64,
}

pub fn evaluate(
    state: &AlgoState,
    problem: &ProblemInstance,
    inputs: &MetricInputs<'_>,
    upcom_bits: u64,
    downcom_bits: u64,
    totalcom_bits: f64,
) -> Result<MetricRecord> {
    let n = state.n() as f64;
    let d = state.dim();
    let xs = &inputs.reference.x_star;
    let x_bar = state.average_iterate();
    let mut bregman_sum = 0.0;
    for (f, x) in problem.clients.iter().zip(&state.x_clients) {
        bregman_sum += bregman(f.as_ref(), x, xs)?;
    }
    bregman_sum += 2.0 * n * bregman(problem.server.as_ref(), &state.x_server, xs)?;
    bregman_sum += n * bregman(problem.shared.as_ref(), state.y(), xs)?;
    Ok(MetricRecord {
        t: state.t,
        psi: lyapunov(state, inputs.reference, inputs.gamma, inputs.p, inputs.k, d, inputs.eta),
        subopt: (problem.full_value(&x_bar) - inputs.reference.f_star).max(0.0),
        bregman_sum,
        consensus_client: state.x_clients.iter().map(|x| dist_sq(x, &state.x_server)).sum::<f64>()
            / inputs.gamma,
        consensus_y: n * dist_sq(&state.x_server, state.y()) / inputs.gamma,
        dist_sq: dist_sq(&x_bar, xs),
        upcom_bits,
        downcom_bits,
        totalcom_bits,
    })
}
