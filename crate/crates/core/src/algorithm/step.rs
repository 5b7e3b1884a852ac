//! One round of the iteration.
//!
//! Every machine first takes a local corrected gradient step. Then a shared
//! coin decides whether this round communicates. If it does, a shared subset
//! `Ω` of `k` coordinates is drawn, each client uploads a compressed
//! `x̂_i − ŷ` and the server broadcasts a compressed `x̂_s − ŷ`. Clients update
//! from the broadcast only; the server updates from the uplink average and
//! its own broadcast, which keeps the dual sum at zero.

use rand::Rng;

use super::config::AlgoConfig;
use super::state::AlgoState;
use crate::compressors::{compress_restricted, sample_subset, CompressedMessage};
use crate::error::{Error, Result};
use crate::problems::{Objective, ProblemInstance};
use crate::rng::Streams;

#[derive(Clone, Debug, PartialEq)]
pub struct RoundOutcome {
    /// The shared coin θ.
    pub communicated: bool,
    pub omega_set: Option<Vec<usize>>,
    pub uplink_bits: u64,
    pub downlink_bits: u64,
    /// Uplink bits of each client, in client order.
    pub client_bits: Vec<u64>,
    /// Number of coordinates carried by each uplink message.
    pub client_support: Vec<usize>,
    pub downlink_support: usize,
}

impl RoundOutcome {
    fn silent(n: usize) -> Self {
        Self {
            communicated: false,
            omega_set: None,
            uplink_bits: 0,
            downlink_bits: 0,
            client_bits: vec![0; n],
            client_support: vec![0; n],
            downlink_support: 0,
        }
    }
}

/// `x − γ∇f(x) + γu`
fn local_step(f: &dyn Objective, x: &[f64], u: &[f64], gamma: f64, grad: &mut [f64]) -> Vec<f64> {
    f.gradient_into(x, grad);
    x.iter().zip(grad.iter()).zip(u).map(|((xi, gi), ui)| xi - gamma * gi + gamma * ui).collect()
}

fn check_shapes(state: &AlgoState, problem: &ProblemInstance, config: &AlgoConfig) -> Result<()> {
    let n = problem.n();
    let d = problem.dim();
    if state.n() != n || state.y_copies.len() != n + 1 || state.u_y_copies.len() != n + 1 {
        return Err(Error::Contract(format!("state holds {} clients, problem has {n}", state.n())));
    }
    if state.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: state.dim() });
    }
    config.validate(n, d)
}

/// Advances `state` by one iteration, drawing the coin and subset from the
/// shared stream.
pub fn step(
    state: &mut AlgoState,
    problem: &ProblemInstance,
    config: &AlgoConfig,
    streams: &mut Streams,
) -> Result<RoundOutcome> {
    let p = config.schedule.prob(state.t + 1);
    let theta = streams.shared.random::<f64>() < p;
    step_with_coin(state, problem, config, streams, theta)
}

/// [`step`] with the coin θ fixed by the caller. The dual updates still use
/// the scheduled `p_{t+1}`.
pub fn step_with_coin(
    state: &mut AlgoState,
    problem: &ProblemInstance,
    config: &AlgoConfig,
    streams: &mut Streams,
    theta: bool,
) -> Result<RoundOutcome> {
    check_shapes(state, problem, config)?;
    let n = problem.n();
    let d = problem.dim();
    let gamma = config.gamma;
    let mut grad = vec![0.0; d];

    // Local phase: every machine, including its own replica of y.
    let x_hat: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            local_step(
                problem.clients[i].as_ref(),
                &state.x_clients[i],
                &state.u_clients[i],
                gamma,
                &mut grad,
            )
        })
        .collect();
    let x_hat_server =
        local_step(problem.server.as_ref(), &state.x_server, &state.u_server, gamma, &mut grad);
    let y_hat: Vec<Vec<f64>> = (0..=n)
        .map(|m| {
            local_step(problem.shared.as_ref(), &state.y_copies[m], &state.u_y_copies[m], gamma, &mut grad)
        })
        .collect();

    let p = config.schedule.prob(state.t + 1);
    state.t += 1;

    if !theta {
        state.x_clients = x_hat;
        state.x_server = x_hat_server;
        state.y_copies = y_hat;
        if config.check_invariants {
            state.check_invariants()?;
        }
        return Ok(RoundOutcome::silent(n));
    }

    // Exchange phase.
    let omega_set: Vec<usize> = if config.k == d {
        (0..d).collect()
    } else {
        let mut s = sample_subset(d, config.k, &mut streams.shared);
        s.sort_unstable();
        s
    };

    let mut uplink: Vec<CompressedMessage> = Vec::with_capacity(n);
    for i in 0..n {
        let diff = crate::linalg::sub(&x_hat[i], &y_hat[i]);
        let mut c = compress_restricted(&config.uplink[i], &diff, &omega_set, &mut streams.clients[i])?;
        if config.strict_f32 {
            c.quantize_to_f32();
        }
        uplink.push(c);
    }
    let server_diff = crate::linalg::sub(&x_hat_server, &y_hat[n]);
    let mut c_s = compress_restricted(&config.downlink, &server_diff, &omega_set, &mut streams.server)?;
    if config.strict_f32 {
        c_s.quantize_to_f32();
    }
    let c_s_dense = c_s.to_dense();

    let (rho, rho_y) = (config.rho, config.rho_y);
    let scale = p * config.k as f64 / (d as f64 * gamma);
    let dual_step = scale * config.eta;
    let dual_step_y = scale * config.eta_y;

    // Clients: primal on Ω, replicas of y and u_y, own dual.
    for i in 0..n {
        let mut x_new = x_hat[i].clone();
        for &j in &omega_set {
            x_new[j] = (1.0 - rho) * x_hat[i][j] + rho * (c_s_dense[j] + y_hat[i][j]);
        }
        state.x_clients[i] = x_new;
        uplink[i].add_to(-dual_step, &mut state.u_clients[i]);
        c_s.add_to(dual_step, &mut state.u_clients[i]);
    }

    // Server.
    let mut c_bar = vec![0.0; d];
    for c in &uplink {
        c.add_to(1.0 / n as f64, &mut c_bar);
    }
    let mut x_s = x_hat_server.clone();
    let mix = 0.5 * (rho + rho_y);
    for &j in &omega_set {
        x_s[j] = (1.0 - mix) * x_hat_server[j] + mix * y_hat[n][j] + 0.5 * rho * c_bar[j];
    }
    state.x_server = x_s;
    crate::linalg::axpy(0.5 * dual_step, &c_bar, &mut state.u_server);
    c_s.add_to(-0.5 * scale * (config.eta_y + config.eta), &mut state.u_server);

    // Shared variables, updated identically on every machine.
    for (m, y) in y_hat.into_iter().enumerate() {
        let mut y = y;
        c_s.add_to(rho_y, &mut y);
        state.y_copies[m] = y;
        c_s.add_to(dual_step_y, &mut state.u_y_copies[m]);
    }

    if config.check_invariants {
        state.check_invariants()?;
    }

    let client_bits: Vec<u64> = uplink.iter().map(|c| c.bit_length).collect();
    Ok(RoundOutcome {
        communicated: true,
        omega_set: Some(omega_set),
        uplink_bits: client_bits.iter().sum(),
        downlink_bits: c_s.bit_length,
        client_bits,
        client_support: uplink.iter().map(|c| c.support().len()).collect(),
        downlink_support: c_s.support().len(),
    })
}
