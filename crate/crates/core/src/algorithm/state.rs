use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{axpy, max_abs};
use crate::problems::ProblemInstance;

/// Full iterate set of the simulated network.
///
/// `y` and `u_y` are replicated: entry `i < n` is client `i`'s copy and
/// entry `n` is the server's copy.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgoState {
    pub x_clients: Vec<Vec<f64>>,
    pub x_server: Vec<f64>,
    pub y_copies: Vec<Vec<f64>>,
    pub u_clients: Vec<Vec<f64>>,
    pub u_server: Vec<f64>,
    pub u_y_copies: Vec<Vec<f64>>,
    pub t: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    #[default]
    Zeros,
    /// All primal iterates at `x0`, duals at the gradients there.
    Warm(Vec<f64>),
}

/// Largest absolute slack allowed in the dual-sum constraint, relative to
/// `1 + max‖u‖_∞`.
pub const DUAL_SUM_TOLERANCE: f64 = 1e-9;

impl AlgoState {
    pub fn init(problem: &ProblemInstance, mode: &InitMode) -> Result<Self> {
        let n = problem.n();
        let d = problem.dim();
        match mode {
            InitMode::Zeros => Ok(Self {
                x_clients: vec![vec![0.0; d]; n],
                x_server: vec![0.0; d],
                y_copies: vec![vec![0.0; d]; n + 1],
                u_clients: vec![vec![0.0; d]; n],
                u_server: vec![0.0; d],
                u_y_copies: vec![vec![0.0; d]; n + 1],
                t: 0,
            }),
            InitMode::Warm(x0) => {
                check_dim(d, x0.len())?;
                let u_clients: Vec<Vec<f64>> = problem.clients.iter().map(|f| f.gradient(x0)).collect();
                let u_y = problem.shared.gradient(x0);
                // u_s = −(1/(2n)) Σ u_i − u_y/2
                let mut u_server = vec![0.0; d];
                for u in &u_clients {
                    axpy(-0.5 / n as f64, u, &mut u_server);
                }
                axpy(-0.5, &u_y, &mut u_server);
                Ok(Self {
                    x_clients: vec![x0.clone(); n],
                    x_server: x0.clone(),
                    y_copies: vec![x0.clone(); n + 1],
                    u_clients,
                    u_server,
                    u_y_copies: vec![u_y; n + 1],
                    t: 0,
                })
            }
        }
    }

    pub fn n(&self) -> usize {
        self.x_clients.len()
    }

    pub fn dim(&self) -> usize {
        self.x_server.len()
    }

    /// The server's copy of `y`.
    pub fn y(&self) -> &[f64] {
        &self.y_copies[self.n()]
    }

    /// The server's copy of `u_y`.
    pub fn u_y(&self) -> &[f64] {
        &self.u_y_copies[self.n()]
    }

    /// `(1/n) Σ u_i + 2u_s + u_y`, using the server's `u_y` copy.
    pub fn dual_sum(&self) -> Vec<f64> {
        let n = self.n();
        let mut r = vec![0.0; self.dim()];
        for u in &self.u_clients {
            axpy(1.0 / n as f64, u, &mut r);
        }
        axpy(2.0, &self.u_server, &mut r);
        axpy(1.0, self.u_y(), &mut r);
        r
    }

    /// `‖(1/n) Σ u_i + 2u_s + u_y‖_∞`.
    pub fn dual_residual(&self) -> f64 {
        max_abs(&self.dual_sum())
    }

    pub fn max_dual_magnitude(&self) -> f64 {
        self.u_clients
            .iter()
            .chain(std::iter::once(&self.u_server))
            .chain(self.u_y_copies.iter())
            .map(|u| max_abs(u))
            .fold(0.0, f64::max)
    }

    /// Dual residual divided by `1 + max‖u‖_∞`.
    pub fn relative_dual_residual(&self) -> f64 {
        self.dual_residual() / (1.0 + self.max_dual_magnitude())
    }

    pub fn replicas_agree(&self) -> bool {
        let y = self.y();
        let uy = self.u_y();
        self.y_copies.iter().all(|c| c == y) && self.u_y_copies.iter().all(|c| c == uy)
    }

    /// Average of all client and server primal iterates.
    pub fn average_iterate(&self) -> Vec<f64> {
        crate::linalg::mean(self.x_clients.iter().chain(std::iter::once(&self.x_server)), self.dim())
    }

    pub fn check_invariants(&self) -> Result<()> {
        if !self.replicas_agree() {
            let y = self.y();
            let worst = self
                .y_copies
                .iter()
                .chain(self.u_y_copies.iter())
                .map(|c| max_abs(&crate::linalg::sub(c, y)))
                .fold(0.0, f64::max);
            return Err(Error::Invariant { quantity: "replica disagreement", value: worst, tolerance: 0.0 });
        }
        let rel = self.relative_dual_residual();
        if !(rel <= DUAL_SUM_TOLERANCE) {
            return Err(Error::Invariant {
                quantity: "dual-sum residual",
                value: rel,
                tolerance: DUAL_SUM_TOLERANCE,
            });
        }
        Ok(())
    }
}
