//! Objective instances of the form `(1/n) Σ f_i + 2 f_s + g`.
//!
//! Client `i` owns `f_i`, the server owns `f_s`, and `g` is known to every
//! machine. All components are convex and `L`-smooth; in the strongly
//! convex case they are also `μ`-strongly convex.

mod libsvm;
mod logistic;
mod quadratic;

use std::fmt;

pub use libsvm::{parse_libsvm, partition, partition_with_remainder, Partition, SparseDataset, SparseRow};
pub use logistic::{estimate_l, logistic_value_grad, scale_mu_for_kappa, LogisticLoss};
pub use quadratic::{quadratic_reg, Quadratic, ScaledSquaredNorm, SyntheticQuadratic};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::axpy;

/// A differentiable convex function on R^d with known constants.
pub trait Objective: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes `∇f(x)` into `out`.
    fn gradient_into(&self, x: &[f64], out: &mut [f64]);

    /// Lipschitz constant of the gradient.
    fn smoothness(&self) -> f64;

    /// Strong convexity modulus (0 for merely convex functions).
    fn strong_convexity(&self) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.gradient_into(x, &mut g);
        g
    }

    fn value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.value(x), self.gradient(x))
    }
}

/// Where the `μ/2 ‖x‖²` regularization of a logistic instance lives.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizationLayout {
    /// `μ` in every `f_i`, and `f_s = g = (μ/2)‖x‖²`.
    #[default]
    Template,
    /// `4μ` in every `f_i`, and `f_s = g = 0`. Same overall objective, for
    /// solvers that only see the client functions.
    FoldedIntoClients,
}

pub struct ProblemInstance {
    pub clients: Vec<Box<dyn Objective>>,
    pub server: Box<dyn Objective>,
    pub shared: Box<dyn Objective>,
    /// Largest smoothness constant over all components.
    pub smoothness: f64,
    /// Smallest strong convexity modulus over all components.
    pub strong_convexity: f64,
}

impl fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("n", &self.n())
            .field("d", &self.dim())
            .field("L", &self.smoothness)
            .field("mu", &self.strong_convexity)
            .finish()
    }
}

impl ProblemInstance {
    pub fn new(
        clients: Vec<Box<dyn Objective>>,
        server: Box<dyn Objective>,
        shared: Box<dyn Objective>,
    ) -> Result<Self> {
        if clients.is_empty() {
            return Err(Error::Contract("a problem needs at least one client".into()));
        }
        let d = server.dim();
        if let Some(bad) =
            clients.iter().map(|c| c.dim()).chain(std::iter::once(shared.dim())).find(|&cd| cd != d)
        {
            return Err(Error::DimensionMismatch { expected: d, got: bad });
        }
        let all = || clients.iter().map(|c| c.as_ref()).chain([server.as_ref(), shared.as_ref()]);
        let smoothness = all().map(|c| c.smoothness()).fold(0.0, f64::max);
        let strong_convexity = all().map(|c| c.strong_convexity()).fold(f64::INFINITY, f64::min);
        Ok(Self { clients, server, shared, smoothness, strong_convexity })
    }

    /// Regularized logistic regression over client shards with
    /// `f_s = g = (μ/2)‖x‖²` (or the folded equivalent).
    pub fn logistic(shards: Vec<SparseDataset>, mu: f64, layout: RegularizationLayout) -> Result<Self> {
        let d = shards.first().map(|s| s.dim).ok_or_else(|| Error::Contract("no client shards".into()))?;
        let (client_mu, outer_mu) = match layout {
            RegularizationLayout::Template => (mu, mu),
            RegularizationLayout::FoldedIntoClients => (4.0 * mu, 0.0),
        };
        let clients = shards
            .into_iter()
            .map(|s| LogisticLoss::new(s, client_mu).map(|l| Box::new(l) as Box<dyn Objective>))
            .collect::<Result<Vec<_>>>()?;
        let mut p =
            Self::new(clients, Box::new(quadratic_reg(d, outer_mu)), Box::new(quadratic_reg(d, outer_mu)))?;
        // the constants are those of the template layout either way
        p.strong_convexity = mu;
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.clients.len()
    }

    pub fn dim(&self) -> usize {
        self.server.dim()
    }

    pub fn kappa(&self) -> Option<f64> {
        (self.strong_convexity > 0.0).then(|| self.smoothness / self.strong_convexity)
    }

    /// `F(x) = (1/n) Σ f_i(x) + 2 f_s(x) + g(x)`.
    pub fn full_value(&self, x: &[f64]) -> f64 {
        let n = self.n() as f64;
        self.clients.iter().map(|c| c.value(x)).sum::<f64>() / n
            + 2.0 * self.server.value(x)
            + self.shared.value(x)
    }

    pub fn full_gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let inv_n = 1.0 / self.n() as f64;
        let mut out = vec![0.0; d];
        let mut buf = vec![0.0; d];
        for c in &self.clients {
            c.gradient_into(x, &mut buf);
            axpy(inv_n, &buf, &mut out);
        }
        self.server.gradient_into(x, &mut buf);
        axpy(2.0, &buf, &mut out);
        self.shared.gradient_into(x, &mut buf);
        axpy(1.0, &buf, &mut out);
        out
    }

    /// Smoothness constant of `F`.
    pub fn full_smoothness(&self) -> f64 {
        let n = self.n() as f64;
        self.clients.iter().map(|c| c.smoothness()).sum::<f64>() / n
            + 2.0 * self.server.smoothness()
            + self.shared.smoothness()
    }

    pub fn full_strong_convexity(&self) -> f64 {
        let n = self.n() as f64;
        self.clients.iter().map(|c| c.strong_convexity()).sum::<f64>() / n
            + 2.0 * self.server.strong_convexity()
            + self.shared.strong_convexity()
    }
}
