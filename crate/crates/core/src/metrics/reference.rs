use crate::error::{check_dim, Error, Result};
use crate::linalg::{axpy, dot, norm_sq};
use crate::problems::ProblemInstance;

/// Minimizer of the full objective and the optimal duals it induces.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSolution {
    pub x_star: Vec<f64>,
    pub f_star: f64,
    /// `‖∇F(x*)‖`.
    pub grad_norm: f64,
    /// `‖∇f_i(x*)‖` for each client, then `‖∇f_s(x*)‖`, then `‖∇g(x*)‖`.
    pub component_grad_norms: Vec<f64>,
    /// `u_i* = ∇f_i(x*)`.
    pub u_clients: Vec<Vec<f64>>,
    /// `u_s* = −(1/(2n)) Σ u_i* − u_y*/2`.
    pub u_server: Vec<f64>,
    /// `u_y* = ∇g(x*)`.
    pub u_shared: Vec<f64>,
}

impl ReferenceSolution {
    /// Builds the solution record around a known minimizer.
    pub fn from_minimizer(problem: &ProblemInstance, x_star: Vec<f64>) -> Self {
        let n = problem.n();
        let u_clients: Vec<Vec<f64>> = problem.clients.iter().map(|f| f.gradient(&x_star)).collect();
        let u_shared = problem.shared.gradient(&x_star);
        let mut u_server = vec![0.0; x_star.len()];
        for u in &u_clients {
            axpy(-0.5 / n as f64, u, &mut u_server);
        }
        axpy(-0.5, &u_shared, &mut u_server);
        let mut component_grad_norms: Vec<f64> = u_clients.iter().map(|u| norm_sq(u).sqrt()).collect();
        component_grad_norms.push(norm_sq(&problem.server.gradient(&x_star)).sqrt());
        component_grad_norms.push(norm_sq(&u_shared).sqrt());
        Self {
            f_star: problem.full_value(&x_star),
            grad_norm: norm_sq(&problem.full_gradient(&x_star)).sqrt(),
            x_star,
            component_grad_norms,
            u_clients,
            u_server,
            u_shared,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Absolute gradient-norm target. `None` means `1e-12 · max(1, ‖∇F(x0)‖)`.
    pub tol: Option<f64>,
    pub max_iters: usize,
    /// Starting point; zeros when absent.
    pub x0: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: None, max_iters: 2_000_000, x0: None }
    }
}

/// Accelerated gradient descent with gradient-based restarts on
/// `F = (1/n) Σ f_i + 2 f_s + g`, run until `‖∇F‖ ≤ tol`.
pub fn solve_reference(problem: &ProblemInstance, opts: &SolverOptions) -> Result<ReferenceSolution> {
    let d = problem.dim();
    let mut x = match &opts.x0 {
        Some(x0) => {
            check_dim(d, x0.len())?;
            x0.clone()
        }
        None => vec![0.0; d],
    };
    let lip = problem.full_smoothness();
    if !(lip > 0.0 && lip.is_finite()) {
        return Err(Error::Contract(format!("smoothness {lip} must be positive")));
    }
    let step = 1.0 / lip;
    let g0 = problem.full_gradient(&x);
    let tol = opts.tol.unwrap_or(1e-12 * norm_sq(&g0).sqrt().max(1.0));

    let mut z = x.clone();
    let mut theta = 1.0f64;
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iters {
        let g = problem.full_gradient(&z);
        residual = norm_sq(&g).sqrt();
        if residual <= tol {
            return Ok(ReferenceSolution::from_minimizer(problem, z));
        }
        let mut x_next = z.clone();
        axpy(-step, &g, &mut x_next);
        // restart when the momentum direction opposes descent
        let moving: Vec<f64> = x_next.iter().zip(&x).map(|(a, b)| a - b).collect();
        if dot(&g, &moving) > 0.0 {
            theta = 1.0;
            z = x.clone();
            continue;
        }
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let beta = (theta - 1.0) / theta_next;
        z = x_next.iter().zip(&moving).map(|(a, m)| a + beta * m).collect();
        x = x_next;
        theta = theta_next;
    }
    Err(Error::SolverCap { iterations: opts.max_iters, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dist_sq;
    use crate::problems::{RegularizationLayout, SparseDataset, SyntheticQuadratic};

    #[test]
    fn recovers_closed_form_minimizer() {
        let inst = SyntheticQuadratic::new(4, 6, 200.0, 9).build().unwrap();
        let r = solve_reference(&inst.problem, &SolverOptions::default()).unwrap();
        assert!(dist_sq(&r.x_star, &inst.x_star).sqrt() < 1e-9);
        assert!(r.grad_norm <= 1e-11);
    }

    #[test]
    fn two_starts_agree() {
        let inst = SyntheticQuadratic::new(3, 5, 50.0, 4).build().unwrap();
        let tol = 1e-11;
        let a = solve_reference(
            &inst.problem,
            &SolverOptions {
                tol: Some(tol),
                x0: Some(vec![3.0, -1.0, 2.0, 0.5, -4.0]),
                ..Default::default()
            },
        )
        .unwrap();
        let b = solve_reference(
            &inst.problem,
            &SolverOptions { tol: Some(tol), x0: Some(vec![-2.0, 7.0, 0.0, 1.0, 1.0]), ..Default::default() },
        )
        .unwrap();
        // ‖x − x*‖ ≤ ‖∇F‖/μ_F with μ_F = 3μ + mean client modulus ≥ 4/50
        assert!(dist_sq(&a.x_star, &b.x_star).sqrt() <= 10.0 * tol / (4.0 / 50.0));
    }

    #[test]
    fn optimal_duals_sum_to_zero() {
        let data = SparseDataset::synthetic_logistic(120, 6, 0.1, 3);
        let shards = crate::problems::partition(&data, 3, &mut crate::rng::substream(1, 0)).unwrap();
        let problem = ProblemInstance::logistic(shards, 1e-2, RegularizationLayout::Template).unwrap();
        let r = solve_reference(&problem, &SolverOptions::default()).unwrap();
        let n = 3.0;
        let fs = problem.server.gradient(&r.x_star);
        let mut s = vec![0.0; 6];
        for u in &r.u_clients {
            axpy(1.0 / n, u, &mut s);
        }
        axpy(2.0, &fs, &mut s);
        axpy(1.0, &r.u_shared, &mut s);
        assert!(norm_sq(&s).sqrt() <= 1e-11);
        // the dual-sum constraint holds at u* by construction
        let mut c = crate::linalg::scale(2.0, &r.u_server);
        for u in &r.u_clients {
            axpy(1.0 / n, u, &mut c);
        }
        axpy(1.0, &r.u_shared, &mut c);
        assert!(crate::linalg::max_abs(&c) < 1e-14);
    }

    #[test]
    fn cap_is_reported() {
        let inst = SyntheticQuadratic::new(2, 4, 1e4, 1).build().unwrap();
        let err = solve_reference(&inst.problem, &SolverOptions { max_iters: 3, ..Default::default() })
            .unwrap_err();
        assert!(matches!(err, Error::SolverCap { iterations: 3, .. }));
    }
}
