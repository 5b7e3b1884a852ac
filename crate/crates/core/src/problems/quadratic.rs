use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use super::{Objective, ProblemInstance};
use crate::error::{Error, Result};
use crate::linalg::norm_sq;

/// `(μ/2)‖x‖²`; the zero function when `μ = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledSquaredNorm {
    pub dim: usize,
    pub mu: f64,
}

pub fn quadratic_reg(dim: usize, mu: f64) -> ScaledSquaredNorm {
    debug_assert!(mu >= 0.0);
    ScaledSquaredNorm { dim, mu }
}

impl Objective for ScaledSquaredNorm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.mu * norm_sq(x)
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().zip(x).for_each(|(o, xi)| *o = self.mu * xi);
    }

    fn smoothness(&self) -> f64 {
        self.mu
    }

    fn strong_convexity(&self) -> f64 {
        self.mu
    }
}

/// `½ xᵀAx − bᵀx` with symmetric positive semidefinite `A`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    a: DMatrix<f64>,
    b: DVector<f64>,
    lambda_min: f64,
    lambda_max: f64,
}

impl Quadratic {
    pub fn new(a: DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        let d = b.len();
        if a.nrows() != d || a.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: a.nrows() });
        }
        let asym = (&a - a.transpose()).amax();
        if asym > 1e-12 * (1.0 + a.amax()) {
            return Err(Error::Contract("quadratic matrix is not symmetric".into()));
        }
        let eig = a.clone().symmetric_eigen().eigenvalues;
        let lambda_min = eig.min();
        if lambda_min < -1e-12 * (1.0 + eig.amax()) {
            return Err(Error::Contract("quadratic matrix is not positive semidefinite".into()));
        }
        Ok(Self { lambda_max: eig.max(), lambda_min: lambda_min.max(0.0), a, b: DVector::from_vec(b) })
    }

    /// Replaces the computed spectral bounds with known exact ones, which
    /// must agree with the computed ones up to rounding.
    pub fn with_declared_spectrum(mut self, lambda_min: f64, lambda_max: f64) -> Result<Self> {
        let tol = 1e-9 * (1.0 + lambda_max.abs());
        if (lambda_min - self.lambda_min).abs() > tol || (lambda_max - self.lambda_max).abs() > tol {
            return Err(Error::Contract(format!(
                "declared spectrum [{lambda_min}, {lambda_max}] disagrees with computed [{}, {}]",
                self.lambda_min, self.lambda_max
            )));
        }
        self.lambda_min = lambda_min;
        self.lambda_max = lambda_max;
        Ok(self)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.b
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        0.5 * x.dot(&(&self.a * &x)) - self.b.dot(&x)
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.b.len();
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = -self.b[i];
            for j in 0..d {
                s += self.a[(i, j)] * x[j];
            }
            *o = s;
        }
    }

    fn smoothness(&self) -> f64 {
        self.lambda_max
    }

    fn strong_convexity(&self) -> f64 {
        self.lambda_min
    }
}

/// Random heterogeneous quadratics `f_i(x) = ½ xᵀA_i x − b_iᵀx` whose
/// spectra span exactly `[L/κ, L]`, so `L`, `μ`, and `x*` are known in
/// closed form.
#[derive(Clone, Debug)]
pub struct SyntheticQuadratic {
    pub n: usize,
    pub d: usize,
    pub smoothness: f64,
    pub kappa: f64,
    pub seed: u64,
    /// Random quadratics for `f_s` and `g` too, instead of `(μ/2)‖x‖²`.
    pub heterogeneous_server: bool,
}

/// A synthetic problem together with its exact minimizer.
#[derive(Debug)]
pub struct SyntheticInstance {
    pub problem: ProblemInstance,
    pub x_star: Vec<f64>,
}

impl SyntheticQuadratic {
    pub fn new(n: usize, d: usize, kappa: f64, seed: u64) -> Self {
        Self { n, d, smoothness: 1.0, kappa, seed, heterogeneous_server: false }
    }

    fn random_component<R: Rng>(&self, rng: &mut R) -> Result<Quadratic> {
        let d = self.d;
        let l = self.smoothness;
        let mu = l / self.kappa;
        let g = DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(&mut *rng));
        let q = g.qr().q();
        let lambdas: Vec<f64> = (0..d)
            .map(|j| match j {
                0 => l,
                j if j == d - 1 => mu,
                _ => mu * (l / mu).powf(rng.random::<f64>()),
            })
            .collect();
        let a = &q * DMatrix::from_diagonal(&DVector::from_vec(lambdas)) * q.transpose();
        let a = (&a + a.transpose()) * 0.5;
        let b: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut *rng)).collect();
        Quadratic::new(a, b)?.with_declared_spectrum(if d == 1 { l } else { mu }, l)
    }

    pub fn build(&self) -> Result<SyntheticInstance> {
        if self.n == 0 || self.d == 0 || !(self.kappa >= 1.0) || !(self.smoothness > 0.0) {
            return Err(Error::Contract(format!("invalid synthetic spec {self:?}")));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed);
        let clients = (0..self.n).map(|_| self.random_component(&mut rng)).collect::<Result<Vec<_>>>()?;
        let d = self.d;
        let mu = self.smoothness / self.kappa;
        let mut hessian = DMatrix::<f64>::zeros(d, d);
        let mut rhs = DVector::<f64>::zeros(d);
        let inv_n = 1.0 / self.n as f64;
        for c in &clients {
            hessian += c.matrix() * inv_n;
            rhs += c.linear() * inv_n;
        }
        let (server, shared): (Box<dyn Objective>, Box<dyn Objective>) = if self.heterogeneous_server {
            let s = self.random_component(&mut rng)?;
            let g = self.random_component(&mut rng)?;
            hessian += s.matrix() * 2.0 + g.matrix();
            rhs += s.linear() * 2.0 + g.linear();
            (Box::new(s), Box::new(g))
        } else {
            hessian += DMatrix::<f64>::identity(d, d) * (3.0 * mu);
            (Box::new(quadratic_reg(d, mu)), Box::new(quadratic_reg(d, mu)))
        };
        let x_star = hessian
            .cholesky()
            .ok_or_else(|| Error::Contract("synthetic Hessian is not positive definite".into()))?
            .solve(&rhs);
        let problem = ProblemInstance::new(
            clients.into_iter().map(|c| Box::new(c) as Box<dyn Objective>).collect(),
            server,
            shared,
        )?;
        Ok(SyntheticInstance { problem, x_star: x_star.iter().copied().collect() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reg_values() {
        let f = quadratic_reg(2, 2.0);
        assert_eq!(f.value(&[0.0, 0.0]), 0.0);
        assert_eq!(f.gradient(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(f.value(&[1.0, 1.0]), 2.0);
        assert_eq!(f.gradient(&[1.0, 1.0]), vec![2.0, 2.0]);
        let zero = quadratic_reg(2, 0.0);
        assert_eq!(zero.value(&[3.0, -4.0]), 0.0);
        assert_eq!(zero.gradient(&[3.0, -4.0]), vec![0.0, 0.0]);
        assert_eq!((f.smoothness(), f.strong_convexity()), (2.0, 2.0));
    }

    #[test]
    fn quadratic_rejects_bad_matrices() {
        let nonsym = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(Quadratic::new(nonsym, vec![0.0; 2]).is_err());
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(Quadratic::new(indefinite, vec![0.0; 2]).is_err());
    }

    #[test]
    fn synthetic_constants_match_spectrum() {
        let inst = SyntheticQuadratic::new(5, 10, 50.0, 3).build().unwrap();
        let p = &inst.problem;
        assert!((p.smoothness - 1.0).abs() < 1e-12);
        assert!((p.strong_convexity - 0.02).abs() < 1e-12);
        assert!((p.kappa().unwrap() - 50.0).abs() < 1e-9);
        let g = p.full_gradient(&inst.x_star);
        assert!(norm_sq(&g).sqrt() < 1e-12);
    }

    #[test]
    fn heterogeneous_minimizer() {
        let mut s = SyntheticQuadratic::new(3, 4, 20.0, 8);
        s.heterogeneous_server = true;
        let inst = s.build().unwrap();
        let g = inst.problem.full_gradient(&inst.x_star);
        assert!(norm_sq(&g).sqrt() < 1e-12);
        assert!((inst.problem.kappa().unwrap() - 20.0).abs() < 1e-9);
    }
}
