use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use super::{Objective, SparseDataset};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, norm_sq};

const POWER_ITERATION_CAP: usize = 100_000;
const DEFAULT_L_TOL: f64 = 1e-10;

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `1 / (1 + e^{-z})` without overflow.
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Value and gradient of
/// `(1/m) Σ_j log(1 + exp(−b_j a_jᵀx)) + (μ/2)‖x‖²`.
pub fn logistic_value_grad(shard: &SparseDataset, mu: f64, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_dim(shard.dim, x.len())?;
    let mut grad = vec![0.0; x.len()];
    let value = accumulate(shard, mu, x, &mut grad);
    Ok((value, grad))
}

fn accumulate(shard: &SparseDataset, mu: f64, x: &[f64], grad: &mut [f64]) -> f64 {
    grad.iter_mut().zip(x).for_each(|(g, xi)| *g = mu * xi);
    let m = shard.rows.len();
    let mut loss = 0.0;
    if m > 0 {
        let inv_m = 1.0 / m as f64;
        for row in &shard.rows {
            let z = -row.label * row.dot(x);
            loss += softplus(z);
            let w = -row.label * sigmoid(z) * inv_m;
            for (&i, &v) in row.indices.iter().zip(&row.values) {
                grad[i] += w * v;
            }
        }
        loss *= inv_m;
    }
    loss + 0.5 * mu * norm_sq(x)
}

fn loss_value(shard: &SparseDataset, mu: f64, x: &[f64]) -> f64 {
    let m = shard.rows.len();
    let loss = if m == 0 {
        0.0
    } else {
        shard.rows.iter().map(|r| softplus(-r.label * r.dot(x))).sum::<f64>() / m as f64
    };
    loss + 0.5 * mu * norm_sq(x)
}

/// `(1/(4m)) λ_max(Σ_j a_j a_jᵀ) + μ` by power iteration, stopping when the
/// Rayleigh quotient changes by less than `tol` relative.
pub fn estimate_l(shard: &SparseDataset, mu: f64, tol: f64) -> Result<f64> {
    if shard.is_empty() {
        return Err(Error::Contract("cannot estimate L on an empty shard".into()));
    }
    let d = shard.dim;
    let m = shard.rows.len() as f64;
    let apply = |v: &[f64]| {
        let mut out = vec![0.0; d];
        for row in &shard.rows {
            let s = row.dot(v);
            for (&i, &a) in row.indices.iter().zip(&row.values) {
                out[i] += s * a;
            }
        }
        out
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let nv = norm_sq(&v).sqrt();
    v.iter_mut().for_each(|x| *x /= nv);
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATION_CAP {
        let w = apply(&v);
        let rayleigh = dot(&v, &w);
        let nw = norm_sq(&w).sqrt();
        if nw == 0.0 {
            return Ok(mu);
        }
        let converged = (rayleigh - estimate).abs() <= tol * rayleigh.abs();
        estimate = rayleigh;
        if converged {
            return Ok(estimate / (4.0 * m) + mu);
        }
        v = w.into_iter().map(|x| x / nw).collect();
    }
    Err(Error::NonConvergence { iterations: POWER_ITERATION_CAP, estimate: estimate / (4.0 * m) + mu })
}

/// Regularization giving condition number `kappa_target` once the
/// regularizer's own contribution to `L` is included: with
/// `μ = L_data / (κ − 1)`, `(L_data + μ) / μ = κ`.
pub fn scale_mu_for_kappa(l_data: f64, kappa_target: f64) -> Result<f64> {
    if !(kappa_target > 1.0) {
        return Err(Error::Contract(format!("target condition number must exceed 1, got {kappa_target}")));
    }
    Ok(l_data / (kappa_target - 1.0))
}

/// Averaged logistic loss of one client shard with an `(μ/2)‖x‖²` term.
#[derive(Clone, Debug)]
pub struct LogisticLoss {
    shard: SparseDataset,
    mu: f64,
    smoothness: f64,
}

impl LogisticLoss {
    pub fn new(shard: SparseDataset, mu: f64) -> Result<Self> {
        let smoothness = if shard.is_empty() { mu } else { estimate_l(&shard, mu, DEFAULT_L_TOL)? };
        Ok(Self { shard, mu, smoothness })
    }

    pub fn shard(&self) -> &SparseDataset {
        &self.shard
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

impl Objective for LogisticLoss {
    fn dim(&self) -> usize {
        self.shard.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        loss_value(&self.shard, self.mu, x)
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        accumulate(&self.shard, self.mu, x, out);
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn strong_convexity(&self) -> f64 {
        self.mu
    }

    fn value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut g = vec![0.0; x.len()];
        let v = accumulate(&self.shard, self.mu, x, &mut g);
        (v, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::SparseRow;

    fn one_row(label: f64, indices: Vec<usize>, values: Vec<f64>, dim: usize) -> SparseDataset {
        SparseDataset { rows: vec![SparseRow { label, indices, values }], dim }
    }

    #[test]
    fn at_origin() {
        let shard = SparseDataset::synthetic_logistic(17, 6, 0.2, 4);
        let (v, g) = logistic_value_grad(&shard, 0.0, &[0.0; 6]).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        let mut want = vec![0.0; 6];
        for r in &shard.rows {
            for (&i, &a) in r.indices.iter().zip(&r.values) {
                want[i] -= r.label * a / 2.0 / 17.0;
            }
        }
        for (a, b) in g.iter().zip(&want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn separable_limit() {
        let shard = one_row(1.0, vec![0], vec![1.0], 2);
        let (v, g) = logistic_value_grad(&shard, 0.0, &[800.0, 0.0]).unwrap();
        assert!(v.is_finite() && v < 1e-300);
        assert!(g.iter().all(|x| x.is_finite()));
        let (v, g) = logistic_value_grad(&shard, 0.0, &[-800.0, 0.0]).unwrap();
        assert!((v - 800.0).abs() < 1e-9);
        assert!((g[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let shard = one_row(1.0, vec![0], vec![1.0], 2);
        assert!(logistic_value_grad(&shard, 0.0, &[0.0; 3]).is_err());
    }

    #[test]
    fn l_for_single_row() {
        let shard = one_row(1.0, vec![0], vec![2.0], 2);
        assert!((estimate_l(&shard, 0.0, 1e-12).unwrap() - 1.0).abs() < 1e-12);
        assert!((estimate_l(&shard, 5.0, 1e-12).unwrap() - 6.0).abs() < 1e-12);
        let mut dup = shard.clone();
        dup.rows.push(dup.rows[0].clone());
        dup.rows.push(dup.rows[0].clone());
        assert!((estimate_l(&dup, 0.0, 1e-12).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn l_matches_dense_eigenvalue() {
        let shard = SparseDataset::synthetic_logistic(40, 7, 0.0, 9);
        let mut gram = nalgebra::DMatrix::<f64>::zeros(7, 7);
        for r in &shard.rows {
            for (&i, &a) in r.indices.iter().zip(&r.values) {
                for (&j, &b) in r.indices.iter().zip(&r.values) {
                    gram[(i, j)] += a * b;
                }
            }
        }
        let lmax = gram.symmetric_eigen().eigenvalues.max();
        let want = lmax / (4.0 * 40.0);
        let got = estimate_l(&shard, 0.0, 1e-13).unwrap();
        assert!((got - want).abs() <= 1e-9 * want);
    }

    #[test]
    fn empty_shard() {
        let shard = SparseDataset { rows: vec![], dim: 3 };
        assert!(estimate_l(&shard, 0.0, 1e-9).is_err());
    }

    #[test]
    fn kappa_scaling() {
        let mu = scale_mu_for_kappa(4.0, 5.0).unwrap();
        assert_eq!(mu, 1.0);
        assert_eq!((4.0 + mu) / mu, 5.0);
        let l_data = 2.5;
        let mu = scale_mu_for_kappa(l_data, 4e6).unwrap();
        assert!(((l_data + mu) / mu - 4e6).abs() < 1e-6);
        assert!(scale_mu_for_kappa(1.0, 1e300).unwrap() < 1e-299);
        assert!(scale_mu_for_kappa(1.0, 1.0).is_err());
    }
}
