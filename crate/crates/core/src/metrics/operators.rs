//! The consensus operators of the lifted formulation, materialized for one
//! coordinate. Coordinates decouple, so a `d`-dimensional state is handled
//! by applying the same matrices to every coordinate.
//!
//! Primal space X orders machines as `(x_1, …, x_n, x_s, y)` with weights
//! `(1, …, 1, 2n, n)`. The dual space U holds `(u_1, …, u_n)` with weight 1
//! and U_y holds `u_y` with weight `n`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

#[derive(Clone, Debug)]
pub struct ConsensusOperators {
    pub n: usize,
    /// Weights of the inner product on X.
    pub weights_x: DVector<f64>,
    /// Weights on U × U_y, with `u_y` last.
    pub weights_u: DVector<f64>,
    /// `D: X → U`, `x ↦ (x_i − x_s)_i`.
    pub d: DMatrix<f64>,
    /// `D_y: X → U_y`, `x ↦ y − x_s`.
    pub d_y: DMatrix<f64>,
    /// `D*: u ↦ (u_1, …, u_n, −Σu_i/(2n), 0)`.
    pub d_adj: DMatrix<f64>,
    /// `D_y*: u_y ↦ (0, …, 0, −u_y/2, u_y)`.
    pub d_y_adj: DMatrix<f64>,
}

pub fn build_operators(n: usize) -> ConsensusOperators {
    assert!(n >= 1, "need at least one client");
    let nf = n as f64;
    let dim_x = n + 2;
    let (server, y) = (n, n + 1);

    let mut weights_x = DVector::from_element(dim_x, 1.0);
    weights_x[server] = 2.0 * nf;
    weights_x[y] = nf;
    let mut weights_u = DVector::from_element(n + 1, 1.0);
    weights_u[n] = nf;

    let mut d = DMatrix::zeros(n, dim_x);
    for i in 0..n {
        d[(i, i)] = 1.0;
        d[(i, server)] = -1.0;
    }
    let mut d_y = DMatrix::zeros(1, dim_x);
    d_y[(0, y)] = 1.0;
    d_y[(0, server)] = -1.0;

    let mut d_adj = DMatrix::zeros(dim_x, n);
    for i in 0..n {
        d_adj[(i, i)] = 1.0;
        d_adj[(server, i)] = -1.0 / (2.0 * nf);
    }
    let mut d_y_adj = DMatrix::zeros(dim_x, 1);
    d_y_adj[(server, 0)] = -0.5;
    d_y_adj[(y, 0)] = 1.0;

    ConsensusOperators { n, weights_x, weights_u, d, d_y, d_adj, d_y_adj }
}

fn weighted_dot(w: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    w.iter().zip(a.iter().zip(b.iter())).map(|(w, (a, b))| w * a * b).sum()
}

/// Eigenvalues (ascending) of an operator self-adjoint under the weighted
/// inner product with weights `w`, via the similar matrix `W^½ M W^-½`.
fn weighted_spectrum(m: &DMatrix<f64>, w: &DVector<f64>) -> Vec<f64> {
    let sqrt_w = w.map(f64::sqrt);
    let mut s = m.clone();
    for i in 0..s.nrows() {
        for j in 0..s.ncols() {
            s[(i, j)] *= sqrt_w[i] / sqrt_w[j];
        }
    }
    let sym = (&s + s.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

impl ConsensusOperators {
    pub fn inner_x(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        weighted_dot(&self.weights_x, a, b)
    }

    /// Inner product on U alone (weight 1 per client).
    pub fn inner_u(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.dot(b)
    }

    /// Inner product on U_y (weight `n`).
    pub fn inner_u_y(&self, a: f64, b: f64) -> f64 {
        self.n as f64 * a * b
    }

    /// `D*D + D_y*D_y` on X.
    pub fn primal_gram(&self) -> DMatrix<f64> {
        &self.d_adj * &self.d + &self.d_y_adj * &self.d_y
    }

    /// `D_c = (D, D_y): X → U × U_y`.
    pub fn combined(&self) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(self.n + 1, self.n + 2);
        c.rows_mut(0, self.n).copy_from(&self.d);
        c.rows_mut(self.n, 1).copy_from(&self.d_y);
        c
    }

    pub fn combined_adj(&self) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(self.n + 2, self.n + 1);
        c.columns_mut(0, self.n).copy_from(&self.d_adj);
        c.columns_mut(self.n, 1).copy_from(&self.d_y_adj);
        c
    }

    /// `D_c D_c*` on U × U_y.
    pub fn dual_gram(&self) -> DMatrix<f64> {
        self.combined() * self.combined_adj()
    }

    /// Ascending eigenvalues of `D*D + D_y*D_y`.
    pub fn primal_spectrum(&self) -> Vec<f64> {
        weighted_spectrum(&self.primal_gram(), &self.weights_x)
    }

    /// Ascending eigenvalues of `D_c D_c*`.
    pub fn dual_spectrum(&self) -> Vec<f64> {
        weighted_spectrum(&self.dual_gram(), &self.weights_u)
    }

    /// Applies `m` coordinate-wise to a stack of machine vectors of length
    /// `d`, one row of the stack per input index of `m`.
    pub fn apply_blockwise(m: &DMatrix<f64>, blocks: &[&[f64]]) -> Vec<Vec<f64>> {
        assert_eq!(m.ncols(), blocks.len());
        let d = blocks.first().map_or(0, |b| b.len());
        (0..m.nrows())
            .map(|r| {
                let mut out = vec![0.0; d];
                for (c, b) in blocks.iter().enumerate() {
                    let w = m[(r, c)];
                    if w != 0.0 {
                        crate::linalg::axpy(w, b, &mut out);
                    }
                }
                out
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn adjoints_match_weighted_inner_products() {
        let mut rng = crate::rng::substream(5, 0);
        for n in [1usize, 2, 5] {
            let ops = build_operators(n);
            for _ in 0..100 {
                let x = DVector::from_fn(n + 2, |_, _| rng.random_range(-1.0..1.0));
                let u = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
                let uy: f64 = rng.random_range(-1.0..1.0);
                let lhs = ops.inner_u(&(&ops.d * &x), &u);
                let rhs = ops.inner_x(&x, &(&ops.d_adj * &u));
                assert!((lhs - rhs).abs() <= 1e-12);
                let lhs = ops.inner_u_y((&ops.d_y * &x)[0], uy);
                let rhs = ops.inner_x(&x, &(&ops.d_y_adj * DVector::from_element(1, uy)));
                assert!((lhs - rhs).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn kernel_is_consensus() {
        let ops = build_operators(4);
        let c = ops.combined();
        let consensus = DVector::from_element(6, 1.7);
        assert!((&c * &consensus).amax() < 1e-15);
        let mut off = consensus.clone();
        off[5] += 0.1;
        assert!((&c * &off).amax() > 1e-3);
        // the kernel is one-dimensional
        let rank = c.clone().svd(false, false).singular_values.iter().filter(|s| **s > 1e-12).count();
        assert_eq!(rank, 5);
    }

    #[test]
    fn spectral_constants() {
        for n in [1usize, 2, 5] {
            let ops = build_operators(n);
            let p = ops.primal_spectrum();
            assert!((p.last().unwrap() - 2.0).abs() < 1e-8);
            let q = ops.dual_spectrum();
            assert!((q[0] - 1.0).abs() < 1e-8);
            assert_eq!(q.iter().filter(|v| (**v - 1.0).abs() < 1e-8).count(), n);
        }
    }

    #[test]
    fn blockwise_application() {
        let ops = build_operators(2);
        let blocks: Vec<Vec<f64>> = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![0.5, 0.5], vec![1.0, -1.0]];
        let refs: Vec<&[f64]> = blocks.iter().map(|b| b.as_slice()).collect();
        let dx = ConsensusOperators::apply_blockwise(&ops.d, &refs);
        assert_eq!(dx, vec![vec![0.5, 1.5], vec![2.5, 3.5]]);
    }
}
