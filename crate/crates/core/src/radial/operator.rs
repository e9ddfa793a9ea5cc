//! Three-point discretisation of `L u = u'' + (N-1)/r u'` on a [`Mesh`],
//! shared by the Newton solver, the residual, the linearised mass slope and
//! the time stepper.

use crate::numerics::Mesh;

/// Row coefficients of `L` at the interior nodes `1..n-1`.
///
/// Entry `k` of each vector belongs to node `k + 1`.
#[derive(Debug, Clone)]
pub struct RadialOperator {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl RadialOperator {
    pub fn new(mesh: &Mesh, dim: usize) -> Self {
        let r = mesh.nodes();
        let n = r.len();
        let m = (dim - 1) as f64;
        let mut sub = Vec::with_capacity(n - 2);
        let mut diag = Vec::with_capacity(n - 2);
        let mut sup = Vec::with_capacity(n - 2);
        for i in 1..n - 1 {
            match mesh.uniform_step() {
                Some(h) => {
                    let h2 = h * h;
                    let drift = m / (2.0 * h * r[i]);
                    sub.push(1.0 / h2 - drift);
                    diag.push(-2.0 / h2);
                    sup.push(1.0 / h2 + drift);
                }
                None => {
                    let (hm, hp) = mesh.spacing(i);
                    let drift = m / (r[i] * (hm + hp));
                    sub.push(2.0 / (hm * (hm + hp)) - drift);
                    diag.push(-2.0 / (hm * hp));
                    sup.push(2.0 / (hp * (hm + hp)) + drift);
                }
            }
        }
        Self { sub, diag, sup }
    }

    pub fn interior_len(&self) -> usize {
        self.diag.len()
    }

    /// `(L u)_i` at interior node `i` (mesh index), with `u` on all nodes.
    #[inline]
    pub fn apply_at(&self, u: &[f64], i: usize) -> f64 {
        let k = i - 1;
        self.sub[k] * u[i - 1] + self.diag[k] * u[i] + self.sup[k] * u[i + 1]
    }

    /// Positive weights `w` with `w_i sup_i = w_{i+1} sub_{i+1}`, making `L`
    /// self-adjoint in `Σ w_i f_i g_i`. Scaled so `w_1 = h r_1^{N-1}`; for
    /// `N = 2` on a uniform mesh this is exactly `h r_i`.
    pub fn symmetrizing_weights(&self, mesh: &Mesh, dim: usize) -> Vec<f64> {
        let r = mesh.nodes();
        let m = self.interior_len();
        let mut w = Vec::with_capacity(m);
        let (_, h1) = mesh.spacing(1);
        let first = 0.5 * (r[1] - r[0] + h1) * r[1].powi(dim as i32 - 1);
        w.push(first);
        for k in 0..m - 1 {
            let next = w[k] * self.sup[k] / self.sub[k + 1];
            w.push(next);
        }
        w
    }
}
