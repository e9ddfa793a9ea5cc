//! Positive radial ground states `u_λ` of `−Δu + λu = u^{p−1}` on the
//! annulus with Dirichlet data, and the first radial Dirichlet eigenvalue.

mod eigen;
mod newton;
mod operator;
mod shooting;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Mesh;

pub use eigen::{first_dirichlet_eigenvalue, first_dirichlet_eigenvalue_cached};
pub use newton::{
    continue_in_lambda, ground_state, lambda_tangent, newton_solve, residual, residual_of,
    Jacobian,
};
pub use operator::RadialOperator;
pub use shooting::{shoot, shooting_slope, ShootingRoot, ShotResult};

/// Largest λ solved by single shooting; larger λ are reached by continuation.
pub const SHOOTING_LAMBDA_MAX: f64 = 1e3;

const MAX_NODES: usize = 200_000;

/// Surface measure of the unit sphere `S^{N−1}`: `2π^{N/2} / Γ(N/2)`.
pub fn sphere_measure(dim: usize) -> f64 {
    use std::f64::consts::PI;
    // |S^0| = 2, |S^1| = 2π, |S^{n+1}| = 2π/n |S^{n-1}|.
    let (mut c, mut k) = if dim % 2 == 1 { (2.0, 1) } else { (2.0 * PI, 2) };
    while k < dim {
        c *= 2.0 * PI / k as f64;
        k += 2;
    }
    c
}

/// Dimension, exponent and frequency of one ground-state problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    #[serde(rename = "N")]
    pub dim: usize,
    pub p: f64,
    pub lambda: f64,
}

impl ProblemSpec {
    /// Checks `N ≥ 2` and `2 < p < 2N/(N−2)`. The frequency is checked
    /// against `−λ₁` by [`ProblemSpec::check_frequency`].
    pub fn new(dim: usize, p: f64, lambda: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!("N = {dim} must be at least 2")));
        }
        if !(p > 2.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!("p = {p} must exceed 2")));
        }
        if dim >= 3 {
            let critical = 2.0 * dim as f64 / (dim as f64 - 2.0);
            if p >= critical {
                return Err(Error::InvalidParameter(format!(
                    "p = {p} is not Sobolev-subcritical for N = {dim} (need p < {critical})"
                )));
            }
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda = {lambda} is not finite")));
        }
        Ok(Self { dim, p, lambda })
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..*self }
    }

    /// Fails unless `λ > −λ₁(N)`.
    pub fn check_frequency(&self) -> Result<()> {
        let lambda1 = first_dirichlet_eigenvalue_cached(self.dim)?;
        if self.lambda > -lambda1 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "lambda = {} must exceed -lambda_1 = {}",
                self.lambda, -lambda1
            )))
        }
    }
}

/// Tolerances and mesh policy for the ground-state solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Local error tolerance of the shooting integrator.
    pub ode_tol: f64,
    /// Newton stops once the residual is below `newton_tol · max(1, u_max^{p−1})`.
    pub newton_tol: f64,
    pub max_newton_iterations: usize,
    /// Fixed node count; `None` selects `max(400, 40⌈√λ⌉)`.
    pub nodes: Option<usize>,
    /// First slope tried when bracketing `u'(1)`.
    #[serde(default = "unit_slope")]
    pub initial_slope: f64,
}

fn unit_slope() -> f64 {
    1.0
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            ode_tol: 1e-12,
            newton_tol: 1e-10,
            max_newton_iterations: 60,
            nodes: None,
            initial_slope: 1.0,
        }
    }
}

impl SolverOptions {
    pub fn node_count(&self, lambda: f64) -> usize {
        if let Some(n) = self.nodes {
            return n;
        }
        let root = lambda.max(0.0).sqrt().ceil() as usize;
        (40 * root).max(400).min(MAX_NODES)
    }

    pub fn mesh_for(&self, lambda: f64) -> Result<Mesh> {
        Mesh::uniform(self.node_count(lambda))
    }
}

/// A converged ground state on its mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub spec: ProblemSpec,
    pub mesh: Mesh,
    pub u: Vec<f64>,
    /// `u'(1)` from a third-order one-sided difference.
    pub s_slope: f64,
    pub u_max: f64,
    pub r_bar: f64,
    pub residual_inf: f64,
}

impl Profile {
    /// Builds a profile from nodal values, deriving peak data and residual.
    pub fn from_values(spec: ProblemSpec, mesh: Mesh, u: Vec<f64>) -> Result<Self> {
        if u.len() != mesh.len() {
            return Err(Error::InvalidParameter(format!(
                "{} values for a mesh of {} nodes",
                u.len(),
                mesh.len()
            )));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite profile values".into()));
        }
        let r = mesh.nodes();
        let n = r.len();
        let (imax, _) = u[1..n - 1]
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
        let i = imax + 1;
        let r_bar = parabola_vertex(
            (r[i - 1], u[i - 1]),
            (r[i], u[i]),
            (r[i + 1], u[i + 1]),
        )
        .unwrap_or(r[i]);
        let u_max = mesh.interpolate(&u, r_bar);
        let s_slope = boundary_slope(&mesh, &u);
        let residual_inf = residual_of(&spec, &mesh, &u);
        Ok(Self {
            spec,
            mesh,
            u,
            s_slope,
            u_max,
            r_bar,
            residual_inf,
        })
    }

    /// Residual tolerance `1e−8 · max(1, u_max^{p−1})` used for acceptance.
    pub fn residual_bound(&self) -> f64 {
        1e-8 * self.u_max.powf(self.spec.p - 1.0).max(1.0)
    }

    /// Checks the ground-state invariants: Dirichlet endpoints, positivity,
    /// a single discrete peak, and the residual bound.
    pub fn validate(&self) -> Result<()> {
        let n = self.u.len();
        let scale = self.u_max.abs().max(f64::MIN_POSITIVE);
        if self.u[0].abs() > 1e-10 * scale || self.u[n - 1].abs() > 1e-10 * scale {
            return Err(Error::ProfileInvariant("nonzero boundary value".into()));
        }
        if let Some(k) = self.u[1..n - 1].iter().position(|&v| !(v > 0.0)) {
            return Err(Error::ProfileInvariant(format!(
                "non-positive value at node {}",
                k + 1
            )));
        }
        let changes = derivative_sign_changes(&self.u);
        if changes != 1 {
            return Err(Error::ProfileInvariant(format!(
                "discrete derivative changes sign {changes} times"
            )));
        }
        let r = self.mesh.nodes();
        if !(self.r_bar > r[0] && self.r_bar < r[n - 1]) {
            return Err(Error::ProfileInvariant("peak radius not interior".into()));
        }
        if !(self.residual_inf <= self.residual_bound()) {
            return Err(Error::ProfileInvariant(format!(
                "residual {:e} above bound {:e}",
                self.residual_inf,
                self.residual_bound()
            )));
        }
        Ok(())
    }

    /// `r,u` CSV with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "r,u")?;
        for (r, u) in self.mesh.nodes().iter().zip(&self.u) {
            writeln!(out, "{r:.16e},{u:.16e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(spec: ProblemSpec, input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty profile file".into()))?
            .map_err(|e| Error::Parse(e.to_string()))?;
        if header.trim() != "r,u" {
            return Err(Error::Parse(format!("unexpected header {header:?}")));
        }
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for line in lines {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad row {line:?}")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{s:?}: {e}")))
            };
            nodes.push(parse(a)?);
            values.push(parse(b)?);
        }
        Self::from_values(spec, Mesh::from_nodes(nodes)?, values)
    }
}

fn parabola_vertex(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Option<f64> {
    let num = (b.0 - a.0).powi(2) * (b.1 - c.1) - (b.0 - c.0).powi(2) * (b.1 - a.1);
    let den = (b.0 - a.0) * (b.1 - c.1) - (b.0 - c.0) * (b.1 - a.1);
    if den == 0.0 {
        return None;
    }
    let x = b.0 - 0.5 * num / den;
    (x > a.0 && x < c.0).then_some(x)
}

fn boundary_slope(mesh: &Mesh, u: &[f64]) -> f64 {
    let r = mesh.nodes();
    match mesh.uniform_step() {
        Some(h) => (-11.0 * u[0] + 18.0 * u[1] - 9.0 * u[2] + 2.0 * u[3]) / (6.0 * h),
        None => (u[1] - u[0]) / (r[1] - r[0]),
    }
}

/// Number of sign changes of `u_{i+1} − u_i`, zero differences ignored.
pub(crate) fn derivative_sign_changes(u: &[f64]) -> usize {
    let mut changes = 0;
    let mut last = 0.0f64;
    for w in u.windows(2) {
        let d = w[1] - w[0];
        if d == 0.0 {
            continue;
        }
        if last != 0.0 && d.signum() != last.signum() {
            changes += 1;
        }
        last = d;
    }
    changes
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_measures() {
        assert!((sphere_measure(2) - 2.0 * PI).abs() < 1e-15);
        assert!((sphere_measure(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_measure(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn spec_validation() {
        assert!(ProblemSpec::new(1, 4.0, 1.0).is_err());
        assert!(ProblemSpec::new(2, 2.0, 1.0).is_err());
        assert!(ProblemSpec::new(3, 6.0, 1.0).is_err());
        assert!(ProblemSpec::new(3, 5.9, 1.0).is_ok());
        assert!(ProblemSpec::new(2, 100.0, 1.0).is_ok());
        assert!(ProblemSpec::new(2, 4.0, -20.0).unwrap().check_frequency().is_err());
        assert!(ProblemSpec::new(2, 4.0, -9.0).unwrap().check_frequency().is_ok());
    }

    #[test]
    fn mesh_policy() {
        let o = SolverOptions::default();
        assert_eq!(o.node_count(-5.0), 400);
        assert_eq!(o.node_count(100.0), 400);
        assert_eq!(o.node_count(1000.0), 1280);
        assert_eq!(o.node_count(1e12), 200_000);
    }

    #[test]
    fn sign_changes() {
        assert_eq!(derivative_sign_changes(&[0.0, 1.0, 2.0, 1.0, 0.0]), 1);
        assert_eq!(derivative_sign_changes(&[0.0, 1.0, 1.0, 0.0]), 1);
        assert_eq!(derivative_sign_changes(&[0.0, 2.0, 1.0, 2.0, 0.0]), 3);
    }
}
