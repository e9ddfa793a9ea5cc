//! Newton's method on the finite-difference system, residuals, and
//! natural-parameter continuation in λ.

use crate::error::{Error, Result};
use crate::numerics::{solve_tridiagonal, solve_tridiagonal_in_place, Mesh};

use super::eigen::first_dirichlet_eigenvalue_cached;
use super::operator::RadialOperator;
use super::shooting::shooting_slope;
use super::{derivative_sign_changes, Profile, ProblemSpec, SolverOptions, SHOOTING_LAMBDA_MAX};

#[inline]
fn nonlinearity(u: f64, p: f64) -> f64 {
    u.max(0.0).powf(p - 1.0)
}

#[inline]
fn nonlinearity_prime(u: f64, p: f64) -> f64 {
    (p - 1.0) * u.max(0.0).powf(p - 2.0)
}

fn residual_vector(spec: &ProblemSpec, op: &RadialOperator, u: &[f64], out: &mut [f64]) -> f64 {
    let mut worst = 0.0f64;
    for (k, slot) in out.iter_mut().enumerate() {
        let i = k + 1;
        let f = -op.apply_at(u, i) + spec.lambda * u[i] - nonlinearity(u[i], spec.p);
        *slot = f;
        worst = worst.max(f.abs());
    }
    worst
}

/// Max-norm of `−(u'' + (N−1)/r u') + λu − u^{p−1}` over interior nodes,
/// with the three-point centred stencil.
pub fn residual_of(spec: &ProblemSpec, mesh: &Mesh, u: &[f64]) -> f64 {
    let op = RadialOperator::new(mesh, spec.dim);
    let mut scratch = vec![0.0; op.interior_len()];
    residual_vector(spec, &op, u, &mut scratch)
}

pub fn residual(profile: &Profile) -> f64 {
    residual_of(&profile.spec, &profile.mesh, &profile.u)
}

/// Tridiagonal Jacobian `−L + λ − (p−1)u^{p−2}` on interior nodes.
#[derive(Debug, Clone)]
pub struct Jacobian {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Jacobian {
    pub fn new(spec: &ProblemSpec, op: &RadialOperator, u: &[f64]) -> Self {
        let m = op.interior_len();
        let mut diag = Vec::with_capacity(m);
        for k in 0..m {
            diag.push(-op.diag[k] + spec.lambda - nonlinearity_prime(u[k + 1], spec.p));
        }
        Self {
            sub: op.sub.iter().map(|v| -v).collect(),
            diag,
            sup: op.sup.iter().map(|v| -v).collect(),
        }
    }

    /// Solves `J x = rhs` for interior values.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        solve_tridiagonal(&self.sub, &self.diag, &self.sup, rhs)
    }
}

/// `∂u/∂λ = −J⁻¹u` along the branch, as nodal values (zero at the ends).
pub fn lambda_tangent(spec: &ProblemSpec, mesh: &Mesh, u: &[f64]) -> Result<Vec<f64>> {
    let op = RadialOperator::new(mesh, spec.dim);
    let jac = Jacobian::new(spec, &op, u);
    let n = u.len();
    let rhs: Vec<f64> = u[1..n - 1].iter().map(|v| -v).collect();
    let interior = jac.solve(&rhs).map_err(|e| match e {
        Error::SingularPivot { .. } => Error::DegenerateLinearization {
            lambda: spec.lambda,
        },
        other => other,
    })?;
    let mut out = vec![0.0; n];
    out[1..n - 1].copy_from_slice(&interior);
    Ok(out)
}

/// Damped Newton iteration for the discrete ground-state equations from
/// the initial guess `u`. Steps are halved while the residual grows.
pub fn newton_solve(
    spec: &ProblemSpec,
    mesh: &Mesh,
    mut u: Vec<f64>,
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    let n = mesh.len();
    if u.len() != n {
        return Err(Error::InvalidParameter("initial guess length mismatch".into()));
    }
    u[0] = 0.0;
    u[n - 1] = 0.0;
    let op = RadialOperator::new(mesh, spec.dim);
    let m = op.interior_len();
    let mut f = vec![0.0; m];
    let mut f_try = vec![0.0; m];
    let mut scratch = vec![0.0; m];
    let mut trial = u.clone();
    let mut res = residual_vector(spec, &op, &u, &mut f);
    let mut last_step = f64::INFINITY;
    let diag_scale = op.diag.iter().fold(spec.lambda.abs(), |a, d| a.max(d.abs()));
    // Never ask for less than the rounding floor of the difference operator.
    let target = |u: &[f64]| {
        let umax = u.iter().fold(0.0f64, |a, &v| a.max(v));
        let nonlinear = umax.powf(spec.p - 1.0);
        let floor = 8.0 * f64::EPSILON * (diag_scale * umax + nonlinear);
        ((opts.newton_tol * nonlinear.max(1.0)).max(floor), umax)
    };

    for _ in 0..opts.max_newton_iterations {
        let (tol, umax) = target(&u);
        if res <= tol && last_step <= 1e-10 * umax.max(f64::MIN_POSITIVE) {
            return Ok(u);
        }
        let jac = Jacobian::new(spec, &op, &u);
        let mut delta: Vec<f64> = f.iter().map(|v| -v).collect();
        solve_tridiagonal_in_place(&jac.sub, &jac.diag, &jac.sup, &mut delta, &mut scratch)?;
        let step_norm = delta.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut alpha = 1.0;
        loop {
            for k in 0..m {
                trial[k + 1] = u[k + 1] + alpha * delta[k];
            }
            let res_try = residual_vector(spec, &op, &trial, &mut f_try);
            if res_try.is_finite() && (res_try < res || res_try <= tol) {
                std::mem::swap(&mut u, &mut trial);
                std::mem::swap(&mut f, &mut f_try);
                res = res_try;
                last_step = alpha * step_norm;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-9 {
                // Stagnation: accept only if already converged.
                return if res <= tol {
                    Ok(u)
                } else {
                    Err(Error::NewtonDivergence {
                        iterations: opts.max_newton_iterations,
                        residual: res,
                    })
                };
            }
        }
    }
    let (tol, _) = target(&u);
    if res <= tol {
        Ok(u)
    } else {
        Err(Error::NewtonDivergence {
            iterations: opts.max_newton_iterations,
            residual: res,
        })
    }
}

fn finish(spec: ProblemSpec, mesh: Mesh, u: Vec<f64>) -> Result<Profile> {
    let profile = Profile::from_values(spec, mesh, u)?;
    profile.validate()?;
    Ok(profile)
}

/// The positive radial ground state for `spec`.
///
/// Up to `λ = 10³` the slope `u'(1)` is found by shooting and the shot is
/// polished by Newton on the mesh; beyond that the branch is continued in
/// λ from `10³`.
pub fn ground_state(spec: &ProblemSpec, opts: &SolverOptions) -> Result<Profile> {
    if spec.lambda > SHOOTING_LAMBDA_MAX {
        let base = ground_state(&spec.with_lambda(SHOOTING_LAMBDA_MAX), opts)?;
        return continue_in_lambda(&base, spec.lambda, opts);
    }
    let root = shooting_slope(spec, opts)?;
    let mesh = opts.mesh_for(spec.lambda)?;
    let traj = root
        .shot
        .trajectory
        .as_ref()
        .expect("crossing shot carries a trajectory");
    let zero = root.shot.first_zero.unwrap_or(2.0);
    let guess: Vec<f64> = mesh
        .nodes()
        .iter()
        .map(|&r| if r < zero { traj.value(r).max(0.0) } else { 0.0 })
        .collect();
    let u = newton_solve(spec, &mesh, guess, opts)?;
    finish(*spec, mesh, u)
}

fn acceptable(u: &[f64]) -> bool {
    let n = u.len();
    u[1..n - 1].iter().all(|&v| v > 0.0) && derivative_sign_changes(u) == 1
}

fn resample(from: &Mesh, values: &[f64], to: &Mesh) -> Vec<f64> {
    if from == to {
        return values.to_vec();
    }
    let n = to.len();
    to.nodes()
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            if i == 0 || i == n - 1 {
                0.0
            } else {
                from.interpolate(values, r).max(0.0)
            }
        })
        .collect()
}

/// Follows the ground-state branch from `start` to `lambda_target` with a
/// tangent predictor and Newton corrector, halving the step on failure.
pub fn continue_in_lambda(start: &Profile, lambda_target: f64, opts: &SolverOptions) -> Result<Profile> {
    let lambda0 = start.spec.lambda;
    if lambda_target == lambda0 {
        return Ok(start.clone());
    }
    let dim = start.spec.dim;
    let lambda1 = first_dirichlet_eigenvalue_cached(dim)?;
    if !(lambda_target > -lambda1) {
        return Err(Error::InvalidParameter(format!(
            "target lambda = {lambda_target} must exceed -lambda_1 = {}",
            -lambda1
        )));
    }
    let work_mesh = opts.mesh_for(lambda0.max(lambda_target))?;
    let target_mesh = opts.mesh_for(lambda_target)?;

    let mut spec = start.spec;
    let mut u = if start.mesh == work_mesh {
        start.u.clone()
    } else {
        let guess = resample(&start.mesh, &start.u, &work_mesh);
        newton_solve(&spec, &work_mesh, guess, opts)?
    };

    let direction = (lambda_target - lambda0).signum();
    let max_step = |lambda: f64| {
        if direction > 0.0 {
            (0.5 * lambda.abs()).max(2.0)
        } else {
            // never close more than half the gap to the bifurcation point
            (0.5 * (lambda + lambda1)).max(0.0).min((0.5 * lambda.abs()).max(2.0))
        }
    };
    let mut lambda = lambda0;
    let mut step = (lambda_target - lambda0).abs().min(max_step(lambda));
    while lambda != lambda_target {
        let remaining = (lambda_target - lambda).abs();
        step = step.min(remaining).min(max_step(lambda));
        let next = if step >= remaining {
            lambda_target
        } else {
            lambda + direction * step
        };
        let tangent = lambda_tangent(&spec, &work_mesh, &u)?;
        let dl = next - lambda;
        let guess: Vec<f64> = u
            .iter()
            .zip(&tangent)
            .map(|(v, t)| (v + dl * t).max(0.0))
            .collect();
        let trial_spec = spec.with_lambda(next);
        match newton_solve(&trial_spec, &work_mesh, guess, opts) {
            Ok(v) if acceptable(&v) => {
                u = v;
                lambda = next;
                spec = trial_spec;
                step *= 2.0;
            }
            _ => {
                step *= 0.5;
                if step < 1e-9 * lambda.abs().max(1.0) {
                    return Err(Error::ContinuationStalled { last_good: lambda });
                }
            }
        }
    }
    if work_mesh != target_mesh {
        let guess = resample(&work_mesh, &u, &target_mesh);
        u = newton_solve(&spec, &target_mesh, guess, opts)?;
        return finish(spec, target_mesh, u);
    }
    finish(spec, work_mesh, u)
}
