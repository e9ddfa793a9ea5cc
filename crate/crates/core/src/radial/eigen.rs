use std::collections::BTreeMap;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::numerics::{find_root, integrate_radial_ivp, IvpOptions, RootBracket};

const EIGEN_ODE_TOL: f64 = 1e-13;
const EIGEN_ROOT_TOL: f64 = 1e-12;

fn end_value(dim: usize, lambda: f64) -> Result<f64> {
    let res = integrate_radial_ivp(dim, |u| lambda * u, 1.0, 0.0, 1.0, 2.0, IvpOptions::new(EIGEN_ODE_TOL, false))?;
    Ok(res.end_state[0])
}

/// Smallest `λ` for which `−(φ'' + (N−1)/r φ') = λφ`, `φ(1) = φ(2) = 0`
/// has a nontrivial solution, by shooting on `φ(2; λ)`.
pub fn first_dirichlet_eigenvalue(dim: usize) -> Result<f64> {
    if dim < 2 {
        return Err(Error::InvalidParameter(format!("N = {dim} must be at least 2")));
    }
    // φ(2; λ) > 0 below λ₁ and changes sign at λ₁; scan in unit steps.
    let mut lo = 0.0;
    let mut f_lo = end_value(dim, lo)?;
    let mut hi = lo + 1.0;
    let mut f_hi = end_value(dim, hi)?;
    while f_hi > 0.0 {
        lo = hi;
        f_lo = f_hi;
        hi += 1.0;
        f_hi = end_value(dim, hi)?;
        if hi > 1e6 {
            return Err(Error::InvalidParameter("eigenvalue scan diverged".into()));
        }
    }
    let bracket = RootBracket::new(lo, hi, f_lo, f_hi)?;
    let mut failure = None;
    let root = find_root(
        |l| match end_value(dim, l) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        bracket,
        EIGEN_ROOT_TOL,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(root),
    }
}

/// Memoised [`first_dirichlet_eigenvalue`].
pub fn first_dirichlet_eigenvalue_cached(dim: usize) -> Result<f64> {
    static CACHE: OnceLock<Mutex<BTreeMap<usize, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    if let Some(&v) = cache.lock().unwrap().get(&dim) {
        return Ok(v);
    }
    let v = first_dirichlet_eigenvalue(dim)?;
    cache.lock().unwrap().insert(dim, v);
    Ok(v)
}
