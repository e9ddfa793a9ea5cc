use std::ops::{Div, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Field element accepted by the Thomas solver.
pub trait TridiagScalar:
    Copy + Mul<Output = Self> + Sub<Output = Self> + Div<Output = Self>
{
    fn zero() -> Self;
    fn modulus(self) -> f64;
}

impl TridiagScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl TridiagScalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

const PIVOT_TOL: f64 = 1e-14;

/// Thomas algorithm for `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`.
///
/// `sub[0]` and `sup[n-1]` are ignored. The solution overwrites `rhs`;
/// `scratch` must hold `n` entries.
pub fn solve_tridiagonal_in_place<T: TridiagScalar>(
    sub: &[T],
    diag: &[T],
    sup: &[T],
    rhs: &mut [T],
    scratch: &mut [T],
) -> Result<()> {
    let n = diag.len();
    if sub.len() != n || sup.len() != n || rhs.len() != n || scratch.len() < n {
        return Err(Error::InvalidParameter(
            "tridiagonal system with inconsistent lengths".into(),
        ));
    }
    if n == 0 {
        return Ok(());
    }
    let row_scale = |i: usize| {
        let mut s = diag[i].modulus();
        if i > 0 {
            s = s.max(sub[i].modulus());
        }
        if i + 1 < n {
            s = s.max(sup[i].modulus());
        }
        s
    };
    let mut pivot = diag[0];
    if !(pivot.modulus() > PIVOT_TOL * row_scale(0)) {
        return Err(Error::SingularPivot { row: 0 });
    }
    rhs[0] = rhs[0] / pivot;
    for i in 1..n {
        scratch[i] = sup[i - 1] / pivot;
        pivot = diag[i] - sub[i] * scratch[i];
        if !(pivot.modulus() > PIVOT_TOL * row_scale(i)) {
            return Err(Error::SingularPivot { row: i });
        }
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] = rhs[i] - scratch[i + 1] * next;
    }
    Ok(())
}

/// Solves a tridiagonal system, returning a fresh solution vector.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let mut x = rhs.to_vec();
    let mut scratch = vec![0.0; diag.len()];
    solve_tridiagonal_in_place(sub, diag, sup, &mut x, &mut scratch)?;
    Ok(x)
}
