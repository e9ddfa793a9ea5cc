use crate::error::{Error, Result};

/// Sign-changing interval for a scalar function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl RootBracket {
    pub fn new(lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Result<Self> {
        let b = Self { lo, hi, f_lo, f_hi };
        b.validate()?;
        Ok(b)
    }

    /// Evaluates `f` at both ends and checks the sign change.
    pub fn from_fn<F: FnMut(f64) -> f64>(lo: f64, hi: f64, mut f: F) -> Result<Self> {
        let f_lo = f(lo);
        let f_hi = f(hi);
        Self::new(lo, hi, f_lo, f_hi)
    }

    fn validate(&self) -> Result<()> {
        let ok = self.lo < self.hi
            && self.f_lo.is_finite()
            && self.f_hi.is_finite()
            && (self.f_lo * self.f_hi < 0.0 || self.f_lo == 0.0 || self.f_hi == 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidBracket {
                lo: self.lo,
                hi: self.hi,
                f_lo: self.f_lo,
                f_hi: self.f_hi,
            })
        }
    }
}

/// Brent's method: bisection safeguarded by secant and inverse quadratic
/// steps. Terminates when the bracket is narrower than `tol`; the returned
/// point always lies in the original bracket.
pub fn find_root<F: FnMut(f64) -> f64>(mut f: F, bracket: RootBracket, tol: f64) -> Result<f64> {
    bracket.validate()?;
    if bracket.f_lo == 0.0 {
        return Ok(bracket.lo);
    }
    if bracket.f_hi == 0.0 {
        return Ok(bracket.hi);
    }
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let (mut fa, mut fb) = (bracket.f_lo, bracket.f_hi);
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..500 {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b.clamp(bracket.lo, bracket.hi));
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Ok(b.clamp(bracket.lo, bracket.hi))
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
/// Returns `(argmax, max)`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_root() {
        let b = RootBracket::from_fn(0.0, 2.0, |x| x - 1.0).unwrap();
        assert!((find_root(|x| x - 1.0, b, 1e-12).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_two() {
        let f = |x: f64| x * x - 2.0;
        let b = RootBracket::from_fn(1.0, 2.0, f).unwrap();
        let tol = 1e-10;
        assert!((find_root(f, b, tol).unwrap() - 2f64.sqrt()).abs() <= tol);
    }

    #[test]
    fn sine_root_is_pi() {
        let b = RootBracket::from_fn(3.0, 4.0, f64::sin).unwrap();
        let tol = 1e-12;
        assert!((find_root(f64::sin, b, tol).unwrap() - std::f64::consts::PI).abs() <= tol);
    }

    #[test]
    fn invalid_bracket() {
        assert!(RootBracket::from_fn(0.0, 1.0, |x| x + 1.0).is_err());
        assert!(RootBracket::new(1.0, 0.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn golden_section_parabola() {
        let (x, fx) = golden_section_max(|x| -(x - 0.3) * (x - 0.3) + 2.0, -1.0, 1.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn root_stays_inside_bracket(shift in -5.0f64..5.0, lo in -10.0f64..-5.5, hi in 5.5f64..10.0, cubic in 0.0f64..3.0) {
            let f = |x: f64| cubic * (x - shift).powi(3) + (x - shift);
            let b = RootBracket::from_fn(lo, hi, f).unwrap();
            let x = find_root(f, b, 1e-12).unwrap();
            prop_assert!(x >= lo && x <= hi);
            prop_assert!((x - shift).abs() < 1e-9);
        }

        #[test]
        fn deterministic(shift in -1.0f64..1.0) {
            let f = |x: f64| (x - shift).tanh();
            let b = RootBracket::from_fn(-3.0, 3.0, f).unwrap();
            let x1 = find_root(f, b, 1e-13).unwrap();
            let x2 = find_root(f, b, 1e-13).unwrap();
            prop_assert_eq!(x1.to_bits(), x2.to_bits());
        }
    }
}
