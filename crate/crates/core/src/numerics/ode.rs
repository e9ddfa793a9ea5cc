//! Dormand–Prince 5(4) integration of the radial equation
//! `u'' + (N-1)/r u' + g(u) = 0` with dense output and zero-crossing events.

use crate::error::{Error, Result};

// Butcher tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Error weights (5th minus 4th order).
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense output.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const PI_ALPHA: f64 = 0.7 / 5.0;
const PI_BETA: f64 = 0.4 / 5.0;
const MAX_STEPS: usize = 1_000_000;
const OVERFLOW: f64 = 1e150;
const EVENT_WIDTH: f64 = 1e-13;

type State = [f64; 2];

#[derive(Debug, Clone, Copy)]
pub struct IvpOptions {
    pub tol: f64,
    /// Magnitude below which the error control becomes absolute: a step is
    /// accepted when its error estimate is `≤ tol · (abs_scale + |y|)`.
    pub abs_scale: f64,
    pub stop_at_zero: bool,
}

impl IvpOptions {
    pub fn new(tol: f64, stop_at_zero: bool) -> Self {
        Self {
            tol,
            abs_scale: 1.0,
            stop_at_zero,
        }
    }
}

impl Default for IvpOptions {
    fn default() -> Self {
        Self::new(1e-12, false)
    }
}

#[derive(Debug, Clone)]
struct Segment {
    r0: f64,
    h: f64,
    cont: [State; 5],
}

impl Segment {
    fn eval(&self, r: f64) -> State {
        let th = (r - self.r0) / self.h;
        let th1 = 1.0 - th;
        let c = &self.cont;
        std::array::from_fn(|k| {
            c[0][k] + th * (c[1][k] + th1 * (c[2][k] + th * (c[3][k] + th1 * c[4][k])))
        })
    }

    fn r1(&self) -> f64 {
        self.r0 + self.h
    }
}

/// Piecewise quartic dense output of an integration run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    start: f64,
    initial: State,
    segments: Vec<Segment>,
    end: f64,
}

impl Trajectory {
    pub fn start(&self) -> f64 {
        self.start
    }

    /// Last radius reached (the event radius when integration stopped at a zero).
    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn steps(&self) -> usize {
        self.segments.len()
    }

    /// `(u, u')` at `r`, clamped to the integrated range.
    pub fn eval(&self, r: f64) -> State {
        if self.segments.is_empty() || r <= self.start {
            return self.initial;
        }
        let r = r.min(self.end);
        let idx = self
            .segments
            .partition_point(|s| s.r1() < r)
            .min(self.segments.len() - 1);
        self.segments[idx].eval(r)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r)[0]
    }
}

#[derive(Debug, Clone)]
pub struct IvpResult {
    pub trajectory: Trajectory,
    /// First radius where `u` changes sign, when requested and found.
    pub zero: Option<f64>,
    /// `(u, u')` at the final radius.
    pub end_state: State,
}

fn rhs<G: Fn(f64) -> f64>(dim: usize, g: &G, r: f64, y: &State) -> State {
    [y[1], -((dim - 1) as f64) / r * y[1] - g(y[0])]
}

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    std::array::from_fn(|k| y[k] + h * terms.iter().map(|(a, v)| a * v[k]).sum::<f64>())
}

/// Integrates `u'' + (N-1)/r u' + g(u) = 0` from `(r0, u0, du0)` to `r_end`.
///
/// The field term `g` is the scalar nonlinearity; for the ground-state
/// problem it is `u ↦ u₊^{p-1} − λu`.
pub fn integrate_radial_ivp<G: Fn(f64) -> f64>(
    dim: usize,
    g: G,
    r0: f64,
    u0: f64,
    du0: f64,
    r_end: f64,
    opts: IvpOptions,
) -> Result<IvpResult> {
    if dim < 2 {
        return Err(Error::InvalidParameter(format!("dimension {dim} < 2")));
    }
    if !(r0 > 0.0 && r0 < r_end) || !(opts.tol > 0.0) || !(opts.abs_scale > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < r0 < r_end and tol > 0 (r0 = {r0}, r_end = {r_end}, tol = {})",
            opts.tol
        )));
    }
    let tol = opts.tol;
    let span = r_end - r0;
    let mut r = r0;
    let mut y: State = [u0, du0];
    let mut k1 = rhs(dim, &g, r, &y);
    let mut h = (0.01 * span).min(tol.powf(0.2) * span);
    let mut err_old: f64 = 1e-4;
    let mut segments = Vec::new();
    let mut rejected_last = false;

    for _ in 0..MAX_STEPS {
        if r_end - r <= 1e-15 * r_end {
            break;
        }
        if r + h > r_end {
            h = r_end - r;
        }
        if h < 1e-14 * r.abs().max(1.0) {
            return Err(Error::StepUnderflow { r });
        }

        let k2 = rhs(dim, &g, r + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = rhs(dim, &g, r + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(
            dim,
            &g,
            r + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = rhs(
            dim,
            &g,
            r + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = rhs(
            dim,
            &g,
            r + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = rhs(dim, &g, r + h, &y_new);

        let mut err = 0.0;
        for k in 0..2 {
            let e = h
                * (E1 * k1[k] + E3 * k3[k] + E4 * k4[k] + E5 * k5[k] + E6 * k6[k] + E7 * k7[k]);
            let sk = tol * (opts.abs_scale + y[k].abs().max(y_new[k].abs()));
            err += (e / sk).powi(2);
        }
        let err = (err / 2.0).sqrt();
        if !err.is_finite() {
            if y_new.iter().any(|v| !v.is_finite()) && y.iter().all(|v| v.abs() > 1e100) {
                return Err(Error::Overflow { r });
            }
            h *= 0.2;
            rejected_last = true;
            continue;
        }

        if err <= 1.0 {
            let cont = [
                y,
                [y_new[0] - y[0], y_new[1] - y[1]],
                std::array::from_fn(|k| h * k1[k] - (y_new[k] - y[k])),
                std::array::from_fn(|k| {
                    (y_new[k] - y[k]) - h * k7[k] - (h * k1[k] - (y_new[k] - y[k]))
                }),
                std::array::from_fn(|k| {
                    h * (D1 * k1[k] + D3 * k3[k] + D4 * k4[k] + D5 * k5[k] + D6 * k6[k]
                        + D7 * k7[k])
                }),
            ];
            let seg = Segment { r0: r, h, cont };
            let crossed = opts.stop_at_zero
                && ((y[0] > 0.0 && y_new[0] <= 0.0) || (y[0] < 0.0 && y_new[0] >= 0.0));
            if crossed {
                let zero = locate_zero(&seg, y[0]);
                let end_state = seg.eval(zero);
                segments.push(seg);
                return Ok(IvpResult {
                    trajectory: Trajectory {
                        start: r0,
                        initial: [u0, du0],
                        segments,
                        end: zero,
                    },
                    zero: Some(zero),
                    end_state,
                });
            }
            segments.push(seg);
            r += h;
            y = y_new;
            k1 = k7;
            if y[0].abs() > OVERFLOW || !y[0].is_finite() {
                return Err(Error::Overflow { r });
            }
            let mut fac = SAFETY * err.max(1e-10).powf(-PI_ALPHA) * err_old.powf(PI_BETA);
            fac = fac.clamp(0.2, 5.0);
            if rejected_last {
                fac = fac.min(1.0);
            }
            err_old = err.max(1e-4);
            h *= fac;
            rejected_last = false;
        } else {
            let fac = (SAFETY * err.powf(-0.2)).max(0.2);
            h *= fac;
            rejected_last = true;
        }
    }
    if r_end - r > 1e-15 * r_end {
        return Err(Error::StepUnderflow { r });
    }
    Ok(IvpResult {
        trajectory: Trajectory {
            start: r0,
            initial: [u0, du0],
            segments,
            end: r_end,
        },
        zero: None,
        end_state: y,
    })
}

/// Bisection on the dense output of a step whose endpoints bracket a zero of `u`.
fn locate_zero(seg: &Segment, u_left: f64) -> f64 {
    let (mut lo, mut hi) = (seg.r0, seg.r1());
    let left_sign = u_left.signum();
    for _ in 0..200 {
        if hi - lo <= EVENT_WIDTH {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if seg.eval(mid)[0] * left_sign > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}
