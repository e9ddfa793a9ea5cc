//! Single shooting from the inner sphere: `u(1) = 0`, `u'(1) = s`.

use crate::error::{Error, Result};
use crate::numerics::{find_root, integrate_radial_ivp, IvpOptions, RootBracket, Trajectory};

use super::{ProblemSpec, SolverOptions};

const SLOPE_MIN: f64 = 1e-10;
const SLOPE_MAX: f64 = 1e30;
const MONOTONE_RESOLUTION: f64 = 1e-12;

/// Outcome of one shot. Exactly one of `first_zero` / `end_value` is set.
#[derive(Debug, Clone)]
pub struct ShotResult {
    pub slope: f64,
    /// First zero of `u` in `(1, 2]`.
    pub first_zero: Option<f64>,
    /// `u(2)` when no interior zero was met; `+∞` when `|u|` overflowed.
    pub end_value: Option<f64>,
    /// Dense output, absent after an overflow.
    pub trajectory: Option<Trajectory>,
}

impl ShotResult {
    pub fn overflowed(&self) -> bool {
        self.end_value == Some(f64::INFINITY)
    }

    /// Signed shooting map: `first_zero − 2` (negative) when the shot
    /// crosses zero, otherwise the positive end value (capped at 1).
    pub fn miss(&self) -> f64 {
        match (self.first_zero, self.end_value) {
            (Some(z), _) => z - 2.0,
            (None, Some(v)) => v.min(1.0),
            (None, None) => unreachable!("shot without outcome"),
        }
    }
}

/// Integrates `−(u'' + (N−1)/r u') + λu = u₊^{p−1}` from `u(1) = 0`,
/// `u'(1) = s` and reports the first zero in `(1, 2]` or `u(2)`.
pub fn shoot(spec: &ProblemSpec, s: f64, opts: &SolverOptions) -> Result<ShotResult> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("shooting slope {s} must be >= 0")));
    }
    let (p, lambda) = (spec.p, spec.lambda);
    let g = move |u: f64| u.max(0.0).powf(p - 1.0) - lambda * u;
    let ivp = IvpOptions {
        tol: opts.ode_tol,
        abs_scale: if s > 0.0 { s.min(1.0) } else { 1.0 },
        stop_at_zero: true,
    };
    match integrate_radial_ivp(spec.dim, g, 1.0, 0.0, s, 2.0, ivp) {
        Ok(res) => {
            // A crossing located exactly at r = 2 is the boundary hit itself.
            let (first_zero, end_value) = match res.zero {
                Some(z) => (Some(z), None),
                None => (None, Some(res.end_state[0])),
            };
            Ok(ShotResult {
                slope: s,
                first_zero,
                end_value,
                trajectory: Some(res.trajectory),
            })
        }
        Err(Error::Overflow { .. }) => Ok(ShotResult {
            slope: s,
            first_zero: None,
            end_value: Some(f64::INFINITY),
            trajectory: None,
        }),
        Err(e) => Err(e),
    }
}

/// Ground-state slope located by shooting, with the shot just above it.
#[derive(Debug, Clone)]
pub struct ShootingRoot {
    /// Smallest sampled slope whose shot reaches zero; its first zero lies
    /// within root-finding tolerance of `r = 2`.
    pub slope: f64,
    pub shot: ShotResult,
    /// Every `(s, first_zero)` evaluated, in evaluation order.
    pub samples: Vec<(f64, Option<f64>)>,
}

/// Brackets and solves `first_zero(s) = 2` on the shooting map.
pub fn shooting_slope(spec: &ProblemSpec, opts: &SolverOptions) -> Result<ShootingRoot> {
    let lambda = spec.lambda;
    let mut samples: Vec<(f64, Option<f64>)> = Vec::new();
    let mut best: Option<ShotResult> = None;
    let mut record = |shot: ShotResult, samples: &mut Vec<(f64, Option<f64>)>| {
        samples.push((shot.slope, shot.first_zero));
        if shot.first_zero.is_some() && best.as_ref().is_none_or(|b| shot.slope < b.slope) {
            best = Some(shot.clone());
        }
        shot.miss()
    };

    let start = opts.initial_slope;
    if !(start > 0.0 && start.is_finite()) {
        return Err(Error::InvalidParameter(format!("initial slope {start} must be positive")));
    }
    let first = shoot(spec, start, opts)?;
    let mut f_one = record(first, &mut samples);
    let (lo, hi, f_lo, f_hi);
    if f_one < 0.0 {
        let mut s = start;
        loop {
            let next = s / 4.0;
            if next < SLOPE_MIN {
                return Err(Error::BracketFailure {
                    lambda,
                    reason: "every small-amplitude shot vanishes before r = 2 (lambda <= -lambda_1?)"
                        .into(),
                });
            }
            let f = record(shoot(spec, next, opts)?, &mut samples);
            if f > 0.0 {
                (lo, hi, f_lo, f_hi) = (next, s, f, f_one);
                break;
            }
            s = next;
            f_one = f;
        }
    } else {
        let mut s = start;
        loop {
            let next = s * 4.0;
            if next > SLOPE_MAX {
                return Err(Error::BracketFailure {
                    lambda,
                    reason: "no shot reaches zero before r = 2".into(),
                });
            }
            let f = record(shoot(spec, next, opts)?, &mut samples);
            if f < 0.0 {
                (lo, hi, f_lo, f_hi) = (s, next, f_one, f);
                break;
            }
            s = next;
            f_one = f;
        }
    }

    let bracket = RootBracket::new(lo, hi, f_lo, f_hi)?;
    let mut failure = None;
    find_root(
        |s| match shoot(spec, s, opts) {
            Ok(shot) => record(shot, &mut samples),
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        bracket,
        4.0 * f64::EPSILON * hi,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    check_monotone(&samples)?;
    let shot = best.ok_or_else(|| Error::BracketFailure {
        lambda,
        reason: "root finding produced no crossing shot".into(),
    })?;
    Ok(ShootingRoot {
        slope: shot.slope,
        shot,
        samples,
    })
}

/// Larger slopes must not move the first zero outward, and no crossing
/// shot may sit below a non-crossing one. Slopes closer than
/// `MONOTONE_RESOLUTION` (relative) are not compared: there the map is
/// dominated by rounding amplified through the growing mode.
fn check_monotone(samples: &[(f64, Option<f64>)]) -> Result<()> {
    let mut sorted: Vec<(f64, Option<f64>)> = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (i, &(s_hi, z_hi)) in sorted.iter().enumerate() {
        for &(s_lo, z_lo) in &sorted[..i] {
            if s_hi - s_lo <= MONOTONE_RESOLUTION * s_hi {
                continue;
            }
            let violated = match (z_lo, z_hi) {
                (Some(_), None) => true,
                (Some(a), Some(b)) => b > a + 1e-9,
                _ => false,
            };
            if violated {
                return Err(Error::NonMonotoneShooting { s: s_hi });
            }
        }
    }
    Ok(())
}
