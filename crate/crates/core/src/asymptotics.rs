//! Large-frequency behaviour: the limit soliton `W`, the blow-up rescaling
//! around the peak, and the mass expansion built from soliton moments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mass_curve::mass;
use crate::numerics::{adaptive_simpson, fit_powerlaw, quad_weighted};
use crate::radial::{continue_in_lambda, ground_state, sphere_measure, Profile, ProblemSpec, SolverOptions};

/// Half-width of the comparison window in rescaled units.
pub const WINDOW: f64 = 5.0;
const WINDOW_STEP: f64 = 1e-3;
const MOMENT_TOL: f64 = 1e-13;

/// `W(r) = ((p/2)·sech²((p−2)r/2))^{1/(p−2)}`, the positive decaying
/// solution of `−W'' + W = W^{p−1}` on the line.
pub fn soliton_eval(p: f64, r: f64) -> f64 {
    let a = 0.5 * (p - 2.0);
    let sech = 1.0 / (a * r).cosh();
    (0.5 * p * sech * sech).powf(1.0 / (p - 2.0))
}

/// `∫ W² r^k dr` over the line.
pub fn soliton_moment(p: f64, k: u32) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    // W² ≤ (2p)^{2/(p−2)} e^{−2|r|}; grow R until the tail bound is negligible.
    let amp = (2.0 * p).powf(2.0 / (p - 2.0));
    let kf = k as f64;
    let mut cutoff = 10.0f64.max(kf + 1.0);
    while amp * cutoff.powf(kf) * (-2.0 * cutoff).exp() / (2.0 - kf / cutoff) >= 1e-13 {
        cutoff += 2.0;
    }
    let f = |r: f64| {
        let w = soliton_eval(p, r);
        w * w * r.powi(k as i32)
    };
    2.0 * adaptive_simpson(&f, 0.0, cutoff, MOMENT_TOL)
}

/// The limit soliton for a fixed exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonRef {
    pub p: f64,
}

impl SolitonRef {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 2.0) {
            return Err(Error::InvalidParameter(format!("p = {p} must exceed 2")));
        }
        Ok(Self { p })
    }

    pub fn eval(&self, r: f64) -> f64 {
        soliton_eval(self.p, r)
    }

    pub fn peak(&self) -> f64 {
        (0.5 * self.p).powf(1.0 / (self.p - 2.0))
    }

    pub fn moment(&self, k: u32) -> f64 {
        soliton_moment(self.p, k)
    }

    /// Max of `|−W'' + W − W^{p−1}|` on `[−half_width, half_width]`, with
    /// `W''` from the fourth-order five-point stencil of step `h`.
    pub fn ode_residual(&self, half_width: f64, h: f64) -> f64 {
        let n = (2.0 * half_width / h).round() as i64;
        (1..n)
            .map(|i| {
                let r = -half_width + i as f64 * h;
                let w = self.eval(r);
                let near = self.eval(r - h) + self.eval(r + h);
                let far = self.eval(r - 2.0 * h) + self.eval(r + 2.0 * h);
                let w2 = (16.0 * near - far - 30.0 * w) / (12.0 * h * h);
                (-w2 + w - w.powf(self.p - 1.0)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `ω(s) = λ^{1/(2−p)} u(s/√λ + r̄)`, extended by zero off the annulus.
#[derive(Debug, Clone)]
pub struct Rescaled<'a> {
    profile: &'a Profile,
    amplitude: f64,
    sqrt_lambda: f64,
}

impl<'a> Rescaled<'a> {
    pub fn eval(&self, s: f64) -> f64 {
        let r = s / self.sqrt_lambda + self.profile.r_bar;
        self.amplitude * self.profile.mesh.interpolate(&self.profile.u, r)
    }

    /// Rescaled abscissae of the mesh nodes, spanning `(√λ(1−r̄), √λ(2−r̄))`.
    pub fn abscissae(&self) -> Vec<f64> {
        self.profile
            .mesh
            .nodes()
            .iter()
            .map(|r| self.sqrt_lambda * (r - self.profile.r_bar))
            .collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.profile.u.iter().map(|u| self.amplitude * u).collect()
    }

    /// `∫ ω² s^k ds` by Simpson on the underlying mesh.
    pub fn moment(&self, k: u32) -> f64 {
        let s = self.abscissae();
        let integrand: Vec<f64> = self
            .profile
            .u
            .iter()
            .zip(&s)
            .map(|(u, s)| u * u * s.powi(k as i32))
            .collect();
        self.sqrt_lambda * self.amplitude * self.amplitude * quad_weighted(&self.profile.mesh, &integrand, 0)
    }

    /// `sup_{|s| ≤ 5} |ω − W|` sampled at spacing 1e−3.
    pub fn sup_error(&self, soliton: &SolitonRef) -> f64 {
        let n = (2.0 * WINDOW / WINDOW_STEP).round() as i64;
        (0..=n)
            .map(|i| {
                let s = -WINDOW + i as f64 * WINDOW_STEP;
                (self.eval(s) - soliton.eval(s)).abs()
            })
            .fold(0.0, f64::max)
    }
}

pub fn rescale(profile: &Profile) -> Result<Rescaled<'_>> {
    let lambda = profile.spec.lambda;
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("rescaling needs lambda > 0, got {lambda}")));
    }
    Ok(Rescaled {
        profile,
        amplitude: lambda.powf(1.0 / (2.0 - profile.spec.p)),
        sqrt_lambda: lambda.sqrt(),
    })
}

/// Diagnostics of the rescaled profiles along an increasing λ ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaleReport {
    pub lambdas: Vec<f64>,
    pub sup_errors: Vec<f64>,
    /// `λ / u_max^{p−2}`.
    pub amplitude_ratios: Vec<f64>,
    pub r_bars: Vec<f64>,
    /// `moment_errors[i][k] = |∫ω² s^k − ∫W² s^k|` for `k = 0..N−1`.
    pub moment_errors: Vec<Vec<f64>>,
    pub soliton_moments: Vec<f64>,
    pub masses: Vec<f64>,
    pub predicted_masses: Vec<f64>,
    pub fitted_mass_exponent: f64,
    pub expected_mass_exponent: f64,
    pub amplitude_target: f64,
    pub sup_errors_decreasing: bool,
    pub r_bars_decreasing: bool,
    /// `λ / u_max^{p−2} ≤ 1` for every sampled `λ ≥ 10`.
    pub amplitude_bound_holds: bool,
}

/// Needs at least three profiles of one `(N, p)`, increasing in λ, with
/// the largest λ at least 10³.
pub fn limit_diagnostics(profiles: &[Profile]) -> Result<RescaleReport> {
    if profiles.len() < 3 {
        return Err(Error::InsufficientRange(format!("{} profiles, need 3", profiles.len())));
    }
    let (dim, p) = (profiles[0].spec.dim, profiles[0].spec.p);
    if profiles.iter().any(|pr| pr.spec.dim != dim || pr.spec.p != p) {
        return Err(Error::InvalidParameter("profiles mix different (N, p)".into()));
    }
    if profiles.windows(2).any(|w| !(w[1].spec.lambda > w[0].spec.lambda)) {
        return Err(Error::InsufficientRange("lambdas must increase".into()));
    }
    let last = profiles.last().unwrap().spec.lambda;
    if last < 1e3 {
        return Err(Error::InsufficientRange(format!("largest lambda {last} < 1e3")));
    }
    let soliton = SolitonRef::new(p)?;
    let soliton_moments: Vec<f64> = (0..dim as u32).map(|k| soliton.moment(k)).collect();
    let mut report = RescaleReport {
        lambdas: Vec::new(),
        sup_errors: Vec::new(),
        amplitude_ratios: Vec::new(),
        r_bars: Vec::new(),
        moment_errors: Vec::new(),
        soliton_moments: soliton_moments.clone(),
        masses: Vec::new(),
        predicted_masses: Vec::new(),
        fitted_mass_exponent: f64::NAN,
        expected_mass_exponent: 2.0 / (p - 2.0) - 0.5,
        amplitude_target: 2.0 / p,
        sup_errors_decreasing: true,
        r_bars_decreasing: true,
        amplitude_bound_holds: true,
    };
    for pr in profiles {
        let lambda = pr.spec.lambda;
        let omega = rescale(pr)?;
        report.lambdas.push(lambda);
        report.sup_errors.push(omega.sup_error(&soliton));
        report.amplitude_ratios.push(lambda / pr.u_max.powf(p - 2.0));
        report.r_bars.push(pr.r_bar);
        report.moment_errors.push(
            soliton_moments
                .iter()
                .enumerate()
                .map(|(k, m)| (omega.moment(k as u32) - m).abs())
                .collect(),
        );
        report.masses.push(mass(pr));
        report.predicted_masses.push(predict_mass(p, dim, lambda, pr.r_bar));
    }
    let fit: Vec<(f64, f64)> = report.lambdas.iter().copied().zip(report.masses.iter().copied()).collect();
    report.fitted_mass_exponent = fit_powerlaw(&fit)?.exponent;
    report.sup_errors_decreasing = report.sup_errors.windows(2).all(|w| w[1] < w[0]);
    report.r_bars_decreasing = report.r_bars.windows(2).all(|w| w[1] < w[0]);
    report.amplitude_bound_holds = report
        .lambdas
        .iter()
        .zip(&report.amplitude_ratios)
        .all(|(l, a)| *l < 10.0 || *a <= 1.0);
    Ok(report)
}

/// Ground states along `lambdas` (increasing), each continued from the last.
pub fn profile_ladder(dim: usize, p: f64, lambdas: &[f64], opts: &SolverOptions) -> Result<Vec<Profile>> {
    let mut out: Vec<Profile> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let next = match out.last() {
            Some(prev) => continue_in_lambda(prev, lambda, opts)?,
            None => ground_state(&ProblemSpec::new(dim, p, lambda)?, opts)?,
        };
        out.push(next);
    }
    Ok(out)
}

/// `C Σ_{k=0}^{N−1} binom(N−1,k) λ^{2/(p−2)−(k+1)/2} r̄^{N−1−k} ∫W² s^k`.
pub fn predict_mass(p: f64, dim: usize, lambda: f64, r_bar: f64) -> f64 {
    let n1 = dim as u32 - 1;
    let mut binom = 1.0;
    let mut total = 0.0;
    for k in 0..=n1 {
        let moment = soliton_moment(p, k);
        if moment != 0.0 {
            total += binom
                * lambda.powf(2.0 / (p - 2.0) - (k as f64 + 1.0) / 2.0)
                * r_bar.powi((n1 - k) as i32)
                * moment;
        }
        binom = binom * (n1 - k) as f64 / (k + 1) as f64;
    }
    sphere_measure(dim) * total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn cubic_soliton_closed_form() {
        assert!((soliton_eval(4.0, 0.0) - 2f64.sqrt()).abs() < 1e-15);
        for r in [-3.0, -0.5, 0.7, 2.0, 6.0] {
            let sech = 1.0 / f64::cosh(r);
            assert!((soliton_eval(4.0, r) - 2f64.sqrt() * sech).abs() < 1e-14);
        }
    }

    #[test]
    fn soliton_solves_its_ode() {
        for p in [3.0, 4.0, 6.0, 8.0] {
            let res = SolitonRef::new(p).unwrap().ode_residual(10.0, 1e-3);
            assert!(res <= 1e-8, "p={p}: {res}");
        }
    }

    #[test]
    fn moments_match_antiderivatives() {
        // ∫ 2 sech² = 4 and ∫ √3 sech(2r) = √3 π / 2.
        assert!((soliton_moment(4.0, 0) - 4.0).abs() < 1e-10);
        assert!((soliton_moment(6.0, 0) - 3f64.sqrt() * PI / 2.0).abs() < 1e-10);
        // ∫ 2 r² sech² r = π²/3.
        assert!((soliton_moment(4.0, 2) - PI * PI / 3.0).abs() < 1e-9);
        assert_eq!(soliton_moment(5.0, 1), 0.0);
        assert_eq!(soliton_moment(3.0, 3), 0.0);
    }

    #[test]
    fn predicted_mass_examples() {
        let d = predict_mass(4.0, 2, 1e4, 1.0);
        assert!((d - 2.0 * PI * 100.0 * 4.0).abs() < 1e-7, "{d}");
        let crit = 3f64.sqrt() * PI * PI;
        for lambda in [1e3, 1e6, 1e9] {
            assert!((predict_mass(6.0, 2, lambda, 1.0) - crit).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn soliton_even_and_decreasing(p in 2.2f64..12.0, r in 0.0f64..15.0, dr in 1e-3f64..1.0) {
            let w = soliton_eval(p, r);
            prop_assert!(w >= 0.0);
            prop_assert_eq!(w, soliton_eval(p, -r));
            prop_assert!(soliton_eval(p, r + dr) <= w);
        }
    }
}
