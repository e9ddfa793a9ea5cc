//! The mass curve `d(λ) = ∫_T u_λ²`, its slope, the existence regime it
//! implies, and normalised solutions `d(λ) = c` with stability tags.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::asymptotics::soliton_moment;
use crate::error::{Error, Result};
use crate::numerics::{find_root, golden_section_max, quad_weighted, RootBracket};
use crate::radial::{
    continue_in_lambda, first_dirichlet_eigenvalue_cached, ground_state, lambda_tangent,
    newton_solve, sphere_measure, Profile, ProblemSpec, SolverOptions,
};

/// Closest approach of a traced curve to the bifurcation point `−λ₁`.
pub const BIFURCATION_OFFSET: f64 = 1e-3;
/// Relative disagreement between the two slope estimates that triggers a warning.
pub const SLOPE_AGREEMENT: f64 = 0.01;
/// A classified curve must start within this distance of `−λ₁` ...
pub const CLASSIFY_MAX_OFFSET: f64 = 0.5;
/// ... and reach at least this λ.
pub const CLASSIFY_MIN_LAMBDA: f64 = 1e3;
const MERGE_DISTANCE: f64 = 1e-6;
const MARGINAL_SLOPE: f64 = 1e-6;

/// `d = C ∫₁² u² r^{N−1} dr` with `C = |S^{N−1}|`.
pub fn mass(profile: &Profile) -> f64 {
    let u2: Vec<f64> = profile.u.iter().map(|v| v * v).collect();
    sphere_measure(profile.spec.dim) * quad_weighted(&profile.mesh, &u2, profile.spec.dim as u32 - 1)
}

fn mass_of(spec: &ProblemSpec, profile_mesh: &crate::numerics::Mesh, u: &[f64]) -> f64 {
    let u2: Vec<f64> = u.iter().map(|v| v * v).collect();
    sphere_measure(spec.dim) * quad_weighted(profile_mesh, &u2, spec.dim as u32 - 1)
}

/// Two independent estimates of `d'(λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    /// `2C ∫ u w r^{N−1}` with `L_λ w = −u`.
    pub value: f64,
    /// Central difference of re-solved masses on the same mesh.
    pub finite_difference: f64,
    pub step: f64,
    pub conditioning_warning: bool,
}

/// `d'(λ)` from the linearised problem, cross-checked by a central difference.
pub fn mass_slope(profile: &Profile, opts: &SolverOptions) -> Result<SlopeEstimate> {
    let spec = profile.spec;
    let mesh = &profile.mesh;
    let tangent = lambda_tangent(&spec, mesh, &profile.u)?;
    let product: Vec<f64> = profile.u.iter().zip(&tangent).map(|(a, b)| a * b).collect();
    let value = 2.0 * sphere_measure(spec.dim) * quad_weighted(mesh, &product, spec.dim as u32 - 1);

    let lambda1 = first_dirichlet_eigenvalue_cached(spec.dim)?;
    let step = (1e-3f64)
        .max(1e-3 * spec.lambda.abs())
        .min(0.5 * (spec.lambda + lambda1));
    let solve_at = |dl: f64| -> Result<f64> {
        let shifted = spec.with_lambda(spec.lambda + dl);
        let guess: Vec<f64> = profile
            .u
            .iter()
            .zip(&tangent)
            .map(|(u, t)| (u + dl * t).max(0.0))
            .collect();
        let u = newton_solve(&shifted, mesh, guess, opts)?;
        Ok(mass_of(&shifted, mesh, &u))
    };
    let finite_difference = (solve_at(step)? - solve_at(-step)?) / (2.0 * step);
    let scale = value.abs().max(finite_difference.abs());
    let conditioning_warning = scale > 0.0 && (value - finite_difference).abs() > SLOPE_AGREEMENT * scale;
    Ok(SlopeEstimate {
        value,
        finite_difference,
        step,
        conditioning_warning,
    })
}

/// One sample of the mass curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub mass: f64,
    pub mass_slope: f64,
    pub u_max: f64,
    pub r_bar: f64,
    pub s_slope: f64,
    #[serde(default)]
    pub slope_warning: bool,
}

impl CurvePoint {
    pub fn from_profile(profile: &Profile, opts: &SolverOptions) -> Result<Self> {
        let slope = mass_slope(profile, opts)?;
        Ok(Self {
            lambda: profile.spec.lambda,
            mass: mass(profile),
            mass_slope: slope.value,
            u_max: profile.u_max,
            r_bar: profile.r_bar,
            s_slope: profile.s_slope,
            slope_warning: slope.conditioning_warning,
        })
    }
}

/// Sampled ground-state branch `λ ↦ d(λ)` for fixed `(N, p)`.
#[derive(Debug, Clone)]
pub struct MassCurve {
    pub dim: usize,
    pub p: f64,
    pub points: Vec<CurvePoint>,
    /// Profiles aligned with `points`, kept as warm starts.
    pub profiles: Vec<Profile>,
    /// Requested λ values where the solver failed.
    pub gaps: Vec<f64>,
    pub lambda1: f64,
}

impl MassCurve {
    pub fn lambda_min(&self) -> f64 {
        self.points.first().map_or(f64::NAN, |p| p.lambda)
    }

    pub fn lambda_max(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.lambda)
    }

    /// Ground state at `lambda`, continued from the closest stored profile.
    pub fn profile_at(&self, lambda: f64, opts: &SolverOptions) -> Result<Profile> {
        let nearest = self
            .profiles
            .iter()
            .min_by(|a, b| {
                (a.spec.lambda - lambda)
                    .abs()
                    .total_cmp(&(b.spec.lambda - lambda).abs())
            })
            .ok_or_else(|| Error::CurveTooShort("empty curve".into()))?;
        continue_in_lambda(nearest, lambda, opts)
    }

    pub fn mass_at(&self, lambda: f64, opts: &SolverOptions) -> Result<f64> {
        Ok(mass(&self.profile_at(lambda, opts)?))
    }

    /// `lambda,mass,dmass_dlambda,umax,rbar,sslope` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "lambda,mass,dmass_dlambda,umax,rbar,sslope")?;
        for pt in &self.points {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                pt.lambda, pt.mass, pt.mass_slope, pt.u_max, pt.r_bar, pt.s_slope
            )?;
        }
        Ok(())
    }
}

/// Sample grid: `n/2` points spaced linearly on `[lo, max(1, λ₁))`, the
/// rest logarithmically on `(max(1, λ₁), hi]`. Doubling `n` refines the
/// grid, so shared λ values are bit-identical.
pub fn curve_grid(lambda1: f64, lo: f64, hi: f64, n_points: usize) -> Vec<f64> {
    let knee = lambda1.max(1.0);
    if lo >= knee {
        return (0..n_points)
            .map(|k| {
                let frac = k as f64 / (n_points - 1) as f64;
                geometric(lo, hi, frac)
            })
            .collect();
    }
    let n_lin = n_points / 2;
    let n_log = n_points - n_lin;
    let mut grid = Vec::with_capacity(n_points);
    for k in 0..n_lin {
        let frac = k as f64 / n_lin as f64;
        grid.push(lo + (knee - lo) * frac);
    }
    for k in 1..=n_log {
        let frac = k as f64 / n_log as f64;
        grid.push(geometric(knee, hi, frac));
    }
    grid
}

fn geometric(a: f64, b: f64, frac: f64) -> f64 {
    if frac == 1.0 {
        b
    } else {
        a * (b / a).powf(frac)
    }
}

/// Traces `d(λ)` on [`curve_grid`] by warm-started continuation. Solver
/// failures are recorded in `gaps` and the trace resumes from the last
/// converged profile.
pub fn trace_curve(
    dim: usize,
    p: f64,
    lambda_lo: f64,
    lambda_hi: f64,
    n_points: usize,
    opts: &SolverOptions,
) -> Result<MassCurve> {
    ProblemSpec::new(dim, p, lambda_lo)?;
    let lambda1 = first_dirichlet_eigenvalue_cached(dim)?;
    if !(lambda_lo > -lambda1) {
        return Err(Error::InvalidParameter(format!(
            "lambda_lo = {lambda_lo} must exceed -lambda_1 = {}",
            -lambda1
        )));
    }
    if !(lambda_hi > lambda_lo) {
        return Err(Error::InvalidParameter("lambda_hi must exceed lambda_lo".into()));
    }
    if n_points < 8 {
        return Err(Error::InvalidParameter(format!("need at least 8 points, got {n_points}")));
    }
    let grid = curve_grid(lambda1, lambda_lo, lambda_hi, n_points);
    let mut points = Vec::with_capacity(grid.len());
    let mut profiles: Vec<Profile> = Vec::with_capacity(grid.len());
    let mut gaps = Vec::new();
    for &lambda in &grid {
        let attempt = match profiles.last() {
            Some(prev) => continue_in_lambda(prev, lambda, opts),
            None => ground_state(&ProblemSpec::new(dim, p, lambda)?, opts),
        };
        match attempt.and_then(|prof| CurvePoint::from_profile(&prof, opts).map(|pt| (prof, pt))) {
            Ok((prof, pt)) => {
                points.push(pt);
                profiles.push(prof);
            }
            Err(_) => gaps.push(lambda),
        }
    }
    if points.is_empty() {
        return Err(Error::ContinuationStalled { last_good: lambda_lo });
    }
    Ok(MassCurve {
        dim,
        p,
        points,
        profiles,
        gaps,
        lambda1,
    })
}

/// Existence regime for prescribed mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Every mass `c > 0` is attained (`N ≥ 3`, or `N = 2` and `p < 6`).
    AllMasses,
    /// `N = 2`, `p = 6`: masses up to a threshold `η₁`.
    CriticalBounded,
    /// `N = 2`, `p > 6`: two solutions below the fold value `η₂`, none above.
    SupercriticalFold,
}

impl Regime {
    pub fn for_exponent(dim: usize, p: f64) -> Self {
        if dim >= 3 || p < 6.0 {
            Regime::AllMasses
        } else if p == 6.0 {
            Regime::CriticalBounded
        } else {
            Regime::SupercriticalFold
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl Stability {
    pub fn from_slope(slope: f64, mass: f64) -> Self {
        if slope.abs() <= MARGINAL_SLOPE * mass.abs() {
            Stability::Marginal
        } else if slope > 0.0 {
            Stability::Stable
        } else {
            Stability::Unstable
        }
    }
}

/// Regime plus the mass threshold observed on the sampled window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExistenceReport {
    pub regime: Regime,
    /// Lower end of the threshold interval (`η₁` or `η₂`).
    pub eta_low: Option<f64>,
    /// Upper end; equals `eta_low` for the refined fold.
    pub eta_high: Option<f64>,
    /// Maximiser `λ̂` of `d` (fold case) or the sampled argmax (critical case).
    pub lambda_hat: Option<f64>,
    /// Neighbouring samples enclosing `λ̂`.
    pub lambda_hat_bracket: Option<(f64, f64)>,
    /// Large-λ limit `C ∫ W²` (critical case).
    pub tail_limit: Option<f64>,
    pub lambda_window: (f64, f64),
}

/// Regime of `(N, p)` with the threshold estimated from `curve`.
pub fn classify(curve: &MassCurve, opts: &SolverOptions) -> Result<ExistenceReport> {
    if curve.points.len() < 3 {
        return Err(Error::CurveTooShort("fewer than 3 points".into()));
    }
    let lo = curve.lambda_min();
    let hi = curve.lambda_max();
    if lo + curve.lambda1 > CLASSIFY_MAX_OFFSET {
        return Err(Error::CurveTooShort(format!(
            "curve starts at lambda = {lo}, more than {CLASSIFY_MAX_OFFSET} above -lambda_1"
        )));
    }
    if hi < CLASSIFY_MIN_LAMBDA {
        return Err(Error::CurveTooShort(format!(
            "curve ends at lambda = {hi} < {CLASSIFY_MIN_LAMBDA}"
        )));
    }
    let regime = Regime::for_exponent(curve.dim, curve.p);
    let (imax, observed) = curve
        .points
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, pt)| if pt.mass > acc.1 { (i, pt.mass) } else { acc });
    let bracket_of = |i: usize| {
        let a = curve.points[i.saturating_sub(1)].lambda;
        let b = curve.points[(i + 1).min(curve.points.len() - 1)].lambda;
        (a, b)
    };
    let mut report = ExistenceReport {
        regime,
        eta_low: None,
        eta_high: None,
        lambda_hat: None,
        lambda_hat_bracket: None,
        tail_limit: None,
        lambda_window: (lo, hi),
    };
    match regime {
        Regime::AllMasses => {}
        Regime::CriticalBounded => {
            let tail = sphere_measure(curve.dim) * soliton_moment(curve.p, 0);
            let last = curve.points.last().unwrap().mass;
            report.eta_low = Some(observed);
            report.eta_high = Some(observed.max(tail) + (last - tail).abs());
            report.tail_limit = Some(tail);
            report.lambda_hat = Some(curve.points[imax].lambda);
            report.lambda_hat_bracket = Some(bracket_of(imax));
        }
        Regime::SupercriticalFold => {
            if imax == 0 || imax == curve.points.len() - 1 {
                return Err(Error::CurveTooShort(
                    "mass maximum sits at the edge of the sampled window".into(),
                ));
            }
            let (a, b) = bracket_of(imax);
            let mut failure = None;
            let (lambda_hat, eta) = golden_section_max(
                |l| match curve.mass_at(l, opts) {
                    Ok(m) => m,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NEG_INFINITY
                    }
                },
                a,
                b,
                1e-7 * (b - a).abs().max(1.0),
            );
            if let Some(e) = failure {
                return Err(e);
            }
            let eta = eta.max(observed);
            report.eta_low = Some(eta);
            report.eta_high = Some(eta);
            report.lambda_hat = Some(lambda_hat);
            report.lambda_hat_bracket = Some((a, b));
        }
    }
    Ok(report)
}

/// A normalised solution: ground state with prescribed mass.
#[derive(Debug, Clone)]
pub struct MassSolution {
    pub lambda: f64,
    pub mass: f64,
    pub mass_slope: f64,
    pub stability: Stability,
    pub profile: Profile,
}

/// Every λ on the sampled window with `d(λ) = c`, refined to
/// `|d − c| ≤ 1e−8 · max(1, c)` and tagged by the sign of `d'`.
/// An empty result is a valid answer (no solution on the window).
pub fn solve_mass(
    curve: &MassCurve,
    report: &ExistenceReport,
    c: f64,
    opts: &SolverOptions,
) -> Result<Vec<MassSolution>> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("target mass {c} must be positive")));
    }
    let mut samples: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.lambda, p.mass)).collect();
    if let (Regime::SupercriticalFold, Some(lh), Some(eta)) =
        (report.regime, report.lambda_hat, report.eta_high)
    {
        samples.push((lh, eta));
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let tol = 1e-8 * c.max(1.0);
    let mut roots: Vec<MassSolution> = Vec::new();
    for w in samples.windows(2) {
        let ((la, da), (lb, db)) = (w[0], w[1]);
        let (fa, fb) = (da - c, db - c);
        if fa == 0.0 {
            roots.push(solution_at(curve, la, opts)?);
            continue;
        }
        if fa * fb >= 0.0 {
            continue;
        }
        let bracket = RootBracket::new(la, lb, fa, fb)?;
        let mut failure = None;
        let lambda = find_root(
            |l| match curve.mass_at(l, opts) {
                Ok(m) => m - c,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            bracket,
            1e-13 * la.abs().max(lb.abs()).max(1.0),
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        let sol = solution_at(curve, lambda, opts)?;
        if (sol.mass - c).abs() > tol {
            return Err(Error::NewtonDivergence {
                iterations: 0,
                residual: (sol.mass - c).abs(),
            });
        }
        roots.push(sol);
    }
    if let Some(last) = samples.last() {
        if last.1 == c && roots.last().is_none_or(|r| r.lambda != last.0) {
            roots.push(solution_at(curve, last.0, opts)?);
        }
    }
    // Merge roots below continuation resolution.
    let mut merged: Vec<MassSolution> = Vec::with_capacity(roots.len());
    for root in roots {
        match merged.last_mut() {
            Some(prev) if (root.lambda - prev.lambda).abs() < MERGE_DISTANCE => {
                prev.stability = Stability::Marginal;
            }
            _ => merged.push(root),
        }
    }
    Ok(merged)
}

fn solution_at(curve: &MassCurve, lambda: f64, opts: &SolverOptions) -> Result<MassSolution> {
    let profile = curve.profile_at(lambda, opts)?;
    let m = mass(&profile);
    let slope = mass_slope(&profile, opts)?.value;
    Ok(MassSolution {
        lambda,
        mass: m,
        mass_slope: slope,
        stability: Stability::from_slope(slope, m),
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Mesh;
    use std::f64::consts::PI;

    #[test]
    fn mass_of_synthetic_profiles() {
        let mesh = Mesh::uniform(401).unwrap();
        let spec = ProblemSpec::new(2, 4.0, 1.0).unwrap();
        let zero = Profile::from_values(spec, mesh.clone(), vec![0.0; 401]).unwrap();
        assert_eq!(mass(&zero), 0.0);
        let one = Profile::from_values(spec, mesh, vec![1.0; 401]).unwrap();
        assert!((mass(&one) - 3.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn regimes() {
        assert_eq!(Regime::for_exponent(3, 4.0), Regime::AllMasses);
        assert_eq!(Regime::for_exponent(2, 5.9), Regime::AllMasses);
        assert_eq!(Regime::for_exponent(2, 6.0), Regime::CriticalBounded);
        assert_eq!(Regime::for_exponent(2, 8.0), Regime::SupercriticalFold);
    }

    #[test]
    fn stability_tags() {
        assert_eq!(Stability::from_slope(1.0, 5.0), Stability::Stable);
        assert_eq!(Stability::from_slope(-1.0, 5.0), Stability::Unstable);
        assert_eq!(Stability::from_slope(1e-9, 5.0), Stability::Marginal);
    }

    #[test]
    fn grid_nests_when_doubled() {
        let l1 = 9.75;
        let g8 = curve_grid(l1, -l1 + 1e-3, 1e3, 8);
        let g16 = curve_grid(l1, -l1 + 1e-3, 1e3, 16);
        assert_eq!(g8.len(), 8);
        assert_eq!(g16.len(), 16);
        for x in &g8 {
            assert!(g16.iter().any(|y| y.to_bits() == x.to_bits()), "{x}");
        }
        assert!(g8.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*g8.last().unwrap(), 1e3);
    }

    #[test]
    fn slope_estimates_agree_away_from_fold() {
        let opts = SolverOptions::default();
        let prof = ground_state(&ProblemSpec::new(2, 4.0, 5.0).unwrap(), &opts).unwrap();
        let s = mass_slope(&prof, &opts).unwrap();
        assert!(!s.conditioning_warning, "{s:?}");
        assert!(s.value > 0.0);
    }
}
