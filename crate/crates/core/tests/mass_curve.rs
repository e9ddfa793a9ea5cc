use annulus_nls::mass_curve::{
    classify, mass, mass_slope, solve_mass, trace_curve, MassCurve, Regime, Stability, BIFURCATION_OFFSET,
};
use annulus_nls::numerics::adaptive_simpson;
use annulus_nls::radial::{first_dirichlet_eigenvalue, ground_state, sphere_measure, Profile, ProblemSpec, SolverOptions};
use annulus_nls::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn solve(dim: usize, p: f64, lambda: f64) -> Profile {
    ground_state(&ProblemSpec::new(dim, p, lambda).unwrap(), &opts()).unwrap()
}

fn window(dim: usize, p: f64, points: usize) -> MassCurve {
    let l1 = first_dirichlet_eigenvalue(dim).unwrap();
    trace_curve(dim, p, -l1 + BIFURCATION_OFFSET, 1e4, points, &opts()).unwrap()
}

#[test]
fn mass_matches_an_adaptive_quadrature_of_the_interpolant() {
    let prof = solve(2, 4.0, 30.0);
    let f = |r: f64| {
        let u = prof.mesh.interpolate(&prof.u, r);
        u * u * r
    };
    let oracle = sphere_measure(2) * adaptive_simpson(&f, 1.0, 2.0, 1e-10);
    assert!((mass(&prof) - oracle).abs() <= 1e-3 * oracle);
}

#[test]
fn adjoint_slope_agrees_with_cold_difference_quotients() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let dim = if rng.gen_bool(0.5) { 2 } else { 3 };
        let p = rng.gen_range(2.5..5.5);
        let lambda = rng.gen_range(-5.0..200.0);
        let prof = solve(dim, p, lambda);
        let h = 1e-3 * lambda.abs().max(1.0);
        let cold = (mass(&solve(dim, p, lambda + h)) - mass(&solve(dim, p, lambda - h))) / (2.0 * h);
        let est = mass_slope(&prof, &opts()).unwrap();
        assert!((est.value - cold).abs() <= 0.01 * cold.abs(), "N={dim} p={p} lambda={lambda}: {est:?} vs {cold}");
        assert!(!est.conditioning_warning);
    }
}

#[test]
fn slope_signs_follow_the_exponent() {
    for lambda in [-5.0, 10.0, 1000.0] {
        assert!(mass_slope(&solve(2, 4.0, lambda), &opts()).unwrap().value > 0.0);
    }
    assert!(mass_slope(&solve(2, 8.0, -8.0), &opts()).unwrap().value > 0.0);
    assert!(mass_slope(&solve(2, 8.0, 100.0), &opts()).unwrap().value < 0.0);
}

#[test]
fn subcritical_curve_increases_and_supercritical_curve_folds() {
    let c4 = window(2, 4.0, 24);
    assert!(c4.gaps.is_empty());
    assert!(c4.points.windows(2).all(|w| w[1].mass > w[0].mass));
    assert!(c4.points[0].mass < 1e-2);

    let c8 = window(2, 8.0, 24);
    let masses: Vec<f64> = c8.points.iter().map(|p| p.mass).collect();
    let peak = masses.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert!(peak > 0 && peak < masses.len() - 1);
    assert!(masses[..=peak].windows(2).all(|w| w[1] > w[0]));
    assert!(masses[peak..].windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn refined_grids_reproduce_shared_samples() {
    let coarse = window(2, 4.0, 8);
    let fine = window(2, 4.0, 16);
    for pt in &coarse.points {
        let twin = fine
            .points
            .iter()
            .find(|q| (q.lambda - pt.lambda).abs() <= 1e-12 * pt.lambda.abs().max(1.0))
            .expect("coarse grid nested in fine grid");
        assert!((twin.mass - pt.mass).abs() <= 1e-8 * pt.mass);
    }
    for (pt, prof) in coarse.points.iter().zip(&coarse.profiles) {
        assert_eq!(mass(prof), pt.mass);
    }
}

#[test]
fn stored_slopes_match_secant_directions() {
    let curve = window(2, 8.0, 32);
    let pts = &curve.points;
    for i in 1..pts.len() - 1 {
        let s = pts[i].mass_slope;
        if s.abs() > 1e-4 && pts[i - 1].mass_slope.signum() == s.signum() && pts[i + 1].mass_slope.signum() == s.signum() {
            assert_eq!((pts[i + 1].mass - pts[i].mass).signum(), s.signum(), "at lambda {}", pts[i].lambda);
        }
    }
}

#[test]
fn classification_of_the_three_regimes() {
    let r34 = classify(&window(3, 4.0, 24), &opts()).unwrap();
    assert_eq!(r34.regime, Regime::AllMasses);

    let r26 = classify(&window(2, 6.0, 32), &opts()).unwrap();
    assert_eq!(r26.regime, Regime::CriticalBounded);
    let gn_mass = 3f64.sqrt() * PI * PI;
    assert!(r26.eta_high.unwrap() >= 0.9 * gn_mass);
    assert!(r26.eta_low.unwrap() <= r26.eta_high.unwrap());

    let r28 = classify(&window(2, 8.0, 32), &opts()).unwrap();
    assert_eq!(r28.regime, Regime::SupercriticalFold);
    let (a, b) = r28.lambda_hat_bracket.unwrap();
    let hat = r28.lambda_hat.unwrap();
    assert!(a < hat && hat < b);
    assert_eq!(r28.eta_low, r28.eta_high);
}

#[test]
fn every_mass_is_reached_in_the_subcritical_case() {
    let curve = window(2, 4.0, 32);
    let report = classify(&curve, &opts()).unwrap();
    for c in [1.0, 10.0, 100.0] {
        let roots = solve_mass(&curve, &report, c, &opts()).unwrap();
        assert!(!roots.is_empty(), "c = {c}");
        for r in &roots {
            assert!((r.mass - c).abs() <= 1e-8 * c.max(1.0));
            assert_eq!(r.stability, Stability::Stable);
        }
    }
}

#[test]
fn below_the_fold_roots_come_in_pairs() {
    let curve = window(2, 8.0, 32);
    let report = classify(&curve, &opts()).unwrap();
    let eta = report.eta_low.unwrap();
    let tail_mass = curve.points.last().unwrap().mass;
    for frac in [0.6, 0.8, 0.95] {
        let c = frac * eta;
        if c <= tail_mass {
            continue;
        }
        let roots = solve_mass(&curve, &report, c, &opts()).unwrap();
        assert_eq!(roots.len() % 2, 0, "c = {c}");
        assert!(roots.windows(2).all(|w| w[0].lambda < w[1].lambda));
        assert_eq!(roots[0].stability, Stability::Stable);
        assert_eq!(roots[1].stability, Stability::Unstable);
    }
    assert!(solve_mass(&curve, &report, 1.2 * eta, &opts()).unwrap().is_empty());
}

#[test]
fn short_windows_are_refused() {
    let curve = trace_curve(2, 8.0, -5.0, 20.0, 8, &opts()).unwrap();
    match classify(&curve, &opts()) {
        Err(Error::CurveTooShort(_)) => {}
        other => panic!("expected CurveTooShort, got {other:?}"),
    }
}

#[test]
fn curve_csv_has_the_documented_columns() {
    let curve = window(2, 4.0, 8);
    let mut buf = Vec::new();
    curve.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda,mass,dmass_dlambda,umax,rbar,sslope"));
    assert_eq!(lines.count(), curve.points.len());
}
