use annulus_nls::asymptotics::{limit_diagnostics, predict_mass, profile_ladder, rescale, soliton_moment, SolitonRef};
use annulus_nls::mass_curve::mass;
use annulus_nls::radial::{ground_state, ProblemSpec, SolverOptions};
use annulus_nls::Error;

fn opts() -> SolverOptions {
    SolverOptions::default()
}

#[test]
fn amplitude_ratio_stays_below_one_and_approaches_its_limit() {
    for p in [4.0, 8.0] {
        let profiles = profile_ladder(2, p, &[10.0, 100.0, 1000.0, 10000.0], &opts()).unwrap();
        let ratios: Vec<f64> = profiles.iter().map(|q| q.spec.lambda / q.u_max.powf(p - 2.0)).collect();
        assert!(ratios.iter().all(|&r| r <= 1.0), "{ratios:?}");
        let target = 2.0 / p;
        assert!((ratios[3] - target).abs() <= 0.1 * target, "{ratios:?}");
    }
}

#[test]
fn diagnostics_along_a_ratio_four_ladder() {
    let profiles = profile_ladder(2, 4.0, &[100.0, 400.0, 1600.0, 6400.0], &opts()).unwrap();
    let report = limit_diagnostics(&profiles).unwrap();
    assert!(report.sup_errors_decreasing);
    assert!(report.r_bars_decreasing);
    assert!(report.amplitude_bound_holds);
    assert!(report.sup_errors.windows(2).all(|w| w[1] < w[0]));
    assert_eq!(report.amplitude_target, 0.5);
    assert!((report.fitted_mass_exponent - report.expected_mass_exponent).abs() <= 0.05);
}

#[test]
fn predicted_mass_tracks_the_computed_mass() {
    for (dim, p) in [(2, 4.0), (2, 8.0), (3, 4.0)] {
        let prof = ground_state(&ProblemSpec::new(dim, p, 4000.0).unwrap(), &opts()).unwrap();
        let predicted = predict_mass(p, dim, 4000.0, prof.r_bar);
        let computed = mass(&prof);
        assert!((predicted - computed).abs() <= 0.1 * computed, "N={dim} p={p}: {predicted} vs {computed}");
    }
}

#[test]
fn zeroth_moment_of_the_rescaled_profile_approaches_the_soliton() {
    for p in [4.0, 8.0] {
        let prof = ground_state(&ProblemSpec::new(2, p, 4000.0).unwrap(), &opts()).unwrap();
        let omega = rescale(&prof).unwrap();
        let limit = soliton_moment(p, 0);
        assert!((omega.moment(0) - limit).abs() <= 0.05 * limit);
    }
}

#[test]
fn peak_radius_moves_inward_as_frequency_grows() {
    let profiles = profile_ladder(2, 4.0, &[40.0, 400.0, 4000.0], &opts()).unwrap();
    assert!(profiles[2].r_bar < profiles[1].r_bar && profiles[1].r_bar < profiles[0].r_bar);
}

#[test]
fn rescaled_profile_peaks_at_the_scaled_amplitude() {
    let p = 6.0;
    let lambda = 500.0;
    let prof = ground_state(&ProblemSpec::new(2, p, lambda).unwrap(), &opts()).unwrap();
    let omega = rescale(&prof).unwrap();
    let expected = lambda.powf(1.0 / (2.0 - p)) * prof.u_max;
    assert!((omega.eval(0.0) - expected).abs() <= 1e-12 * expected);
}

#[test]
fn soliton_solves_its_ode() {
    for p in [3.0, 5.0, 7.0] {
        let w = SolitonRef::new(p).unwrap();
        assert!(w.ode_residual(10.0, 1e-3) <= 1e-8);
        assert!((w.peak() - (p / 2.0).powf(1.0 / (p - 2.0))).abs() <= 1e-14);
    }
}

#[test]
fn short_or_low_ladders_are_refused() {
    let low = profile_ladder(2, 4.0, &[10.0, 40.0, 160.0], &opts()).unwrap();
    assert!(matches!(limit_diagnostics(&low), Err(Error::InsufficientRange(_))));
    let short = profile_ladder(2, 4.0, &[1000.0, 4000.0], &opts()).unwrap();
    assert!(matches!(limit_diagnostics(&short), Err(Error::InsufficientRange(_))));
    let prof = ground_state(&ProblemSpec::new(2, 4.0, -3.0).unwrap(), &opts()).unwrap();
    assert!(rescale(&prof).is_err());
}
