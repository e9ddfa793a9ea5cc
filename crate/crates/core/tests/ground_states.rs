use std::f64::consts::PI;

use annulus_nls::radial::{
    continue_in_lambda, first_dirichlet_eigenvalue, ground_state, shooting_slope, Profile, ProblemSpec, SolverOptions,
};
use proptest::prelude::*;

fn solve(dim: usize, p: f64, lambda: f64) -> Profile {
    ground_state(&ProblemSpec::new(dim, p, lambda).unwrap(), &SolverOptions::default()).unwrap()
}

fn solve_on(dim: usize, p: f64, lambda: f64, nodes: usize) -> Profile {
    let opts = SolverOptions {
        nodes: Some(nodes),
        ..SolverOptions::default()
    };
    ground_state(&ProblemSpec::new(dim, p, lambda).unwrap(), &opts).unwrap()
}

fn value_at(profile: &Profile, r: f64) -> f64 {
    profile.mesh.interpolate(&profile.u, r)
}

#[test]
fn shooting_root_is_independent_of_the_first_trial_slope() {
    for (dim, p, lambda) in [(2, 4.0, 10.0), (3, 3.0, 1.0), (2, 8.0, -5.0)] {
        let spec = ProblemSpec::new(dim, p, lambda).unwrap();
        let slopes: Vec<f64> = [0.05, 1.0, 40.0]
            .iter()
            .map(|&s| {
                let opts = SolverOptions {
                    initial_slope: s,
                    ..SolverOptions::default()
                };
                shooting_slope(&spec, &opts).unwrap().slope
            })
            .collect();
        for s in &slopes[1..] {
            assert!((s - slopes[0]).abs() <= 1e-8 * slopes[0], "{slopes:?}");
        }
    }
}

#[test]
fn ground_state_is_independent_of_the_first_trial_slope() {
    let spec = ProblemSpec::new(2, 6.0, 30.0).unwrap();
    let a = ground_state(&spec, &SolverOptions { initial_slope: 0.1, ..SolverOptions::default() }).unwrap();
    let b = ground_state(&spec, &SolverOptions { initial_slope: 25.0, ..SolverOptions::default() }).unwrap();
    let diff = a.u.iter().zip(&b.u).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(diff <= 1e-8 * a.u_max, "{diff:e}");
}

#[test]
fn shooting_samples_are_monotone_in_the_slope() {
    let spec = ProblemSpec::new(2, 4.0, 20.0).unwrap();
    let root = shooting_slope(&spec, &SolverOptions::default()).unwrap();
    let mut zeros: Vec<(f64, f64)> = root
        .samples
        .iter()
        .filter_map(|&(s, z)| z.map(|z| (s, z)))
        .collect();
    zeros.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert!(zeros.len() >= 2);
    for w in zeros.windows(2) {
        assert!(w[1].1 <= w[0].1 + 1e-12, "first zero increased: {w:?}");
    }
}

#[test]
fn nested_meshes_converge_at_second_order() {
    let probes = [1.25, 1.5, 1.75];
    let coarse = solve_on(2, 4.0, 10.0, 101);
    let mid = solve_on(2, 4.0, 10.0, 201);
    let fine = solve_on(2, 4.0, 10.0, 401);
    for r in probes {
        let (a, b, c) = (value_at(&coarse, r), value_at(&mid, r), value_at(&fine, r));
        let order = ((a - b) / (b - c)).abs().log2();
        assert!(order >= 1.9, "order {order} at r = {r}");
    }
}

#[test]
fn peak_height_at_moderate_frequency_matches_a_fine_mesh_solution() {
    let base = solve(2, 4.0, 100.0);
    let fine = solve_on(2, 4.0, 100.0, 3201);
    assert!((base.u_max - fine.u_max).abs() <= 1e-3 * fine.u_max);
    let soliton_height = (2.0f64 * 100.0).sqrt();
    assert!((base.u_max - soliton_height).abs() <= 0.15 * soliton_height, "{}", base.u_max);
}

#[test]
fn bifurcating_profile_has_the_eigenfunction_shape() {
    // In three dimensions the first Dirichlet mode is sin(π(r−1))/r.
    let l1 = first_dirichlet_eigenvalue(3).unwrap();
    let prof = solve(3, 4.0, -l1 + 1e-3);
    let mode = |r: f64| (PI * (r - 1.0)).sin() / r;
    let mode_max = prof.mesh.nodes().iter().map(|&r| mode(r)).fold(0.0, f64::max);
    let shape_error = prof
        .mesh
        .nodes()
        .iter()
        .zip(&prof.u)
        .fold(0.0f64, |m, (&r, &u)| m.max((u / prof.u_max - mode(r) / mode_max).abs()));
    assert!(shape_error <= 1e-3, "{shape_error:e}");
}

#[test]
fn continuation_reproduces_cold_solves() {
    let start = solve(2, 4.0, 10.0);
    let cold = solve(2, 4.0, 1000.0);
    let warm = continue_in_lambda(&start, 1000.0, &SolverOptions::default()).unwrap();
    assert_eq!(cold.mesh, warm.mesh);
    let diff = cold.u.iter().zip(&warm.u).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(diff <= 1e-6 * cold.u_max, "{diff:e}");
}

#[test]
fn peak_height_shrinks_toward_the_bifurcation_point() {
    let l1 = first_dirichlet_eigenvalue(2).unwrap();
    let heights: Vec<f64> = [1.0, 1e-1, 1e-2, 1e-3]
        .iter()
        .map(|x| solve(2, 6.0, -l1 + x).u_max)
        .collect();
    for w in heights.windows(2) {
        assert!(w[1] < w[0], "{heights:?}");
    }
    // u_max ∝ (λ+λ₁)^{1/(p−2)} as the branch leaves the eigenvalue.
    let ratio = heights[3] / heights[2];
    assert!((ratio - 10f64.powf(-0.25)).abs() <= 0.02 * ratio, "{ratio}");
}

#[test]
fn frequencies_at_or_below_the_eigenvalue_are_rejected() {
    let l1 = first_dirichlet_eigenvalue(2).unwrap();
    let spec = ProblemSpec::new(2, 4.0, -l1 - 0.5).unwrap();
    assert!(ground_state(&spec, &SolverOptions::default()).is_err());
    assert!(ProblemSpec::new(3, 6.0, 1.0).is_err());
    assert!(ProblemSpec::new(2, 2.0, 1.0).is_err());
}

#[test]
fn csv_round_trip_preserves_the_residual() {
    let prof = solve(2, 8.0, 40.0);
    let mut buf = Vec::new();
    prof.write_csv(&mut buf).unwrap();
    let back = Profile::read_csv(prof.spec, buf.as_slice()).unwrap();
    assert!((back.residual_inf - prof.residual_inf).abs() <= 1e-12 * prof.residual_bound().max(1.0));
    assert_eq!(back.u, prof.u);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn converged_profiles_satisfy_the_invariants(
        case in prop_oneof![
            (Just(2usize), 2.2f64..9.0),
            (Just(3usize), 2.2f64..5.8),
        ],
        offset in 0.05f64..1.0,
        log_lambda in -1.0f64..3.0,
        above in any::<bool>(),
    ) {
        let (dim, p) = case;
        let l1 = first_dirichlet_eigenvalue(dim).unwrap();
        let lambda = if above { 10f64.powf(log_lambda) } else { -l1 * (1.0 - offset) };
        let prof = solve(dim, p, lambda);
        prop_assert!(prof.validate().is_ok(), "{:?}", prof.validate());
        prop_assert!(prof.s_slope > 0.0);
    }
}
