use super::mesh::Mesh;

/// Composite Simpson weights on `mesh`.
///
/// Uniform meshes with an odd number of intervals close with the 3/8 rule on
/// the last three intervals, so the rule stays exact for cubics. Non-uniform
/// meshes use the unequal-spacing Simpson formula pairwise.
pub fn simpson_weights(mesh: &Mesh) -> Vec<f64> {
    let x = mesh.nodes();
    let n = x.len();
    let intervals = n - 1;
    let mut w = vec![0.0; n];
    if let Some(h) = mesh.uniform_step() {
        let simpson_end = if intervals % 2 == 0 { n - 1 } else { n - 4 };
        let mut i = 0;
        while i < simpson_end {
            w[i] += h / 3.0;
            w[i + 1] += 4.0 * h / 3.0;
            w[i + 2] += h / 3.0;
            i += 2;
        }
        if intervals % 2 == 1 {
            let j = n - 4;
            w[j] += 3.0 * h / 8.0;
            w[j + 1] += 9.0 * h / 8.0;
            w[j + 2] += 9.0 * h / 8.0;
            w[j + 3] += 3.0 * h / 8.0;
        }
        return w;
    }
    let pairs_end = if intervals % 2 == 0 { n - 1 } else { n - 2 };
    let mut i = 0;
    while i < pairs_end {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        let s = (h0 + h1) / 6.0;
        w[i] += s * (2.0 - h1 / h0);
        w[i + 1] += s * (h0 + h1) * (h0 + h1) / (h0 * h1);
        w[i + 2] += s * (2.0 - h0 / h1);
        i += 2;
    }
    if intervals % 2 == 1 {
        let h0 = x[n - 2] - x[n - 3];
        let h1 = x[n - 1] - x[n - 2];
        w[n - 1] += (2.0 * h1 * h1 + 3.0 * h0 * h1) / (6.0 * (h0 + h1));
        w[n - 2] += (h1 * h1 + 3.0 * h0 * h1) / (6.0 * h0);
        w[n - 3] -= h1 * h1 * h1 / (6.0 * h0 * (h0 + h1));
    }
    w
}

/// `∫₁² f(r) r^k dr` from nodal values of `f`.
pub fn quad_weighted(mesh: &Mesh, values: &[f64], weight_exponent: u32) -> f64 {
    debug_assert_eq!(values.len(), mesh.len());
    simpson_weights(mesh)
        .iter()
        .zip(mesh.nodes())
        .zip(values)
        .map(|((w, r), f)| w * f * r.powi(weight_exponent as i32))
        .sum()
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_and_constant() {
        let m = Mesh::uniform(101).unwrap();
        assert_eq!(quad_weighted(&m, &vec![0.0; 101], 3), 0.0);
        assert!((quad_weighted(&m, &vec![1.0; 101], 1) - 1.5).abs() < 1e-14);
    }

    #[test]
    fn exact_through_cubics_even_and_odd_interval_counts() {
        for n in [16, 17, 400, 401] {
            let m = Mesh::uniform(n).unwrap();
            let f: Vec<f64> = m.nodes().iter().map(|&r| 3.0 * r * r * r - r + 2.0).collect();
            // ∫₁² (3r³ − r + 2) dr = 45/4 − 3/2 + 2
            let exact = 45.0 / 4.0 - 1.5 + 2.0;
            assert!((quad_weighted(&m, &f, 0) - exact).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn quartic_integrand_converges_fourth_order() {
        // f = r², weight r² → ∫ r⁴ = 31/5
        let err = |n: usize| {
            let m = Mesh::uniform(n).unwrap();
            let f: Vec<f64> = m.nodes().iter().map(|&r| r * r).collect();
            (quad_weighted(&m, &f, 2) - 6.2).abs()
        };
        assert!(err(401) < 1e-10);
        let ratio = err(21) / err(41);
        assert!(ratio > 14.0, "ratio {ratio}");
    }

    #[test]
    fn nonuniform_rule_is_exact_for_quadratics() {
        let nodes: Vec<f64> = (0..40).map(|i| 1.0 + (i as f64 / 39.0).powf(1.3)).collect();
        let m = Mesh::from_nodes(nodes).unwrap();
        let f: Vec<f64> = m.nodes().iter().map(|&r| r * r - 3.0).collect();
        assert!((quad_weighted(&m, &f, 0) - (7.0 / 3.0 - 3.0)).abs() < 1e-13);
    }

    #[test]
    fn adaptive_simpson_gaussian() {
        let v = adaptive_simpson(&|x: f64| (-x * x).exp(), -10.0, 10.0, 1e-13);
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-11);
    }
}
