//! Radial NLSE `i Φ_t + ΔΦ + |Φ|^{p−2} Φ = 0` on the annulus: a
//! conservative Crank–Nicolson integrator, orbital distance to a standing
//! wave, and perturbation experiments.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{solve_tridiagonal_in_place, Mesh};
use crate::radial::{sphere_measure, Profile, ProblemSpec, RadialOperator};

const INNER_TOL: f64 = 1e-12;
const INNER_MAX_ITERATIONS: usize = 100;
const BLOW_UP_FACTOR: f64 = 1e8;
/// Largest `|dt · λ|` accepted by [`evolve`].
pub const PHASE_RESOLUTION: f64 = 0.1;
pub const DEFAULT_T_FINAL: f64 = 50.0;
const STABLE_GROWTH: f64 = 10.0;
const UNSTABLE_FRACTION: f64 = 0.1;
/// Distances below this fraction of `‖u‖` are treated as scheme error.
const DISTANCE_FLOOR: f64 = 1e-6;
const SINE_MODES: usize = 5;

type C64 = Complex64;

/// Complex field on the mesh nodes; endpoint values are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub mesh: Mesh,
    pub phi: Vec<C64>,
}

impl FieldState {
    pub fn new(t: f64, mesh: Mesh, phi: Vec<C64>) -> Result<Self> {
        let n = mesh.len();
        if phi.len() != n {
            return Err(Error::InvalidParameter(format!("{} values for {n} nodes", phi.len())));
        }
        if phi[0] != C64::new(0.0, 0.0) || phi[n - 1] != C64::new(0.0, 0.0) {
            return Err(Error::InvalidParameter("field must vanish at r = 1 and r = 2".into()));
        }
        if phi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite field values".into()));
        }
        Ok(Self { t, mesh, phi })
    }

    /// The real standing-wave profile at `t = 0`.
    pub fn from_profile(profile: &Profile) -> Self {
        let mut phi: Vec<C64> = profile.u.iter().map(|&u| C64::new(u, 0.0)).collect();
        let n = phi.len();
        phi[0] = C64::new(0.0, 0.0);
        phi[n - 1] = C64::new(0.0, 0.0);
        Self {
            t: 0.0,
            mesh: profile.mesh.clone(),
            phi,
        }
    }

    pub fn max_modulus(&self) -> f64 {
        self.phi.iter().fold(0.0, |a, z| a.max(z.norm()))
    }
}

/// Discrete inner products shared by the integrator and the diagnostics.
///
/// `w` symmetrises the radial operator and `kappa` holds the edge weights
/// `w_i sup_i = w_{i+1} sub_{i+1}`, so that `−Σ w φ̄ Lφ = Σ κ |Δφ|²`.
#[derive(Debug, Clone)]
pub struct DiscreteGeometry {
    pub op: RadialOperator,
    pub w: Vec<f64>,
    pub kappa: Vec<f64>,
    pub measure: f64,
}

impl DiscreteGeometry {
    pub fn new(mesh: &Mesh, dim: usize) -> Self {
        let op = RadialOperator::new(mesh, dim);
        let w = op.symmetrizing_weights(mesh, dim);
        let m = w.len();
        let mut kappa = Vec::with_capacity(m + 1);
        kappa.push(w[0] * op.sub[0]);
        for k in 0..m {
            kappa.push(w[k] * op.sup[k]);
        }
        Self {
            op,
            w,
            kappa,
            measure: sphere_measure(dim),
        }
    }

    fn interior<'a>(&self, phi: &'a [C64]) -> &'a [C64] {
        &phi[1..phi.len() - 1]
    }

    /// `C Σ w |φ|²`.
    pub fn mass(&self, phi: &[C64]) -> f64 {
        let f = self.interior(phi);
        self.measure * f.iter().zip(&self.w).map(|(z, w)| w * z.norm_sqr()).sum::<f64>()
    }

    /// `C Σ w f ḡ`.
    pub fn l2_inner(&self, f: &[C64], g: &[C64]) -> C64 {
        let (f, g) = (self.interior(f), self.interior(g));
        let s: C64 = f.iter().zip(g).zip(&self.w).map(|((a, b), w)| a * b.conj() * *w).sum();
        s * self.measure
    }

    /// `C Σ κ |Δφ|²`.
    pub fn dirichlet(&self, phi: &[C64]) -> f64 {
        self.measure
            * phi
                .windows(2)
                .zip(&self.kappa)
                .map(|(e, k)| k * (e[1] - e[0]).norm_sqr())
                .sum::<f64>()
    }

    /// Radially weighted `H¹₀` inner product.
    pub fn h1_inner(&self, f: &[C64], g: &[C64]) -> C64 {
        let grad: C64 = f
            .windows(2)
            .zip(g.windows(2))
            .zip(&self.kappa)
            .map(|((a, b), k)| (a[1] - a[0]) * (b[1] - b[0]).conj() * *k)
            .sum();
        grad * self.measure + self.l2_inner(f, g)
    }

    pub fn h1_norm(&self, f: &[C64]) -> f64 {
        self.h1_inner(f, f).re.max(0.0).sqrt()
    }

    /// `½ C Σ κ |Δφ|² − (C/p) Σ w |φ|^p`.
    pub fn energy(&self, phi: &[C64], p: f64) -> f64 {
        let f = self.interior(phi);
        let potential: f64 = f.iter().zip(&self.w).map(|(z, w)| w * z.norm().powf(p)).sum();
        0.5 * self.dirichlet(phi) - self.measure * potential / p
    }
}

/// `δ² = ‖Φ‖² + ‖u‖² − 2|⟨Φ, u⟩|` in the weighted `H¹₀` norm, the
/// distance from `Φ` to the orbit `{e^{is} u}`.
pub fn orbital_distance(state: &FieldState, reference: &Profile) -> Result<f64> {
    check_mesh(&state.mesh, &reference.mesh)?;
    let geom = DiscreteGeometry::new(&reference.mesh, reference.spec.dim);
    let u = real_field(reference);
    Ok(distance_with(&geom, &state.phi, &u))
}

fn distance_with(geom: &DiscreteGeometry, phi: &[C64], u: &[C64]) -> f64 {
    let a = geom.h1_inner(phi, phi).re;
    let b = geom.h1_inner(u, u).re;
    let c = geom.h1_inner(phi, u).norm();
    (a + b - 2.0 * c).max(0.0).sqrt()
}

fn real_field(profile: &Profile) -> Vec<C64> {
    FieldState::from_profile(profile).phi
}

fn check_mesh(a: &Mesh, b: &Mesh) -> Result<()> {
    if a.len() != b.len() || a.nodes().iter().zip(b.nodes()).any(|(x, y)| x != y) {
        return Err(Error::InvalidParameter("state and reference meshes differ".into()));
    }
    Ok(())
}

/// One Crank–Nicolson step `(I − iτB(ψ,φ))ψ = (I + iτB(ψ,φ))φ` with
/// `τ = dt/2`, `B = L + q` and `q = (F(|ψ|²) − F(|φ|²))/(|ψ|² − |φ|²)`,
/// `F(ρ) = (2/p) ρ^{p/2}`. `B` is self-adjoint in the `w` product for any
/// real `q`, so the step preserves `Σ w|φ|²`; at the fixed point it also
/// preserves the discrete energy.
#[derive(Debug, Clone)]
pub struct Propagator {
    geom: DiscreteGeometry,
    p: f64,
    dt: f64,
    sub: Vec<C64>,
    diag: Vec<C64>,
    sup: Vec<C64>,
    rhs: Vec<C64>,
    next: Vec<C64>,
    scratch: Vec<C64>,
    q: Vec<f64>,
}

impl Propagator {
    pub fn new(mesh: &Mesh, dim: usize, p: f64, dt: f64) -> Self {
        let geom = DiscreteGeometry::new(mesh, dim);
        let m = geom.w.len();
        let zero = C64::new(0.0, 0.0);
        let tau = C64::new(0.0, 0.5 * dt);
        let sub = geom.op.sub.iter().map(|s| -tau * s).collect();
        let sup = geom.op.sup.iter().map(|s| -tau * s).collect();
        Self {
            geom,
            p,
            dt,
            sub,
            diag: vec![zero; m],
            sup,
            rhs: vec![zero; m],
            next: vec![zero; m],
            scratch: vec![zero; m],
            q: vec![0.0; m],
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn geometry(&self) -> &DiscreteGeometry {
        &self.geom
    }

    fn potential_quotient(&self, a: f64, b: f64) -> f64 {
        let half = 0.5 * self.p;
        if (b - a).abs() <= 1e-6 * (a + b) {
            (0.5 * (a + b)).powf(half - 1.0)
        } else {
            (b.powf(half) - a.powf(half)) / (half * (b - a))
        }
    }

    /// Advances `phi` (all nodes) by one step. Returns the number of inner
    /// iterations, or `None` if the fixed point did not converge.
    pub fn step(&mut self, phi: &mut [C64]) -> Option<usize> {
        let n = phi.len();
        let m = n - 2;
        let old = &phi[1..n - 1];
        let tau = C64::new(0.0, 0.5 * self.dt);
        let op = &self.geom.op;
        let scale = old.iter().fold(0.0f64, |a, z| a.max(z.norm())).max(f64::MIN_POSITIVE);
        self.next.copy_from_slice(old);
        for it in 1..=INNER_MAX_ITERATIONS {
            for k in 0..m {
                self.q[k] = self.potential_quotient(old[k].norm_sqr(), self.next[k].norm_sqr());
            }
            for k in 0..m {
                let left = if k > 0 { old[k - 1] * op.sub[k] } else { C64::new(0.0, 0.0) };
                let right = if k + 1 < m { old[k + 1] * op.sup[k] } else { C64::new(0.0, 0.0) };
                let b_old = left + right + old[k] * (op.diag[k] + self.q[k]);
                self.rhs[k] = old[k] + tau * b_old;
                self.diag[k] = C64::new(1.0, 0.0) - tau * (op.diag[k] + self.q[k]);
            }
            if solve_tridiagonal_in_place(&self.sub, &self.diag, &self.sup, &mut self.rhs, &mut self.scratch).is_err() {
                return None;
            }
            let change = self
                .rhs
                .iter()
                .zip(&self.next)
                .fold(0.0f64, |a, (x, y)| a.max((x - y).norm()));
            std::mem::swap(&mut self.rhs, &mut self.next);
            if !change.is_finite() {
                return None;
            }
            if change <= INNER_TOL * scale {
                phi[1..n - 1].copy_from_slice(&self.next);
                return Some(it);
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationMode {
    PeakBump,
    RandomSmooth,
    MassPreservingRescale,
}

impl PerturbationMode {
    pub const ALL: [PerturbationMode; 3] = [
        PerturbationMode::PeakBump,
        PerturbationMode::RandomSmooth,
        PerturbationMode::MassPreservingRescale,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PerturbationMode::PeakBump => "peak-bump",
            PerturbationMode::RandomSmooth => "random-smooth",
            PerturbationMode::MassPreservingRescale => "mass-preserving-rescale",
        }
    }
}

impl fmt::Display for PerturbationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PerturbationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown perturbation mode {s:?}")))
    }
}

/// One perturbation run around a standing wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub base: ProblemSpec,
    pub epsilon: f64,
    pub mode: PerturbationMode,
    #[serde(rename = "T_final")]
    pub t_final: f64,
    pub dt: f64,
    pub seed: u64,
}

impl ExperimentSpec {
    /// Default horizon and a step of `0.05 / max(1, |λ|)`.
    pub fn new(base: ProblemSpec, epsilon: f64, mode: PerturbationMode, seed: u64) -> Self {
        Self {
            base,
            epsilon,
            mode,
            t_final: DEFAULT_T_FINAL,
            dt: default_dt(base.lambda),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_final >= 10.0 * self.dt) {
            return Err(Error::InvalidParameter(format!(
                "T_final = {} must be at least 10 dt",
                self.t_final
            )));
        }
        if !(0.0..=0.1).contains(&self.epsilon) {
            return Err(Error::InvalidParameter(format!(
                "epsilon = {} must lie in [0, 0.1]",
                self.epsilon
            )));
        }
        Ok(())
    }
}

pub fn default_dt(lambda: f64) -> f64 {
    0.05 / lambda.abs().max(1.0)
}

fn sample_stride(t_final: f64, dt: f64) -> usize {
    ((t_final / (1000.0 * dt.abs())).floor() as usize).max(1)
}

/// Why an evolution ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Termination {
    Completed,
    /// The caller's stop condition fired.
    Stopped { t: f64 },
    BlowUp { t: f64 },
    /// The fixed point failed even after halving `dt`.
    InnerIterationFailure { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    pub mass_series: Vec<f64>,
    pub energy_series: Vec<f64>,
    pub orbital_distance_series: Vec<f64>,
    pub phase_series: Vec<f64>,
    pub termination: Termination,
    pub dt_used: f64,
    pub steps: usize,
    pub max_orbital_distance: f64,
    #[serde(skip)]
    pub final_state: Option<FieldState>,
}

impl EvolutionTrace {
    /// `t,mass,energy,orbital_distance,phase`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,mass,energy,orbital_distance,phase")?;
        for i in 0..self.times.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[i],
                self.mass_series[i],
                self.energy_series[i],
                self.orbital_distance_series[i],
                self.phase_series[i]
            )?;
        }
        Ok(())
    }

    /// Least-squares slope of the unwrapped phase against time.
    pub fn phase_rate(&self) -> f64 {
        let n = self.times.len() as f64;
        let mt = self.times.iter().sum::<f64>() / n;
        let mp = self.phase_series.iter().sum::<f64>() / n;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (t, ph) in self.times.iter().zip(&self.phase_series) {
            sxy += (t - mt) * (ph - mp);
            sxx += (t - mt) * (t - mt);
        }
        sxy / sxx
    }
}

struct Recorder<'a> {
    geom: &'a DiscreteGeometry,
    u: &'a [C64],
    p: f64,
    phase: f64,
    last_arg: f64,
    trace: EvolutionTrace,
}

impl<'a> Recorder<'a> {
    fn observe(&mut self, phi: &[C64]) -> f64 {
        let arg = self.geom.l2_inner(phi, self.u).arg();
        let mut d = arg - self.last_arg;
        d -= 2.0 * PI * (d / (2.0 * PI)).round();
        self.phase += d;
        self.last_arg = arg;
        let delta = distance_with(self.geom, phi, self.u);
        self.trace.max_orbital_distance = self.trace.max_orbital_distance.max(delta);
        delta
    }

    fn record(&mut self, t: f64, phi: &[C64], delta: f64) {
        self.trace.times.push(t);
        self.trace.mass_series.push(self.geom.mass(phi));
        self.trace.energy_series.push(self.geom.energy(phi, self.p));
        self.trace.orbital_distance_series.push(delta);
        self.trace.phase_series.push(self.phase);
    }
}

/// Integrates from `initial` to `initial.t + t_final` with step `dt` (which
/// may be negative), sampling every `max(1, ⌊T/(1000|dt|)⌋)` steps.
/// `stop(t, δ)` is checked after every step. Blow-up and repeated
/// fixed-point failure end the run with a partial trace.
pub fn evolve_with<S: FnMut(f64, f64) -> bool>(
    initial: &FieldState,
    reference: &Profile,
    dt: f64,
    t_final: f64,
    mut stop: S,
) -> Result<EvolutionTrace> {
    check_mesh(&initial.mesh, &reference.mesh)?;
    if !(dt != 0.0 && dt.is_finite()) || !(t_final > 0.0) {
        return Err(Error::InvalidParameter("need nonzero dt and positive T".into()));
    }
    let lambda = reference.spec.lambda;
    if (dt * lambda).abs() > PHASE_RESOLUTION {
        return Err(Error::InvalidParameter(format!(
            "|dt| = {} does not resolve the phase rate {lambda}",
            dt.abs()
        )));
    }
    let (dim, p) = (reference.spec.dim, reference.spec.p);
    let mut prop = Propagator::new(&initial.mesh, dim, p, dt);
    let geom = prop.geom.clone();
    let u = real_field(reference);
    let blow_up = BLOW_UP_FACTOR * reference.u_max.max(initial.max_modulus());
    let mut phi = initial.phi.clone();
    let mut rec = Recorder {
        geom: &geom,
        u: &u,
        p,
        phase: 0.0,
        last_arg: 0.0,
        trace: EvolutionTrace {
            times: Vec::new(),
            mass_series: Vec::new(),
            energy_series: Vec::new(),
            orbital_distance_series: Vec::new(),
            phase_series: Vec::new(),
            termination: Termination::Completed,
            dt_used: dt,
            steps: 0,
            max_orbital_distance: 0.0,
            final_state: None,
        },
    };
    rec.last_arg = geom.l2_inner(&phi, &u).arg();
    rec.phase = rec.last_arg;
    let delta0 = rec.observe(&phi);
    rec.record(initial.t, &phi, delta0);

    let mut step_dt = dt;
    let mut total = (t_final / dt.abs()).round() as usize;
    let mut stride = sample_stride(t_final, dt);
    let mut halved = false;
    let (mut t_base, mut k) = (initial.t, 0usize);
    let mut backup = phi.clone();
    while k < total {
        backup.copy_from_slice(&phi);
        if prop.step(&mut phi).is_none() {
            phi.copy_from_slice(&backup);
            let t_now = t_base + k as f64 * step_dt;
            if halved {
                rec.trace.termination = Termination::InnerIterationFailure { t: t_now };
                break;
            }
            halved = true;
            t_base = t_now;
            step_dt *= 0.5;
            total = 2 * (total - k);
            k = 0;
            stride *= 2;
            prop = Propagator::new(&initial.mesh, dim, p, step_dt);
            rec.trace.dt_used = step_dt;
            continue;
        }
        k += 1;
        rec.trace.steps += 1;
        let t = t_base + k as f64 * step_dt;
        let peak = phi.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        if !(peak <= blow_up) {
            rec.trace.termination = Termination::BlowUp { t };
            let delta = if peak.is_finite() { rec.observe(&phi) } else { f64::INFINITY };
            if delta.is_finite() {
                rec.record(t, &phi, delta);
            }
            rec.trace.max_orbital_distance = f64::INFINITY;
            break;
        }
        let delta = rec.observe(&phi);
        let stopping = stop(t, delta);
        if k % stride == 0 || k == total || stopping {
            rec.record(t, &phi, delta);
        }
        if stopping {
            rec.trace.termination = Termination::Stopped { t };
            break;
        }
    }
    let t_end = *rec.trace.times.last().unwrap();
    let mut trace = rec.trace;
    trace.final_state = Some(FieldState {
        t: t_end,
        mesh: initial.mesh.clone(),
        phi,
    });
    Ok(trace)
}

/// Runs `spec.t_final` with `spec.dt`.
pub fn evolve(initial: &FieldState, spec: &ExperimentSpec, reference: &Profile) -> Result<EvolutionTrace> {
    spec.validate()?;
    evolve_with(initial, reference, spec.dt, spec.t_final, |_, _| false)
}

/// Unit-`H¹` perturbation direction for `mode`.
pub fn perturbation_direction(reference: &Profile, mode: PerturbationMode, seed: u64) -> Vec<C64> {
    let r = reference.mesh.nodes();
    let n = r.len();
    let mut v: Vec<C64> = match mode {
        PerturbationMode::PeakBump => {
            let stiffness = reference.spec.lambda.abs().max(1.0);
            r.iter()
                .map(|&x| {
                    let g = (-0.5 * stiffness * (x - reference.r_bar).powi(2)).exp();
                    C64::new(g * (x - 1.0) * (2.0 - x), 0.0)
                })
                .collect()
        }
        PerturbationMode::RandomSmooth | PerturbationMode::MassPreservingRescale => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let coeffs: Vec<C64> = (1..=SINE_MODES)
                .map(|k| {
                    let a: f64 = rng.gen_range(-1.0..1.0);
                    let b: f64 = rng.gen_range(-1.0..1.0);
                    C64::new(a, b) / k as f64
                })
                .collect();
            r.iter()
                .map(|&x| {
                    coeffs
                        .iter()
                        .enumerate()
                        .map(|(k, c)| c * ((k + 1) as f64 * PI * (x - 1.0)).sin())
                        .sum()
                })
                .collect()
        }
    };
    v[0] = C64::new(0.0, 0.0);
    v[n - 1] = C64::new(0.0, 0.0);
    let geom = DiscreteGeometry::new(&reference.mesh, reference.spec.dim);
    let norm = geom.h1_norm(&v);
    v.iter_mut().for_each(|z| *z /= norm);
    v
}

/// `u + ε‖u‖_{H¹} v`, rescaled to the mass of `u` in the mass-preserving mode.
pub fn perturbed_state(reference: &Profile, spec: &ExperimentSpec) -> Result<FieldState> {
    let geom = DiscreteGeometry::new(&reference.mesh, reference.spec.dim);
    let u = real_field(reference);
    let size = spec.epsilon * geom.h1_norm(&u);
    let v = perturbation_direction(reference, spec.mode, spec.seed);
    let mut phi: Vec<C64> = u.iter().zip(&v).map(|(a, b)| a + b * size).collect();
    if spec.mode == PerturbationMode::MassPreservingRescale {
        let factor = (geom.mass(&u) / geom.mass(&phi)).sqrt();
        phi.iter_mut().for_each(|z| *z *= factor);
    }
    FieldState::new(0.0, reference.mesh.clone(), phi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    StableConsistent,
    InstabilityDetected,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub spec: ExperimentSpec,
    pub verdict: Verdict,
    pub initial_distance: f64,
    pub max_distance: f64,
    pub reference_norm: f64,
    /// Time at which the instability threshold was crossed or blow-up occurred.
    pub detection_time: Option<f64>,
    pub trace: EvolutionTrace,
}

/// Perturbs the standing wave and integrates until `T_final`, stopping
/// early once `δ(t) ≥ 0.1‖u‖`. Stable-consistent when
/// `max δ ≤ 10 δ(0)` (or below the scheme-error floor `1e−6‖u‖`).
pub fn stability_experiment(spec: &ExperimentSpec, reference: &Profile) -> Result<ExperimentOutcome> {
    spec.validate()?;
    if spec.base.dim != reference.spec.dim || spec.base.p != reference.spec.p {
        return Err(Error::InvalidParameter("experiment and reference disagree on (N, p)".into()));
    }
    let initial = perturbed_state(reference, spec)?;
    let geom = DiscreteGeometry::new(&reference.mesh, reference.spec.dim);
    let norm = geom.h1_norm(&real_field(reference));
    let initial_distance = distance_with(&geom, &initial.phi, &real_field(reference));
    let threshold = UNSTABLE_FRACTION * norm;
    let trace = evolve_with(&initial, reference, spec.dt, spec.t_final, |_, d| d >= threshold)?;
    let (verdict, detection_time) = match trace.termination {
        Termination::BlowUp { t } | Termination::Stopped { t } => (Verdict::InstabilityDetected, Some(t)),
        Termination::InnerIterationFailure { .. } => (Verdict::Inconclusive, None),
        Termination::Completed => {
            let bound = (STABLE_GROWTH * initial_distance).max(DISTANCE_FLOOR * norm);
            if trace.max_orbital_distance <= bound {
                (Verdict::StableConsistent, None)
            } else {
                (Verdict::Inconclusive, None)
            }
        }
    };
    Ok(ExperimentOutcome {
        spec: *spec,
        verdict,
        initial_distance,
        max_distance: trace.max_orbital_distance,
        reference_norm: norm,
        detection_time,
        trace,
    })
}
