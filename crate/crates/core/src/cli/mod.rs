//! Command-line front end: flag parsing, command dispatch, reports and plots.

pub mod output;
pub mod svg;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::asymptotics::{limit_diagnostics, profile_ladder, rescale, SolitonRef};
use crate::dynamics::{default_dt, stability_experiment, ExperimentSpec, PerturbationMode, DEFAULT_T_FINAL};
use crate::error::{Error, Result};
use crate::mass_curve::{
    classify, mass, mass_slope, solve_mass, trace_curve, MassCurve, Stability, BIFURCATION_OFFSET,
};
use crate::radial::{first_dirichlet_eigenvalue_cached, ground_state, ProblemSpec, SolverOptions};
use output::{write_outputs, Artifact, Provenance, ReportDocument, Tolerances};
use svg::{LinePlot, Series};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_NO_SOLUTION: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_INVALID: i32 = 4;

/// Environment variable capping batch parallelism.
pub const THREADS_ENV: &str = "ANNULUS_NLS_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Eigen,
    Ground,
    Curve,
    Solve,
    Asymptotics,
    Evolve,
    Batch,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Eigen => "eigen",
            Command::Ground => "ground",
            Command::Curve => "curve",
            Command::Solve => "solve",
            Command::Asymptotics => "asymptotics",
            Command::Evolve => "evolve",
            Command::Batch => "batch",
        }
    }
}

/// Ground states, mass curves and standing-wave dynamics for
/// `−Δu + λu = u^{p−1}` on the annulus `1 < |x| < 2`.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[command(name = "annulus-nls", version)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// Space dimension.
    #[arg(long = "N", default_value_t = 2)]
    #[serde(rename = "N", default = "default_dim")]
    pub dim: usize,
    /// Nonlinearity exponent.
    #[arg(long)]
    #[serde(default)]
    pub p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default)]
    pub lambda: Option<f64>,
    #[arg(long = "lambda-min", allow_hyphen_values = true)]
    #[serde(default)]
    pub lambda_min: Option<f64>,
    #[arg(long = "lambda-max", allow_hyphen_values = true)]
    #[serde(default)]
    pub lambda_max: Option<f64>,
    /// Samples on the mass curve or the asymptotic ladder.
    #[arg(long)]
    #[serde(default)]
    pub points: Option<usize>,
    /// Target mass for `solve`.
    #[arg(long)]
    #[serde(default)]
    pub mass: Option<f64>,
    /// Perturbation size for `evolve`.
    #[arg(long, default_value_t = 1e-3)]
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[arg(long = "T")]
    #[serde(rename = "T", default)]
    pub t_final: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
    #[arg(long, default_value = "peak-bump")]
    #[serde(default = "default_mode")]
    pub mode: String,
    /// Output directory; nothing is written when absent.
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Newton tolerance, relative to `max(1, u_max^{p−1})`.
    #[arg(long, default_value_t = 1e-10)]
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Fixed mesh size instead of the λ-dependent default.
    #[arg(long)]
    #[serde(default)]
    pub nodes: Option<usize>,
    /// JSON array of configurations for `batch`.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

fn default_dim() -> usize {
    2
}
fn default_eps() -> f64 {
    1e-3
}
fn default_mode() -> String {
    PerturbationMode::PeakBump.to_string()
}
fn default_tol() -> f64 {
    1e-10
}

impl RunConfig {
    pub fn solver_options(&self) -> Result<SolverOptions> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol = {} must be positive", self.tol)));
        }
        if let Some(n) = self.nodes {
            if n < 16 {
                return Err(Error::InvalidParameter(format!("nodes = {n} is below 16")));
            }
        }
        Ok(SolverOptions {
            newton_tol: self.tol,
            nodes: self.nodes,
            ..SolverOptions::default()
        })
    }

    fn exponent(&self) -> Result<f64> {
        self.p
            .ok_or_else(|| Error::InvalidParameter(format!("{} needs --p", self.command.name())))
    }

    fn frequency(&self) -> Result<f64> {
        self.lambda
            .ok_or_else(|| Error::InvalidParameter(format!("{} needs --lambda", self.command.name())))
    }

    fn checked_spec(&self) -> Result<ProblemSpec> {
        let spec = ProblemSpec::new(self.dim, self.exponent()?, self.frequency()?)?;
        spec.check_frequency()?;
        Ok(spec)
    }

    fn tolerances(&self, opts: &SolverOptions) -> Tolerances {
        Tolerances {
            ode_tol: opts.ode_tol,
            newton_tol: opts.newton_tol,
            max_newton_iterations: opts.max_newton_iterations,
            nodes: opts.nodes,
        }
    }
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParameter(_)
        | Error::CurveTooShort(_)
        | Error::InsufficientRange(_)
        | Error::Parse(_)
        | Error::Json(_) => EXIT_INVALID,
        Error::Io { .. } => EXIT_FAILURE,
        _ => EXIT_NOT_CONVERGED,
    }
}

/// Result of one command: the report, the files to write, a one-line
/// summary for stdout and the exit code.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub document: ReportDocument,
    pub artifacts: Vec<Artifact>,
    pub summary: String,
    pub exit_code: i32,
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if config.command == Command::Batch {
        return match run_batch(&config) {
            Ok(code) => code,
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        };
    }
    match execute(&config) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs one configuration and writes its outputs when `--out` is set.
pub fn execute(config: &RunConfig) -> Result<RunOutcome> {
    let outcome = run(config)?;
    if let Some(dir) = &config.out {
        let mut files = outcome.artifacts.clone();
        files.push(Artifact::new("report.json", outcome.document.to_json()?));
        write_outputs(dir, &files)?;
    }
    Ok(outcome)
}

/// Computes a command's results without touching the filesystem.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let opts = config.solver_options()?;
    let mut artifacts = Vec::new();
    let mut exit = EXIT_OK;
    let (value, summary) = match config.command {
        Command::Eigen => {
            let l1 = first_dirichlet_eigenvalue_cached(config.dim)?;
            (json!({ "N": config.dim, "lambda1": l1 }), format!("{l1:.7}"))
        }
        Command::Ground => run_ground(config, &opts, &mut artifacts)?,
        Command::Curve => run_curve(config, &opts, &mut artifacts)?,
        Command::Solve => {
            let (value, summary, found) = run_solve(config, &opts, &mut artifacts)?;
            if found == 0 {
                exit = EXIT_NO_SOLUTION;
            }
            (value, summary)
        }
        Command::Asymptotics => run_asymptotics(config, &opts, &mut artifacts)?,
        Command::Evolve => {
            let (value, summary) = run_evolve(config, &opts, &mut artifacts)?;
            if value["termination"]["kind"] == "inner-iteration-failure" {
                exit = EXIT_NOT_CONVERGED;
            }
            (value, summary)
        }
        Command::Batch => {
            return Err(Error::InvalidParameter("batch runs cannot nest".into()));
        }
    };
    let mut results = BTreeMap::new();
    results.insert(config.command.name().to_string(), value);
    let mut echo = config.clone();
    echo.file = None;
    let document = ReportDocument {
        provenance: Provenance {
            program: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: echo,
            tolerances: config.tolerances(&opts),
        },
        results,
    };
    Ok(RunOutcome {
        document,
        artifacts,
        summary,
        exit_code: exit,
    })
}

fn csv_bytes<F>(write: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
{
    let mut buf = Vec::new();
    write(&mut buf).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(buf)
}

fn run_ground(config: &RunConfig, opts: &SolverOptions, artifacts: &mut Vec<Artifact>) -> Result<(Value, String)> {
    let spec = config.checked_spec()?;
    let prof = ground_state(&spec, opts)?;
    let slope = mass_slope(&prof, opts)?;
    artifacts.push(Artifact::new("profile.csv", csv_bytes(|b| prof.write_csv(b))?));
    let mut plot = LinePlot::new(format!("ground state N={} p={} lambda={}", spec.dim, spec.p, spec.lambda), "r", "u");
    plot.series.push(Series::line(
        "u",
        "#1f77b4",
        prof.mesh.nodes().iter().copied().zip(prof.u.iter().copied()).collect(),
    ));
    artifacts.push(Artifact::new("profile.svg", plot.render()));
    let d = mass(&prof);
    let value = json!({
        "spec": spec,
        "nodes": prof.u.len(),
        "u_max": prof.u_max,
        "r_bar": prof.r_bar,
        "s_slope": prof.s_slope,
        "residual_inf": prof.residual_inf,
        "mass": d,
        "mass_slope": slope,
    });
    Ok((value, format!("u_max = {:.10e}, r_bar = {:.10}, mass = {d:.10e}", prof.u_max, prof.r_bar)))
}

fn curve_for(config: &RunConfig, opts: &SolverOptions) -> Result<MassCurve> {
    let p = config.exponent()?;
    ProblemSpec::new(config.dim, p, 0.0)?;
    let l1 = first_dirichlet_eigenvalue_cached(config.dim)?;
    let lo = config.lambda_min.unwrap_or(-l1 + BIFURCATION_OFFSET);
    let hi = config.lambda_max.unwrap_or(1e4);
    trace_curve(config.dim, p, lo, hi, config.points.unwrap_or(32), opts)
}

fn curve_plot(curve: &MassCurve) -> String {
    let mut plot = LinePlot::new(format!("mass curve N={} p={}", curve.dim, curve.p), "lambda", "d(lambda)");
    let mut rising: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut falling: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut prev: Option<(bool, (f64, f64))> = None;
    for pt in &curve.points {
        let xy = (pt.lambda, pt.mass);
        let up = pt.mass_slope > 0.0;
        let target = if up { &mut rising } else { &mut falling };
        match prev {
            Some((was_up, _)) if was_up == up => target.last_mut().unwrap().push(xy),
            Some((_, last)) => target.push(vec![last, xy]),
            None => target.push(vec![xy]),
        }
        prev = Some((up, xy));
    }
    plot.series.push(Series {
        label: "d' > 0 (stable)".into(),
        color: "#1f77b4",
        segments: rising,
    });
    plot.series.push(Series {
        label: "d' < 0 (unstable)".into(),
        color: "#d62728",
        segments: falling,
    });
    plot.render()
}

fn curve_value(curve: &MassCurve, opts: &SolverOptions) -> Value {
    let existence = match classify(curve, opts) {
        Ok(rep) => json!(rep),
        Err(e) => json!({ "unavailable": e.to_string() }),
    };
    json!({
        "N": curve.dim,
        "p": curve.p,
        "lambda1": curve.lambda1,
        "points": curve.points,
        "gaps": curve.gaps,
        "existence": existence,
    })
}

fn run_curve(config: &RunConfig, opts: &SolverOptions, artifacts: &mut Vec<Artifact>) -> Result<(Value, String)> {
    let curve = curve_for(config, opts)?;
    artifacts.push(Artifact::new("curve.csv", csv_bytes(|b| curve.write_csv(b))?));
    artifacts.push(Artifact::new("curve.svg", curve_plot(&curve)));
    let summary = format!(
        "{} points on [{}, {}], {} gaps",
        curve.points.len(),
        curve.lambda_min(),
        curve.lambda_max(),
        curve.gaps.len()
    );
    Ok((curve_value(&curve, opts), summary))
}

fn run_solve(config: &RunConfig, opts: &SolverOptions, artifacts: &mut Vec<Artifact>) -> Result<(Value, String, usize)> {
    let c = config
        .mass
        .ok_or_else(|| Error::InvalidParameter("solve needs --mass".into()))?;
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("mass {c} must be positive")));
    }
    let curve = curve_for(config, opts)?;
    let report = classify(&curve, opts)?;
    let roots = solve_mass(&curve, &report, c, opts)?;
    artifacts.push(Artifact::new("curve.csv", csv_bytes(|b| curve.write_csv(b))?));
    artifacts.push(Artifact::new("curve.svg", curve_plot(&curve)));
    for (i, root) in roots.iter().enumerate() {
        artifacts.push(Artifact::new(
            format!("solution_{i}.csv"),
            csv_bytes(|b| root.profile.write_csv(b))?,
        ));
    }
    let solutions: Vec<Value> = roots
        .iter()
        .map(|r| {
            json!({
                "lambda": r.lambda,
                "mass": r.mass,
                "mass_slope": r.mass_slope,
                "stability": r.stability,
                "u_max": r.profile.u_max,
                "r_bar": r.profile.r_bar,
            })
        })
        .collect();
    let summary = if roots.is_empty() {
        format!("no solution with mass {c} for lambda in [{}, {}]", curve.lambda_min(), curve.lambda_max())
    } else {
        roots
            .iter()
            .map(|r| {
                let tag = match r.stability {
                    Stability::Stable => "stable",
                    Stability::Unstable => "unstable",
                    Stability::Marginal => "marginal",
                };
                format!("lambda = {:.10} ({tag})", r.lambda)
            })
            .collect::<Vec<_>>()
            .join("; ")
    };
    let value = json!({
        "mass": c,
        "existence": report,
        "solutions": solutions,
    });
    Ok((value, summary, roots.len()))
}

fn run_asymptotics(config: &RunConfig, opts: &SolverOptions, artifacts: &mut Vec<Artifact>) -> Result<(Value, String)> {
    let p = config.exponent()?;
    let lo = config.lambda_min.unwrap_or(100.0);
    let hi = config.lambda_max.unwrap_or(6400.0);
    let n = config.points.unwrap_or(4);
    if !(lo > 0.0 && hi > lo) || n < 3 {
        return Err(Error::InvalidParameter("need 0 < lambda-min < lambda-max and at least 3 points".into()));
    }
    let lambdas: Vec<f64> = (0..n)
        .map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
        .collect();
    let profiles = profile_ladder(config.dim, p, &lambdas, opts)?;
    let report = limit_diagnostics(&profiles)?;
    let soliton = SolitonRef::new(p)?;
    let mut plot = LinePlot::new(format!("rescaled profiles N={} p={p}", config.dim), "s", "omega");
    let grid: Vec<f64> = (0..=400).map(|i| -5.0 + 0.025 * i as f64).collect();
    plot.series.push(Series::line("W", "black", grid.iter().map(|&s| (s, soliton.eval(s))).collect()));
    let palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];
    for (i, prof) in profiles.iter().enumerate() {
        let omega = rescale(prof)?;
        plot.series.push(Series::line(
            format!("lambda = {}", prof.spec.lambda),
            palette[i % palette.len()],
            grid.iter().map(|&s| (s, omega.eval(s))).collect(),
        ));
    }
    artifacts.push(Artifact::new("omega.svg", plot.render()));
    let summary = format!(
        "fitted mass exponent {:.4} (limit {:.4}), final sup error {:.4}",
        report.fitted_mass_exponent,
        report.expected_mass_exponent,
        report.sup_errors.last().copied().unwrap_or(f64::NAN)
    );
    Ok((serde_json::to_value(&report)?, summary))
}

fn run_evolve(config: &RunConfig, opts: &SolverOptions, artifacts: &mut Vec<Artifact>) -> Result<(Value, String)> {
    let spec = config.checked_spec()?;
    let mode: PerturbationMode = config.mode.parse()?;
    let experiment = ExperimentSpec {
        base: spec,
        epsilon: config.eps,
        mode,
        t_final: config.t_final.unwrap_or(DEFAULT_T_FINAL),
        dt: config.dt.unwrap_or_else(|| default_dt(spec.lambda)),
        seed: config.seed,
    };
    experiment.validate()?;
    let reference = ground_state(&spec, opts)?;
    let outcome = stability_experiment(&experiment, &reference)?;
    artifacts.push(Artifact::new("trace.csv", csv_bytes(|b| outcome.trace.write_csv(b))?));
    let mut plot = LinePlot::new(
        format!("orbital distance N={} p={} lambda={}", spec.dim, spec.p, spec.lambda),
        "t",
        "delta / |u|",
    );
    plot.log_y = true;
    plot.series.push(Series::line(
        "delta",
        "#d62728",
        outcome
            .trace
            .times
            .iter()
            .zip(&outcome.trace.orbital_distance_series)
            .map(|(t, d)| (*t, d / outcome.reference_norm))
            .collect(),
    ));
    artifacts.push(Artifact::new("trace.svg", plot.render()));
    let summary = format!(
        "{} (max distance {:.3e}, initial {:.3e})",
        serde_json::to_value(outcome.verdict)?.as_str().unwrap_or_default(),
        outcome.max_distance,
        outcome.initial_distance
    );
    let value = json!({
        "experiment": outcome.spec,
        "verdict": outcome.verdict,
        "initial_distance": outcome.initial_distance,
        "max_distance": outcome.max_distance,
        "reference_norm": outcome.reference_norm,
        "detection_time": outcome.detection_time,
        "termination": outcome.trace.termination,
        "dt_used": outcome.trace.dt_used,
        "steps": outcome.trace.steps,
    });
    Ok((value, summary))
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Reads a JSON array of configurations and runs them concurrently. Each
/// entry without `out` writes under `<--out>/<index>` when `--out` is set.
/// The exit code is the first nonzero code in array order.
pub fn run_batch(config: &RunConfig) -> Result<i32> {
    let path = config
        .file
        .as_deref()
        .ok_or_else(|| Error::InvalidParameter("batch needs --file".into()))?;
    let configs = read_batch(path)?;
    let run_all = || -> Vec<(i32, String)> {
        configs
            .par_iter()
            .enumerate()
            .map(|(i, c)| {
                let mut c = c.clone();
                if c.out.is_none() {
                    c.out = config.out.as_ref().map(|d| d.join(i.to_string()));
                }
                match execute(&c) {
                    Ok(o) => (o.exit_code, format!("[{i}] {}: {}", c.command.name(), o.summary)),
                    Err(e) => (exit_code(&e), format!("[{i}] {}: error: {e}", c.command.name())),
                }
            })
            .collect()
    };
    let results = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(run_all),
        None => run_all(),
    };
    for (_, line) in &results {
        println!("{line}");
    }
    Ok(results.iter().map(|r| r.0).find(|&c| c != EXIT_OK).unwrap_or(EXIT_OK))
}

pub fn read_batch(path: &Path) -> Result<Vec<RunConfig>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let configs: Vec<RunConfig> = serde_json::from_str(&text)?;
    if configs.iter().any(|c| c.command == Command::Batch) {
        return Err(Error::InvalidParameter("batch files cannot contain batch commands".into()));
    }
    Ok(configs)
}
