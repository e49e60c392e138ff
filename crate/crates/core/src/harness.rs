//! Experiment runners behind the `vi` binary.
//!
//! Each runner returns its numbers together with a CSV rendering whose
//! `#` lines echo the configuration, the defaults that were filled in,
//! solver tolerances and initial conditions.

use std::fmt::Write as _;
use std::path::PathBuf;

use nalgebra::DVector;

use crate::bvp::OneStepMethod;
use crate::discretization::{
    build_midpoint_triple, build_mixed_triple, build_recipe_triple, check_strong_equivalence,
    exact_triple, sample_pairs, DiscreteTriple, RecipeTriple,
};
use crate::error::{Error, Result};
use crate::integrators::{
    integrate_dirac, integrate_hamiltonian, verify_dirac_structure, DiracVariant, PhasePoint,
};
use crate::numkit::{max_norm, ToleranceSpec};
use crate::quadrature::QuadratureRule;
use crate::systems::{self, ForcedLagrangianSystem, RlcCircuit};

/// Renders a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len()) as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Converge,
    AlphaSweep,
    Quintic,
    Rlc,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Converge => "converge",
            Experiment::AlphaSweep => "alpha-sweep",
            Experiment::Quintic => "quintic",
            Experiment::Rlc => "rlc",
        }
    }
}

/// Everything a run needs. `None` fields take per-experiment defaults,
/// which are echoed in the output header.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub system: Option<String>,
    pub quad: Option<String>,
    pub quad_l: Option<String>,
    pub quad_f: Option<String>,
    pub bvp: Option<String>,
    pub h: Option<f64>,
    pub steps: Option<usize>,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub tol: f64,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TOL: f64 = 1e-12;

impl RunConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            system: None,
            quad: None,
            quad_l: None,
            quad_f: None,
            bvp: None,
            h: None,
            steps: None,
            alpha: None,
            seed: DEFAULT_SEED,
            tol: DEFAULT_TOL,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.quad.is_some() && (self.quad_l.is_some() || self.quad_f.is_some()) {
            return Err(Error::InvalidParameter(
                "--quad cannot be combined with --quad-l/--quad-f".into(),
            ));
        }
        if self.quad_l.is_some() != self.quad_f.is_some() {
            return Err(Error::InvalidParameter(
                "--quad-l and --quad-f must be given together".into(),
            ));
        }
        if let Some(h) = self.h {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "h must be positive, got {h}"
                )));
            }
        }
        if let Some(a) = self.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::InvalidParameter(format!(
                    "alpha must lie in [0, 1], got {a}"
                )));
            }
        }
        ToleranceSpec::with_residual_tol(self.tol)?;
        Ok(())
    }

    fn tolerance(&self) -> Result<ToleranceSpec> {
        ToleranceSpec::with_residual_tol(self.tol)
    }

    fn method_or(&self, default: OneStepMethod) -> Result<OneStepMethod> {
        self.bvp
            .as_deref()
            .map(OneStepMethod::by_name)
            .unwrap_or(Ok(default))
    }

    /// `(rule for L_d, rule for f_d)`; equal unless a pair was given.
    fn rules_or(&self, default: &str) -> Result<(QuadratureRule, QuadratureRule)> {
        match (&self.quad, &self.quad_l, &self.quad_f) {
            (_, Some(l), Some(f)) => Ok((QuadratureRule::by_name(l)?, QuadratureRule::by_name(f)?)),
            (Some(q), _, _) => {
                let r = QuadratureRule::by_name(q)?;
                Ok((r.clone(), r))
            }
            _ => {
                let r = QuadratureRule::by_name(default)?;
                Ok((r.clone(), r))
            }
        }
    }

    fn header(&self, out: &mut String) {
        let show = |x: &Option<String>| x.clone().unwrap_or_else(|| "-".into());
        let _ = writeln!(out, "# experiment: {}", self.experiment.name());
        let _ = writeln!(
            out,
            "# config: system={} quad={} quad-l={} quad-f={} bvp={} h={} steps={} alpha={} seed={} tol={}",
            show(&self.system),
            show(&self.quad),
            show(&self.quad_l),
            show(&self.quad_f),
            show(&self.bvp),
            show(&self.h.map(fmt_f64)),
            show(&self.steps.map(|s| s.to_string())),
            show(&self.alpha.map(fmt_f64)),
            self.seed,
            fmt_f64(self.tol),
        );
        let t = ToleranceSpec::with_residual_tol(self.tol).unwrap_or_default();
        let _ = writeln!(
            out,
            "# newton: residual_tol={} max_iterations={} fd_step_scale={} max_halvings={}",
            fmt_f64(t.residual_tol),
            t.max_iterations,
            fmt_f64(t.fd_step_scale),
            crate::numkit::MAX_HALVINGS
        );
        let _ = writeln!(
            out,
            "# shooting: initial guess v0=(q1-q0)/h, sensitivities by tangent propagation"
        );
    }
}

fn build_triple(
    system: &ForcedLagrangianSystem,
    rule_l: &QuadratureRule,
    rule_f: &QuadratureRule,
    method: OneStepMethod,
    tol: &ToleranceSpec,
) -> Result<RecipeTriple> {
    let t = if rule_l == rule_f {
        build_recipe_triple(system, rule_l, method)?
    } else {
        build_mixed_triple(system, rule_l, rule_f, method)?
    };
    Ok(t.with_tolerance(*tol))
}

/// Column header of the trajectory schema for dimension `n`.
pub fn trajectory_header(n: usize) -> String {
    let mut cols = vec!["step".to_string(), "t".to_string()];
    cols.extend((0..n).map(|i| format!("q_{i}")));
    cols.extend((0..n).map(|i| format!("p_{i}")));
    cols.push("energy".into());
    cols.join(",")
}

/// One trajectory row; `energy` is left empty when `None`.
pub fn trajectory_row(step: usize, t: f64, state: &PhasePoint, energy: Option<f64>) -> String {
    let mut cols = vec![step.to_string(), fmt_f64(t)];
    cols.extend(state.q.iter().map(|x| fmt_f64(*x)));
    cols.extend(state.p.iter().map(|x| fmt_f64(*x)));
    cols.push(energy.map(fmt_f64).unwrap_or_default());
    cols.join(",")
}

/// Energy of a canonical system at a phase point, through the inverse
/// continuous Legendre transform.
fn phase_energy(system: &ForcedLagrangianSystem, state: &PhasePoint) -> Option<f64> {
    if !system.has_energy() || system.is_dirac_only() {
        return None;
    }
    let v = system.velocity_from_momentum(&state.q, &state.p).ok()?;
    system.energy(&state.q, &v).ok()
}

/// Writes `csv` to `path`, or returns it unchanged when `path` is `None`.
pub fn emit(csv: &str, path: Option<&PathBuf>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, csv).map_err(Error::from),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub steps_per_period: usize,
    pub error: f64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub expected_order: usize,
    pub csv: String,
}

pub const CONVERGENCE_STEPS: [usize; 4] = [20, 40, 80, 160];
pub const CONVERGENCE_PERIODS: usize = 5;

/// Position error after five periods for steps-per-period 20, 40, 80, 160
/// (or `steps`, doubled three times).
pub fn run_convergence(cfg: &RunConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let tol = cfg.tolerance()?;
    let name = cfg.system.clone().unwrap_or_else(|| "damped-ho".into());
    let system = systems::by_name(&name, cfg.alpha.unwrap_or(0.0))?;
    if !system.has_exact_solution() {
        return Err(Error::Unavailable("exact solution"));
    }
    let period = system.period().ok_or(Error::Unavailable("period"))?;
    let method = cfg.method_or(OneStepMethod::Rk2)?;
    let (rule_l, rule_f) = cfg.rules_or("trapezoid")?;
    let triple = build_triple(&system, &rule_l, &rule_f, method, &tol)?;
    let counts: Vec<usize> = match cfg.steps {
        Some(0) => return Err(Error::InvalidParameter("steps must be at least 1".into())),
        Some(s) => (0..4).map(|k| s << k).collect(),
        None => CONVERGENCE_STEPS.to_vec(),
    };

    let q0 = DVector::from_element(1, 1.0);
    let v0 = DVector::zeros(1);
    let p0 = system.momentum(&q0, &v0)?;
    let horizon = CONVERGENCE_PERIODS as f64 * period;
    let (q_exact, _) = system.exact_solution(horizon, &q0, &v0)?;

    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &n in &counts {
        let h = period / n as f64;
        let states = integrate_hamiltonian(
            &triple,
            &PhasePoint::new(q0.clone(), p0.clone()),
            h,
            CONVERGENCE_PERIODS * n,
            &tol,
        )?;
        let error = max_norm(&(&states.last().expect("nonempty").q - &q_exact));
        let ratio = rows.last().map(|r| r.error / error);
        rows.push(ConvergenceRow {
            steps_per_period: n,
            error,
            ratio,
        });
    }

    let mut csv = String::new();
    cfg.header(&mut csv);
    let _ = writeln!(
        csv,
        "# system: {} period={}",
        system.name(),
        fmt_f64(period)
    );
    let _ = writeln!(csv, "# triple: {}", triple.provenance());
    let _ = writeln!(csv, "# expected order: {}", triple.expected_order());
    let _ = writeln!(csv, "# initial conditions: q=1 v=0 p={}", fmt_f64(p0[0]));
    let _ = writeln!(
        csv,
        "# error: |q_N - q_exact| at t={} ({} periods)",
        fmt_f64(horizon),
        CONVERGENCE_PERIODS
    );
    csv.push_str("steps_per_period,error,ratio\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{}",
            r.steps_per_period,
            fmt_f64(r.error),
            r.ratio.map(fmt_f64).unwrap_or_default()
        );
    }
    Ok(ConvergenceReport {
        rows,
        expected_order: triple.expected_order(),
        csv,
    })
}

pub const ALPHA_SWEEP_H: f64 = 0.05;
pub const ALPHA_SWEEP_HORIZON: f64 = 10.0;
pub const EQUIVALENCE_SAMPLES: usize = 20;

/// Per-α results of the sweep for one build.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepBuild {
    pub label: String,
    pub provenance: String,
    /// Max-norm position deviation from the α = 0 trajectory.
    pub deviations: Vec<f64>,
    /// Strong-equivalence violation between the α = 0 and α = 1 triples.
    pub equivalence_violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSweepReport {
    pub alphas: Vec<f64>,
    pub preserving: SweepBuild,
    pub mixed: SweepBuild,
    pub csv: String,
}

/// α values 0, 0.1, …, 1.
pub fn alpha_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// Runs the α-split oscillator for every α with an equivalence-preserving
/// build and a mixed build, and records how far each trajectory strays
/// from the α = 0 one.
pub fn run_alpha_sweep(cfg: &RunConfig) -> Result<AlphaSweepReport> {
    cfg.validate()?;
    if let Some(s) = cfg.system.as_deref() {
        if s != "alpha-ho" {
            return Err(Error::InvalidParameter(format!(
                "alpha-sweep runs the alpha-ho system, not `{s}`"
            )));
        }
    }
    let tol = cfg.tolerance()?;
    let h = cfg.h.unwrap_or(ALPHA_SWEEP_H);
    let steps = cfg
        .steps
        .unwrap_or_else(|| (ALPHA_SWEEP_HORIZON / h).round() as usize);
    let method = cfg.method_or(OneStepMethod::Rk2)?;
    let preserving_rule = match &cfg.quad {
        Some(q) => QuadratureRule::by_name(q)?,
        None => QuadratureRule::trapezoid(),
    };
    let (mixed_l, mixed_f) = match (&cfg.quad_l, &cfg.quad_f) {
        (Some(l), Some(f)) => (QuadratureRule::by_name(l)?, QuadratureRule::by_name(f)?),
        _ => (QuadratureRule::trapezoid(), QuadratureRule::midpoint()),
    };
    let alphas = alpha_grid();
    let initial = PhasePoint::scalar(1.0, 0.0);
    let pairs = sample_pairs(1, EQUIVALENCE_SAMPLES, 2.0, h, cfg.seed);

    let mut body = String::new();
    let mut builds = Vec::new();
    for (label, rule_l, rule_f) in [
        ("preserving", &preserving_rule, &preserving_rule),
        ("mixed", &mixed_l, &mixed_f),
    ] {
        let mut reference: Option<Vec<PhasePoint>> = None;
        let mut deviations = Vec::new();
        let mut triples = Vec::new();
        for &alpha in &alphas {
            let system = systems::alpha_oscillator(alpha)?;
            let triple = build_triple(&system, rule_l, rule_f, method, &tol)?;
            let states = integrate_hamiltonian(&triple, &initial, h, steps, &tol)?;
            let reference = reference.get_or_insert_with(|| states.clone());
            let dev_per_step: Vec<f64> = states
                .iter()
                .zip(reference.iter())
                .map(|(a, b)| max_norm(&(&a.q - &b.q)))
                .collect();
            let deviation = dev_per_step.iter().copied().fold(0.0, f64::max);
            for (k, (st, dev)) in states.iter().zip(&dev_per_step).enumerate() {
                let _ = writeln!(
                    body,
                    "{},{label},{},{}",
                    trajectory_row(k, k as f64 * h, st, phase_energy(&system, st)),
                    fmt_f64(alpha),
                    fmt_f64(*dev)
                );
            }
            deviations.push(deviation);
            triples.push(triple);
        }
        let first = triples.first().expect("alpha grid is nonempty");
        let last = triples.last().expect("alpha grid is nonempty");
        let report = check_strong_equivalence(first, last, &pairs, 1e-8)?;
        builds.push(SweepBuild {
            label: label.to_string(),
            provenance: first.provenance().to_string(),
            deviations,
            equivalence_violation: report.max_violation(),
        });
    }
    let mixed = builds.pop().expect("two builds");
    let preserving = builds.pop().expect("two builds");

    let mut csv = String::new();
    cfg.header(&mut csv);
    let _ = writeln!(
        csv,
        "# system: alpha-ho, L = v^2/2 - (1-alpha) q^2/2, f = -alpha q"
    );
    let _ = writeln!(
        csv,
        "# h={} steps={} horizon={} initial conditions: q=1 v=0 p=0",
        fmt_f64(h),
        steps,
        fmt_f64(h * steps as f64)
    );
    let _ = writeln!(
        csv,
        "# deviation: max over steps of |q_alpha - q_0|; equivalence checked on {} pairs, |q|<=2, seed {}",
        EQUIVALENCE_SAMPLES, cfg.seed
    );
    for b in [&preserving, &mixed] {
        let _ = writeln!(
            csv,
            "# build {}: {} max_deviation={} equivalence_violation(alpha 0 vs 1)={}",
            b.label,
            b.provenance,
            fmt_f64(b.deviations.iter().copied().fold(0.0, f64::max)),
            fmt_f64(b.equivalence_violation)
        );
        for (a, d) in alphas.iter().zip(&b.deviations) {
            let _ = writeln!(
                csv,
                "# build {} alpha={} deviation={}",
                b.label,
                fmt_f64(*a),
                fmt_f64(*d)
            );
        }
    }
    let _ = writeln!(csv, "{},build,alpha,deviation", trajectory_header(1));
    csv.push_str(&body);
    Ok(AlphaSweepReport {
        alphas,
        preserving,
        mixed,
        csv,
    })
}

pub const QUINTIC_H: f64 = 0.1;
pub const QUINTIC_STEPS: usize = 200;

/// Outcome of one quintic build.
#[derive(Debug, Clone, PartialEq)]
pub struct QuinticBuild {
    pub label: String,
    pub provenance: String,
    /// Max `|q − q_exact|` over the steps that were completed.
    pub max_error: f64,
    /// Steps completed before a solver failure, if any.
    pub completed: usize,
    pub failure: Option<String>,
}

impl QuinticBuild {
    pub fn diverged(&self) -> bool {
        self.failure.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuinticReport {
    pub preserving: QuinticBuild,
    pub mixed: QuinticBuild,
    /// The preserving configuration applied to the plain oscillator.
    pub plain_sho: QuinticBuild,
    pub csv: String,
}

fn run_quintic_build(
    label: &str,
    system: &ForcedLagrangianSystem,
    rule_l: &QuadratureRule,
    rule_f: &QuadratureRule,
    method: OneStepMethod,
    h: f64,
    steps: usize,
    tol: &ToleranceSpec,
    body: Option<&mut String>,
) -> Result<QuinticBuild> {
    let triple = build_triple(system, rule_l, rule_f, method, tol)?;
    let q0 = DVector::from_element(1, 1.0);
    let v0 = DVector::zeros(1);
    let mut state = PhasePoint::new(q0.clone(), system.momentum(&q0, &v0)?);
    let mut rows = Vec::new();
    let mut max_error: f64 = 0.0;
    let mut failure = None;
    let mut prev_q: Option<DVector<f64>> = None;
    let mut completed = 0;
    for k in 0..=steps {
        let t = k as f64 * h;
        let exact = system.exact_solution(t, &q0, &v0)?.0[0];
        let err = (state.q[0] - exact).abs();
        max_error = max_error.max(err);
        rows.push(format!(
            "{},{},{label},ok",
            trajectory_row(k, t, &state, phase_energy(system, &state)),
            fmt_f64(exact)
        ));
        if k == steps {
            break;
        }
        let guess = prev_q.as_ref().map(|p| &state.q * 2.0 - p);
        match crate::integrators::hamiltonian_step(&triple, &state, h, guess.as_ref(), tol) {
            Ok(next) if next.is_finite() => {
                prev_q = Some(state.q.clone());
                state = next;
                completed += 1;
            }
            Ok(_) => {
                failure = Some(Error::NonFiniteState.to_string());
                break;
            }
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        }
    }
    if let (Some(body), true) = (body, steps > 0) {
        for r in rows {
            body.push_str(&r);
            body.push('\n');
        }
        if let Some(f) = &failure {
            let _ = writeln!(
                body,
                "{},{},,,,,{label},diverged: {}",
                completed + 1,
                fmt_f64((completed + 1) as f64 * h),
                f.replace(',', ";")
            );
        }
    }
    Ok(QuinticBuild {
        label: label.to_string(),
        provenance: triple.provenance().to_string(),
        max_error,
        completed,
        failure,
    })
}

/// The cancelled-quintic oscillator with an equivalence-preserving build
/// (trapezoid for everything) and a mixed build (Simpson for `L_d`,
/// trapezoid for `f_d`), both on rk4 shooting.
pub fn run_quintic(cfg: &RunConfig) -> Result<QuinticReport> {
    cfg.validate()?;
    if let Some(s) = cfg.system.as_deref() {
        if s != "quintic" {
            return Err(Error::InvalidParameter(format!(
                "quintic runs the quintic system, not `{s}`"
            )));
        }
    }
    let tol = cfg.tolerance()?;
    let h = cfg.h.unwrap_or(QUINTIC_H);
    let steps = cfg.steps.unwrap_or(QUINTIC_STEPS);
    let method = cfg.method_or(OneStepMethod::Rk4)?;
    let preserving_rule = match &cfg.quad {
        Some(q) => QuadratureRule::by_name(q)?,
        None => QuadratureRule::trapezoid(),
    };
    let (mixed_l, mixed_f) = match (&cfg.quad_l, &cfg.quad_f) {
        (Some(l), Some(f)) => (QuadratureRule::by_name(l)?, QuadratureRule::by_name(f)?),
        _ => (QuadratureRule::simpson(), QuadratureRule::trapezoid()),
    };
    let system = systems::quintic_cancellation();
    let sho = systems::damped_oscillator(1.0, 1.0, 0.0)?;

    let mut body = String::new();
    let preserving = run_quintic_build(
        "preserving",
        &system,
        &preserving_rule,
        &preserving_rule,
        method,
        h,
        steps,
        &tol,
        Some(&mut body),
    )?;
    let mixed = run_quintic_build(
        "mixed",
        &system,
        &mixed_l,
        &mixed_f,
        method,
        h,
        steps,
        &tol,
        Some(&mut body),
    )?;
    let plain_sho = run_quintic_build(
        "plain-sho",
        &sho,
        &preserving_rule,
        &preserving_rule,
        method,
        h,
        steps,
        &tol,
        None,
    )?;

    let mut csv = String::new();
    cfg.header(&mut csv);
    let _ = writeln!(
        csv,
        "# system: quintic, L = v^2/2 - q^2/2 - 100 q^5, f = 500 q^4"
    );
    let _ = writeln!(
        csv,
        "# h={} steps={} initial conditions: q=1 v=0 p=0",
        fmt_f64(h),
        steps
    );
    for b in [&preserving, &mixed, &plain_sho] {
        let _ = writeln!(
            csv,
            "# build {}: {} max_error={} completed_steps={} status={}",
            b.label,
            b.provenance,
            fmt_f64(b.max_error),
            b.completed,
            b.failure
                .as_deref()
                .map(|f| format!("diverged: {f}"))
                .unwrap_or_else(|| "ok".into())
        );
    }
    let _ = writeln!(csv, "{},q_exact,build,status", trajectory_header(1));
    csv.push_str(&body);
    Ok(QuinticReport {
        preserving,
        mixed,
        plain_sho,
        csv,
    })
}

pub const RLC_H: f64 = 0.05;
pub const RLC_STEPS: usize = 1000;
pub const RLC_PARAMETERS: (f64, f64, f64) = (0.75, 0.1, 3.0);

#[derive(Debug, Clone, PartialEq)]
pub struct RlcReport {
    pub max_charge_error: f64,
    pub max_constraint_residual: f64,
    pub max_structure_violation: f64,
    pub steps: usize,
    pub csv: String,
}

/// The RLC resonator with the midpoint triple and the (+) Dirac stepper.
pub fn run_rlc(cfg: &RunConfig) -> Result<RlcReport> {
    run_rlc_variant(cfg, DiracVariant::Plus)
}

/// [`run_rlc`] with a choice of Dirac variant.
pub fn run_rlc_variant(cfg: &RunConfig, variant: DiracVariant) -> Result<RlcReport> {
    cfg.validate()?;
    if let Some(s) = cfg.system.as_deref() {
        if s != "rlc" {
            return Err(Error::InvalidParameter(format!(
                "rlc runs the rlc system, not `{s}`"
            )));
        }
    }
    let tol = cfg.tolerance()?;
    let h = cfg.h.unwrap_or(RLC_H);
    let steps = cfg.steps.unwrap_or(RLC_STEPS);
    let (l, r, c) = RLC_PARAMETERS;
    let circuit = RlcCircuit::new(l, r, c)?;
    let cs = circuit.constrained_system();
    let triple = build_midpoint_triple(&cs.system);
    let q0 = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
    let v0 = DVector::zeros(3);
    let p0 = cs.system.momentum(&q0, &v0)?;
    let initial = PhasePoint::new(q0.clone(), p0);
    let records = integrate_dirac(
        variant,
        &triple,
        &cs.distribution,
        &cs.retraction,
        &initial,
        h,
        steps,
        &tol,
    )?;

    let mut body = String::new();
    let energy0 = cs.system.energy(&q0, &v0).ok();
    let exact0 = circuit.capacitor_charge(0.0, 1.0)?;
    let mut max_charge_error = (q0[0] - exact0).abs();
    let mut max_constraint: f64 = 0.0;
    let mut max_violation: f64 = 0.0;
    let _ = writeln!(
        body,
        "{},,,{},,",
        trajectory_row(0, 0.0, &initial, energy0),
        fmt_f64(exact0)
    );
    for (k, rec) in records.iter().enumerate() {
        let t = (k + 1) as f64 * h;
        let state = rec.next_state();
        let v = cs.retraction.inverse(&rec.q_k, &rec.q_next, h);
        let energy = cs.system.energy(&state.q, &v).ok();
        let exact = circuit.capacitor_charge(t, 1.0)?;
        let constraint = max_norm(&rec.discrete_constraint(&cs.distribution, &cs.retraction));
        let report = verify_dirac_structure(rec, &triple, &cs.distribution, &cs.retraction, 1e-8)?;
        max_charge_error = max_charge_error.max((state.q[0] - exact).abs());
        max_constraint = max_constraint.max(constraint);
        max_violation = max_violation.max(report.max_violation());
        let mu: Vec<String> = rec.mu.iter().map(|x| fmt_f64(*x)).collect();
        let _ = writeln!(
            body,
            "{},{},{},{},{}",
            trajectory_row(k + 1, t, &state, energy),
            mu.join(","),
            fmt_f64(exact),
            fmt_f64(constraint),
            fmt_f64(report.max_violation())
        );
    }

    let mut csv = String::new();
    cfg.header(&mut csv);
    let _ = writeln!(
        csv,
        "# system: rlc L={} R={} C={} coordinates (q_C, q_L, q_R)",
        fmt_f64(l),
        fmt_f64(r),
        fmt_f64(c)
    );
    let _ = writeln!(
        csv,
        "# stepper: ({variant}) discrete Dirac, triple {}, retraction {}",
        triple.provenance(),
        cs.retraction.name()
    );
    let _ = writeln!(
        csv,
        "# h={} steps={} initial conditions: q_C=1 currents=0 p=dL/dv=0",
        fmt_f64(h),
        steps
    );
    let _ = writeln!(
        csv,
        "# energy uses the chord velocity of the step ending at each row; qc_exact solves L q'' + R q' + q/C = 0"
    );
    let _ = writeln!(
        csv,
        "# max |q_C - qc_exact|={} max constraint residual={} max structure violation={}",
        fmt_f64(max_charge_error),
        fmt_f64(max_constraint),
        fmt_f64(max_violation)
    );
    let _ = writeln!(
        csv,
        "{},mu_0,mu_1,qc_exact,constraint_residual,structure_violation",
        trajectory_header(3)
    );
    csv.push_str(&body);
    Ok(RlcReport {
        max_charge_error,
        max_constraint_residual: max_constraint,
        max_structure_violation: max_violation,
        steps: records.len(),
        csv,
    })
}

/// Runs the configured experiment and returns its CSV.
pub fn run(cfg: &RunConfig) -> Result<String> {
    Ok(match cfg.experiment {
        Experiment::Converge => run_convergence(cfg)?.csv,
        Experiment::AlphaSweep => run_alpha_sweep(cfg)?.csv,
        Experiment::Quintic => run_quintic(cfg)?.csv,
        Experiment::Rlc => run_rlc(cfg)?.csv,
    })
}

/// Errors caused by the request rather than by a solver.
pub fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::UnknownRule(_)
            | Error::UnknownMethod(_)
            | Error::UnknownSystem(_)
            | Error::InvalidParameter(_)
            | Error::LengthMismatch { .. }
            | Error::Overdamped
            | Error::DiracOnly(_)
            | Error::Unavailable(_)
            | Error::Io(_)
    )
}

/// Errors of one discrete quantity against the exact oracle, per step size.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderStudy {
    pub hs: Vec<f64>,
    pub ld: Vec<f64>,
    pub f_plus: Vec<f64>,
    pub f_minus: Vec<f64>,
    pub legendre_plus: Vec<f64>,
    pub legendre_minus: Vec<f64>,
}

impl OrderStudy {
    /// `(name, log–log slope)` for every measured quantity.
    pub fn slopes(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("L_d", loglog_slope(&self.hs, &self.ld)),
            ("f_d+", loglog_slope(&self.hs, &self.f_plus)),
            ("f_d-", loglog_slope(&self.hs, &self.f_minus)),
            ("F+L_d", loglog_slope(&self.hs, &self.legendre_plus)),
            ("F-L_d", loglog_slope(&self.hs, &self.legendre_minus)),
        ]
    }
}

/// Measures `|X − X^E|` for `L_d`, `f_d^±` and `𝔽^{f±}L_d` at
/// `(q0, q(h))`, where `q(h)` is the exact solution from `(q0, v0)`.
pub fn discrete_order_study(
    system: &ForcedLagrangianSystem,
    triple: &dyn DiscreteTriple,
    q0: &DVector<f64>,
    v0: &DVector<f64>,
    hs: &[f64],
) -> Result<OrderStudy> {
    let oracle = exact_triple(system, 1e-13)?;
    let mut study = OrderStudy {
        hs: hs.to_vec(),
        ld: Vec::new(),
        f_plus: Vec::new(),
        f_minus: Vec::new(),
        legendre_plus: Vec::new(),
        legendre_minus: Vec::new(),
    };
    for &h in hs {
        let (q1, _) = system.exact_solution(h, q0, v0)?;
        let a = triple.evaluate(q0, &q1, h)?;
        let e = oracle.evaluate(q0, &q1, h)?;
        study.ld.push((a.ld - e.ld).abs());
        study.f_plus.push(max_norm(&(&a.f_plus - &e.f_plus)));
        study.f_minus.push(max_norm(&(&a.f_minus - &e.f_minus)));
        study
            .legendre_plus
            .push(max_norm(&(a.legendre_plus() - e.legendre_plus())));
        study
            .legendre_minus
            .push(max_norm(&(a.legendre_minus() - e.legendre_minus())));
    }
    Ok(study)
}
