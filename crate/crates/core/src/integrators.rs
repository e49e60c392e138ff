//! Steppers and structural checks.
//!
//! The forced discrete Hamiltonian map solves `p_k = 𝔽^{f−}L_d(q_k, q_{k+1})`
//! for `q_{k+1}` and sets `p_{k+1} = 𝔽^{f+}L_d(q_k, q_{k+1})`. The Dirac
//! steppers add constraint one-forms `ω^a(q)` with multipliers `μ_a` and
//! discrete constraints built from a [`Retraction`].

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::discretization::DiscreteTriple;
use crate::error::{Error, Result};
use crate::numkit::{fd_jacobian, max_norm, solve_newton, ToleranceSpec};

/// A phase-space state `(q, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
}

impl PhasePoint {
    pub fn new(q: DVector<f64>, p: DVector<f64>) -> Self {
        Self { q, p }
    }

    pub fn scalar(q: f64, p: f64) -> Self {
        Self::new(DVector::from_element(1, q), DVector::from_element(1, p))
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.p.iter()).all(|x| x.is_finite())
    }

    /// `(q, p)` stacked into one vector.
    pub fn to_vector(&self) -> DVector<f64> {
        let n = self.dim();
        DVector::from_fn(2 * n, |i, _| if i < n { self.q[i] } else { self.p[i - n] })
    }

    pub fn from_vector(z: &DVector<f64>) -> Self {
        let n = z.len() / 2;
        Self::new(z.rows(0, n).into_owned(), z.rows(n, n).into_owned())
    }
}

type OneForms = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Annihilator one-forms `ω^a(q)`, the rows of an `m × n` matrix.
#[derive(Clone)]
pub struct ConstraintDistribution {
    n: usize,
    m: usize,
    omega: OneForms,
}

impl fmt::Debug for ConstraintDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConstraintDistribution")
            .field("n", &self.n)
            .field("m", &self.m)
            .finish()
    }
}

const RANK_TOL: f64 = 1e-12;

fn full_row_rank(rows: &DMatrix<f64>) -> bool {
    rows.nrows() == 0 || (rows.nrows() <= rows.ncols() && rows.rank(RANK_TOL) == rows.nrows())
}

impl ConstraintDistribution {
    /// Configuration-independent one-forms.
    pub fn constant(rows: DMatrix<f64>) -> Result<Self> {
        if !full_row_rank(&rows) {
            return Err(Error::RankDeficientConstraints { at: Vec::new() });
        }
        let (m, n) = rows.shape();
        Ok(Self {
            n,
            m,
            omega: Arc::new(move |_| rows.clone()),
        })
    }

    /// General one-forms, rank-checked at `samples`.
    pub fn new<F>(n: usize, m: usize, omega: F, samples: &[DVector<f64>]) -> Result<Self>
    where
        F: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        let dist = Self {
            n,
            m,
            omega: Arc::new(omega),
        };
        for q in samples {
            dist.check_rank(q)?;
        }
        Ok(dist)
    }

    /// No constraints on an `n`-dimensional configuration space.
    pub fn none(n: usize) -> Self {
        Self {
            n,
            m: 0,
            omega: Arc::new(move |_| DMatrix::zeros(0, n)),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn count(&self) -> usize {
        self.m
    }

    pub fn omega(&self, q: &DVector<f64>) -> DMatrix<f64> {
        (self.omega)(q)
    }

    pub fn check_rank(&self, q: &DVector<f64>) -> Result<()> {
        let w = self.omega(q);
        if w.shape() != (self.m, self.n) || !full_row_rank(&w) {
            return Err(Error::RankDeficientConstraints {
                at: q.iter().copied().collect(),
            });
        }
        Ok(())
    }
}

type ForwardMap = Arc<dyn Fn(&DVector<f64>, &DVector<f64>, f64) -> DVector<f64> + Send + Sync>;

/// A retraction `R_q(v h)` with its inverse.
#[derive(Clone)]
pub struct Retraction {
    name: String,
    forward: ForwardMap,
    inverse: ForwardMap,
}

impl fmt::Debug for Retraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Retraction")
            .field("name", &self.name)
            .finish()
    }
}

impl Retraction {
    pub fn new<F, G>(name: impl Into<String>, forward: F, inverse: G) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>, f64) -> DVector<f64> + Send + Sync + 'static,
        G: Fn(&DVector<f64>, &DVector<f64>, f64) -> DVector<f64> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
        }
    }

    /// `R_q(v) = q + v h`, inverse `(q′ − q)/h`.
    pub fn linear() -> Self {
        Self::new("linear", |q, v, h| q + v * h, |q, q1, h| (q1 - q) / h)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn forward(&self, q: &DVector<f64>, v: &DVector<f64>, h: f64) -> DVector<f64> {
        (self.forward)(q, v, h)
    }

    pub fn inverse(&self, q: &DVector<f64>, q1: &DVector<f64>, h: f64) -> DVector<f64> {
        (self.inverse)(q, q1, h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiracVariant {
    Plus,
    Minus,
}

impl fmt::Display for DiracVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiracVariant::Plus => "+",
            DiracVariant::Minus => "-",
        })
    }
}

/// One accepted Dirac step.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracStepRecord {
    pub q_k: DVector<f64>,
    pub p_k: DVector<f64>,
    pub q_next: DVector<f64>,
    pub p_next: DVector<f64>,
    pub mu: DVector<f64>,
    pub h: f64,
    pub variant: DiracVariant,
}

impl DiracStepRecord {
    pub fn next_state(&self) -> PhasePoint {
        PhasePoint::new(self.q_next.clone(), self.p_next.clone())
    }

    /// `ω_{d±}(q_k, q_{k+1})`.
    pub fn discrete_constraint(
        &self,
        dist: &ConstraintDistribution,
        retr: &Retraction,
    ) -> DVector<f64> {
        discrete_constraint(self.variant, dist, retr, &self.q_k, &self.q_next, self.h)
    }
}

fn discrete_constraint(
    variant: DiracVariant,
    dist: &ConstraintDistribution,
    retr: &Retraction,
    q_k: &DVector<f64>,
    q_next: &DVector<f64>,
    h: f64,
) -> DVector<f64> {
    match variant {
        DiracVariant::Plus => dist.omega(q_k) * retr.inverse(q_k, q_next, h),
        DiracVariant::Minus => dist.omega(q_next) * retr.inverse(q_next, q_k, h),
    }
}

/// `𝔽^{f+}L_d = D₂L_d + f_d⁺`.
pub fn legendre_plus(
    triple: &dyn DiscreteTriple,
    q0: &DVector<f64>,
    q1: &DVector<f64>,
    h: f64,
) -> Result<DVector<f64>> {
    finite(triple.evaluate(q0, q1, h)?.legendre_plus())
}

/// `𝔽^{f−}L_d = −D₁L_d − f_d⁻`.
pub fn legendre_minus(
    triple: &dyn DiscreteTriple,
    q0: &DVector<f64>,
    q1: &DVector<f64>,
    h: f64,
) -> Result<DVector<f64>> {
    finite(triple.evaluate(q0, q1, h)?.legendre_minus())
}

fn finite(v: DVector<f64>) -> Result<DVector<f64>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::NonFiniteValue {
            context: "discrete Legendre transform",
        })
    }
}

fn check_dims(triple: &dyn DiscreteTriple, xs: &[&DVector<f64>]) -> Result<()> {
    for x in xs {
        if x.len() != triple.dim() {
            return Err(Error::LengthMismatch {
                expected: triple.dim(),
                found: x.len(),
            });
        }
    }
    Ok(())
}

/// Default Newton guess for the Hamiltonian map: `q + h v̂`, where `v̂`
/// inverts the continuous Legendre transform when the triple knows its
/// system, otherwise `q`.
fn default_guess(triple: &dyn DiscreteTriple, state: &PhasePoint, h: f64) -> DVector<f64> {
    triple
        .system()
        .filter(|s| !s.is_dirac_only())
        .and_then(|s| s.velocity_from_momentum(&state.q, &state.p).ok())
        .map(|v| &state.q + v * h)
        .unwrap_or_else(|| state.q.clone())
}

/// One step of the forced discrete Hamiltonian map.
pub fn hamiltonian_step(
    triple: &dyn DiscreteTriple,
    state: &PhasePoint,
    h: f64,
    guess: Option<&DVector<f64>>,
    tol: &ToleranceSpec,
) -> Result<PhasePoint> {
    check_dims(triple, &[&state.q, &state.p])?;
    let x0 = match guess {
        Some(g) => g.clone(),
        None => default_guess(triple, state, h),
    };
    let q_next = solve_newton(
        |x| Ok(legendre_minus(triple, &state.q, x, h)? - &state.p),
        &x0,
        tol,
    )?;
    let p_next = legendre_plus(triple, &state.q, &q_next, h)?;
    Ok(PhasePoint::new(q_next, p_next))
}

/// Forced discrete Euler–Lagrange position map `(q_{k−1}, q_k) ↦ q_{k+1}`.
pub fn del_step(
    triple: &dyn DiscreteTriple,
    q_prev: &DVector<f64>,
    q_curr: &DVector<f64>,
    h: f64,
    guess: Option<&DVector<f64>>,
    tol: &ToleranceSpec,
) -> Result<DVector<f64>> {
    check_dims(triple, &[q_prev, q_curr])?;
    let p = legendre_plus(triple, q_prev, q_curr, h)?;
    let x0 = match guess {
        Some(g) => g.clone(),
        None => q_curr * 2.0 - q_prev,
    };
    solve_newton(|x| Ok(legendre_minus(triple, q_curr, x, h)? - &p), &x0, tol)
}

fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.len();
    DVector::from_fn(n + b.len(), |i, _| if i < n { a[i] } else { b[i - n] })
}

fn unstack(z: &DVector<f64>, n: usize) -> (DVector<f64>, DVector<f64>) {
    (
        z.rows(0, n).into_owned(),
        z.rows(n, z.len() - n).into_owned(),
    )
}

fn dirac_inputs(
    triple: &dyn DiscreteTriple,
    dist: &ConstraintDistribution,
    state: &PhasePoint,
) -> Result<()> {
    check_dims(triple, &[&state.q, &state.p])?;
    if dist.dim() != triple.dim() {
        return Err(Error::LengthMismatch {
            expected: triple.dim(),
            found: dist.dim(),
        });
    }
    dist.check_rank(&state.q)
}

/// One step of the forced (+) discrete Lagrange–Dirac equations.
///
/// Unknowns `(q_{k+1}, μ)` solve
/// `p_k + D₁L_d + f_d⁻ − Σ μ_a ω^a(q_k) = 0` and
/// `ω^a(q_k)·R⁻¹_{q_k}(q_{k+1}) = 0`; then `p_{k+1} = D₂L_d + f_d⁺`.
pub fn dirac_plus_step(
    triple: &dyn DiscreteTriple,
    dist: &ConstraintDistribution,
    retr: &Retraction,
    state: &PhasePoint,
    h: f64,
    guess: Option<&DVector<f64>>,
    tol: &ToleranceSpec,
) -> Result<DiracStepRecord> {
    dirac_inputs(triple, dist, state)?;
    let n = triple.dim();
    let q_k = &state.q;
    let w = dist.omega(q_k);
    let x0 = guess.cloned().unwrap_or_else(|| q_k.clone());
    let z = solve_newton(
        |z| {
            let (x, mu) = unstack(z, n);
            let momentum = &state.p - legendre_minus(triple, q_k, &x, h)? - w.tr_mul(&mu);
            let constraint = &w * retr.inverse(q_k, &x, h);
            Ok(stack(&momentum, &constraint))
        },
        &stack(&x0, &DVector::zeros(dist.count())),
        tol,
    )?;
    let (q_next, mu) = unstack(&z, n);
    let p_next = legendre_plus(triple, q_k, &q_next, h)?;
    Ok(DiracStepRecord {
        q_k: q_k.clone(),
        p_k: state.p.clone(),
        q_next,
        p_next,
        mu,
        h,
        variant: DiracVariant::Plus,
    })
}

/// Solves `target + Ω(base)ᵀν = 𝔽^{f−}L_d(base, x)` with
/// `ω_{d−}(base, x) = 0` for `(x, ν)`.
fn minus_solve(
    triple: &dyn DiscreteTriple,
    dist: &ConstraintDistribution,
    retr: &Retraction,
    base: &DVector<f64>,
    target: &DVector<f64>,
    h: f64,
    guess: &DVector<f64>,
    tol: &ToleranceSpec,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = triple.dim();
    let w = dist.omega(base);
    let z = solve_newton(
        |z| {
            let (x, nu) = unstack(z, n);
            let momentum = legendre_minus(triple, base, &x, h)? - target - w.tr_mul(&nu);
            let constraint = dist.omega(&x) * retr.inverse(&x, base, h);
            Ok(stack(&momentum, &constraint))
        },
        &stack(guess, &DVector::zeros(dist.count())),
        tol,
    )?;
    Ok(unstack(&z, n))
}

/// One step of the forced (−) discrete Lagrange–Dirac equations.
///
/// The (−) equations fix `p_k = −D₁L_d(q_k, q_{k+1}) − f_d⁻` and
/// `ω_{d−}(q_k, q_{k+1}) = 0`, while the multipliers enter
/// `p_{k+1} = D₂L_d + f_d⁺ + Σ μ_a ω^a(q_{k+1})`. The multipliers are the
/// ones that let the following step satisfy its own constraint, so each
/// step solves ahead for `q_{k+2}` and returns only `(q_{k+1}, p_{k+1})`.
/// An incoming `p_k` is first moved along `ω^a(q_k)` onto the set where
/// the step is solvable; the record stores the corrected `p_k`. Without
/// constraints this is exactly [`hamiltonian_step`].
pub fn dirac_minus_step(
    triple: &dyn DiscreteTriple,
    dist: &ConstraintDistribution,
    retr: &Retraction,
    state: &PhasePoint,
    h: f64,
    guess: Option<&DVector<f64>>,
    tol: &ToleranceSpec,
) -> Result<DiracStepRecord> {
    dirac_inputs(triple, dist, state)?;
    let q_k = &state.q;
    let x0 = guess.cloned().unwrap_or_else(|| q_k.clone());
    let (q_next, nu) = minus_solve(triple, dist, retr, q_k, &state.p, h, &x0, tol)?;
    let p_k = &state.p + dist.omega(q_k).tr_mul(&nu);
    let plus = legendre_plus(triple, q_k, &q_next, h)?;
    let (p_next, mu) = if dist.count() == 0 {
        (plus, DVector::zeros(0))
    } else {
        let ahead = &q_next * 2.0 - q_k;
        let (_, mu) = minus_solve(triple, dist, retr, &q_next, &plus, h, &ahead, tol)?;
        (&plus + dist.omega(&q_next).tr_mul(&mu), mu)
    };
    Ok(DiracStepRecord {
        q_k: q_k.clone(),
        p_k,
        q_next,
        p_next,
        mu,
        h,
        variant: DiracVariant::Minus,
    })
}

/// Dispatches on the variant.
pub fn dirac_step(
    variant: DiracVariant,
    triple: &dyn DiscreteTriple,
    dist: &ConstraintDistribution,
    retr: &Retraction,
    state: &PhasePoint,
    h: f64,
    guess: Option<&DVector<f64>>,
    tol: &ToleranceSpec,
) -> Result<DiracStepRecord> {
    match variant {
        DiracVariant::Plus => dirac_plus_step(triple, dist, retr, state, h, guess, tol),
        DiracVariant::Minus => dirac_minus_step(triple, dist, retr, state, h, guess, tol),
    }
}

/// Violations of the unpacked Dirac-structure conditions for one record.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    /// Momentum definitions, both endpoints.
    pub momentum: f64,
    /// Discrete constraint `ω_{d±}`.
    pub constraint: f64,
    /// Post-fit residual of the least-squares multipliers plus their
    /// distance from the recorded ones.
    pub multiplier: f64,
    pub tol: f64,
}

impl StructureReport {
    pub fn max_violation(&self) -> f64 {
        self.momentum.max(self.constraint).max(self.multiplier)
    }

    pub fn passed(&self) -> bool {
        self.max_violation() <= self.tol
    }
}

/// Least-squares `μ` with `Ωᵀμ ≈ d`, and the post-fit residual.
fn fit_multipliers(w: &DMatrix<f64>, d: &DVector<f64>) -> (DVector<f64>, f64) {
    if w.nrows() == 0 {
        return (DVector::zeros(0), max_norm(d));
    }
    let normal = w * w.transpose();
    let mu = normal
        .lu()
        .solve(&(w * d))
        .unwrap_or_else(|| DVector::from_element(w.nrows(), f64::NAN));
    let residual = max_norm(&(w.tr_mul(&mu) - d));
    (mu, residual)
}

/// Re-checks a Dirac step record against its defining equations,
/// independently of the Newton solve that produced it.
pub fn verify_dirac_structure(
    record: &DiracStepRecord,
    triple: &dyn DiscreteTriple,
    dist: &ConstraintDistribution,
    retr: &Retraction,
    tol: f64,
) -> Result<StructureReport> {
    let h = record.h;
    let eval = triple.evaluate(&record.q_k, &record.q_next, h)?;
    let plus = eval.legendre_plus();
    let minus = eval.legendre_minus();
    let (fixed, multiplied, w) = match record.variant {
        DiracVariant::Plus => (
            max_norm(&(&record.p_next - &plus)),
            &record.p_k - &minus,
            dist.omega(&record.q_k),
        ),
        DiracVariant::Minus => (
            max_norm(&(&record.p_k - &minus)),
            &record.p_next - &plus,
            dist.omega(&record.q_next),
        ),
    };
    let recorded = max_norm(&(&multiplied - w.tr_mul(&record.mu)));
    let (mu_fit, post_fit) = fit_multipliers(&w, &multiplied);
    let multiplier = if mu_fit.len() == record.mu.len() {
        post_fit.max(max_norm(&(mu_fit - &record.mu)))
    } else {
        f64::INFINITY
    };
    let constraint = max_norm(&record.discrete_constraint(dist, retr));
    let nan_to_inf = |x: f64| if x.is_nan() { f64::INFINITY } else { x };
    Ok(StructureReport {
        momentum: nan_to_inf(fixed.max(recorded)),
        constraint: nan_to_inf(constraint),
        multiplier: nan_to_inf(multiplier),
        tol,
    })
}

/// Canonical symplectic matrix `[[0, I], [−I, 0]]`.
pub fn canonical_symplectic(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        if j == i + n {
            1.0
        } else if i == j + n {
            -1.0
        } else {
            0.0
        }
    })
}

/// `max |JᵀΩJ − Ω|` for the finite-difference Jacobian `J` of one
/// Hamiltonian step. Refuses triples with nonzero discrete forces.
pub fn symplecticity_defect(
    triple: &dyn DiscreteTriple,
    state: &PhasePoint,
    h: f64,
    tol: &ToleranceSpec,
) -> Result<f64> {
    if triple.system().is_some_and(|s| !s.is_unforced()) {
        return Err(Error::ForcedTriple);
    }
    let base = hamiltonian_step(triple, state, h, None, tol)?;
    let eval = triple.evaluate(&state.q, &base.q, h)?;
    if max_norm(&eval.f_plus) > 0.0 || max_norm(&eval.f_minus) > 0.0 {
        return Err(Error::ForcedTriple);
    }
    let n = state.dim();
    let jac = fd_jacobian(
        |z| {
            let s = PhasePoint::from_vector(z);
            Ok(hamiltonian_step(triple, &s, h, Some(&base.q), tol)?.to_vector())
        },
        &state.to_vector(),
        tol,
    )?;
    let omega = canonical_symplectic(n);
    Ok(max_norm_matrix(&(jac.transpose() * &omega * &jac - omega)))
}

fn max_norm_matrix(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

/// Iterates the Hamiltonian map, seeding each Newton solve with the
/// previous displacement. Returns `steps + 1` states.
pub fn integrate_hamiltonian(
    triple: &dyn DiscreteTriple,
    initial: &PhasePoint,
    h: f64,
    steps: usize,
    tol: &ToleranceSpec,
) -> Result<Vec<PhasePoint>> {
    let mut states = Vec::with_capacity(steps + 1);
    states.push(initial.clone());
    for k in 0..steps {
        let guess = (k > 0).then(|| &states[k].q * 2.0 - &states[k - 1].q);
        let next = hamiltonian_step(triple, &states[k], h, guess.as_ref(), tol)?;
        if !next.is_finite() {
            return Err(Error::NonFiniteState);
        }
        states.push(next);
    }
    Ok(states)
}

/// Iterates the DEL map from `(q0, q1)`. Returns `steps + 2` positions.
pub fn integrate_del(
    triple: &dyn DiscreteTriple,
    q0: &DVector<f64>,
    q1: &DVector<f64>,
    h: f64,
    steps: usize,
    tol: &ToleranceSpec,
) -> Result<Vec<DVector<f64>>> {
    let mut qs = vec![q0.clone(), q1.clone()];
    for k in 1..=steps {
        let next = del_step(triple, &qs[k - 1], &qs[k], h, None, tol)?;
        qs.push(next);
    }
    Ok(qs)
}

/// Iterates a Dirac stepper. The Newton guess for each step is the
/// retraction of the previous step's velocity.
pub fn integrate_dirac(
    variant: DiracVariant,
    triple: &dyn DiscreteTriple,
    dist: &ConstraintDistribution,
    retr: &Retraction,
    initial: &PhasePoint,
    h: f64,
    steps: usize,
    tol: &ToleranceSpec,
) -> Result<Vec<DiracStepRecord>> {
    let mut records: Vec<DiracStepRecord> = Vec::with_capacity(steps);
    let mut state = initial.clone();
    for _ in 0..steps {
        let guess = records.last().map(|r| {
            let v = retr.inverse(&r.q_k, &r.q_next, h);
            retr.forward(&r.q_next, &v, h)
        });
        let rec = dirac_step(variant, triple, dist, retr, &state, h, guess.as_ref(), tol)?;
        state = rec.next_state();
        if !state.is_finite() {
            return Err(Error::NonFiniteState);
        }
        records.push(rec);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvp::OneStepMethod;
    use crate::discretization::{
        build_midpoint_triple, build_recipe_triple, sample_pairs, FnTriple,
    };
    use crate::quadrature::QuadratureRule;
    use crate::systems::{damped_oscillator, rlc, ForcedLagrangianSystem, RlcCircuit};

    fn s(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    fn tol() -> ToleranceSpec {
        ToleranceSpec::default()
    }

    fn free_particle() -> ForcedLagrangianSystem {
        ForcedLagrangianSystem::new("free", 1, |_, v| 0.5 * v[0] * v[0])
            .with_lagrangian_gradient(|_, v| (DVector::zeros(1), v.clone()))
            .with_accel(|_, _| DVector::zeros(1))
    }

    fn sho() -> ForcedLagrangianSystem {
        damped_oscillator(1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn legendre_transforms_free_particle() {
        let t = build_recipe_triple(
            &free_particle(),
            &QuadratureRule::trapezoid(),
            OneStepMethod::Rk2,
        )
        .unwrap();
        let p = legendre_plus(&t, &s(0.0), &s(1.0), 1.0).unwrap();
        let m = legendre_minus(&t, &s(0.0), &s(1.0), 1.0).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && (m[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn legendre_transforms_midpoint_sho() {
        let t = build_midpoint_triple(&sho());
        let p = legendre_plus(&t, &s(0.0), &s(1.0), 1.0).unwrap();
        let m = legendre_minus(&t, &s(0.0), &s(1.0), 1.0).unwrap();
        assert!((p[0] - 0.75).abs() < 1e-15);
        assert!((m[0] - 1.25).abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_step_free_particle() {
        let t = build_midpoint_triple(&free_particle());
        let next = hamiltonian_step(&t, &PhasePoint::scalar(0.0, 1.0), 0.5, None, &tol()).unwrap();
        assert!((next.q[0] - 0.5).abs() < 1e-12 && (next.p[0] - 1.0).abs() < 1e-12);
        let rest = PhasePoint::scalar(0.3, 0.0);
        let next = hamiltonian_step(&t, &rest, 0.5, None, &tol()).unwrap();
        assert!((next.q[0] - 0.3).abs() < 1e-14 && next.p[0].abs() < 1e-14);
    }

    #[test]
    fn hamiltonian_step_rejects_degenerate_triples() {
        // Without resistance nothing depends on the resistor velocity.
        let cs = rlc(0.75, 0.0, 3.0).unwrap();
        let t = build_midpoint_triple(&cs.system);
        let state = PhasePoint::new(DVector::from_element(3, 0.1), DVector::zeros(3));
        assert!(matches!(
            hamiltonian_step(&t, &state, 0.05, None, &tol()),
            Err(Error::SingularJacobian { .. })
        ));
    }

    #[test]
    fn del_step_free_particle_and_equilibrium() {
        let t = build_midpoint_triple(&free_particle());
        let q = del_step(&t, &s(0.0), &s(0.5), 0.5, None, &tol()).unwrap();
        assert!((q[0] - 1.0).abs() < 1e-12);
        let t = build_midpoint_triple(&sho());
        let q = del_step(&t, &s(0.0), &s(0.0), 0.1, None, &tol()).unwrap();
        assert!(q[0].abs() < 1e-14);
    }

    #[test]
    fn momentum_matching_along_damped_trajectory() {
        let sys = damped_oscillator(1.0, 1.0, 0.01).unwrap();
        let t =
            build_recipe_triple(&sys, &QuadratureRule::trapezoid(), OneStepMethod::Rk2).unwrap();
        let h = 0.1;
        let qs = integrate_del(&t, &s(1.0), &s(0.995), h, 100, &tol()).unwrap();
        for k in 1..qs.len() - 1 {
            let a = legendre_plus(&t, &qs[k - 1], &qs[k], h).unwrap();
            let b = legendre_minus(&t, &qs[k], &qs[k + 1], h).unwrap();
            assert!(max_norm(&(a - b)) <= 1e-10);
        }
    }

    #[test]
    fn del_and_hamiltonian_maps_agree() {
        let sys = damped_oscillator(1.0, 1.0, 0.01).unwrap();
        let t = build_recipe_triple(&sys, &QuadratureRule::simpson(), OneStepMethod::Rk4).unwrap();
        let h = 0.1;
        let states =
            integrate_hamiltonian(&t, &PhasePoint::scalar(1.0, 0.0), h, 50, &tol()).unwrap();
        let qs = integrate_del(&t, &states[0].q, &states[1].q, h, 49, &tol()).unwrap();
        for (st, q) in states.iter().zip(&qs) {
            assert!(max_norm(&(&st.q - q)) <= 1e-9);
        }
    }

    #[test]
    fn unconstrained_dirac_reduces_to_hamiltonian_map() {
        let sys = damped_oscillator(1.0, 1.0, 0.3).unwrap();
        let t =
            build_recipe_triple(&sys, &QuadratureRule::trapezoid(), OneStepMethod::Rk2).unwrap();
        let dist = ConstraintDistribution::none(1);
        let retr = Retraction::linear();
        for (q, p, h) in sample_pairs(1, 10, 1.0, 0.1, 42) {
            let state = PhasePoint::new(q, p);
            let ham = hamiltonian_step(&t, &state, h, None, &tol()).unwrap();
            for variant in [DiracVariant::Plus, DiracVariant::Minus] {
                let guess = default_guess(&t, &state, h);
                let rec =
                    dirac_step(variant, &t, &dist, &retr, &state, h, Some(&guess), &tol()).unwrap();
                assert_eq!(rec.mu.len(), 0);
                assert!(max_norm(&(&rec.q_next - &ham.q)) <= 1e-10);
                assert!(max_norm(&(&rec.p_next - &ham.p)) <= 1e-10);
                assert_eq!(rec.p_k, state.p);
            }
        }
    }

    fn rlc_initial() -> PhasePoint {
        PhasePoint::new(
            DVector::from_column_slice(&[1.0, 0.0, 0.0]),
            DVector::zeros(3),
        )
    }

    #[test]
    fn rlc_single_steps_satisfy_constraints() {
        let cs = rlc(0.75, 0.1, 3.0).unwrap();
        let t = build_midpoint_triple(&cs.system);
        for variant in [DiracVariant::Plus, DiracVariant::Minus] {
            let rec = dirac_step(
                variant,
                &t,
                &cs.distribution,
                &cs.retraction,
                &rlc_initial(),
                0.05,
                None,
                &tol(),
            )
            .unwrap();
            assert!(max_norm(&rec.discrete_constraint(&cs.distribution, &cs.retraction)) <= 1e-10);
            let d = &rec.q_next - &rec.q_k;
            assert!((d[0] - d[1]).abs() <= 1e-10 && (d[1] - d[2]).abs() <= 1e-10);
            let report =
                verify_dirac_structure(&rec, &t, &cs.distribution, &cs.retraction, 1e-10).unwrap();
            assert!(report.passed(), "{variant}: {report:?}");
        }
    }

    #[test]
    fn rlc_trajectories_follow_the_analytic_charge() {
        let circuit = RlcCircuit::new(0.75, 0.1, 3.0).unwrap();
        let cs = circuit.constrained_system();
        let t = build_midpoint_triple(&cs.system);
        let h = 0.05;
        for variant in [DiracVariant::Plus, DiracVariant::Minus] {
            let records = integrate_dirac(
                variant,
                &t,
                &cs.distribution,
                &cs.retraction,
                &rlc_initial(),
                h,
                1000,
                &tol(),
            )
            .unwrap();
            let worst = records
                .iter()
                .enumerate()
                .map(|(k, r)| {
                    let exact = circuit.capacitor_charge((k + 1) as f64 * h, 1.0).unwrap();
                    (r.q_next[0] - exact).abs()
                })
                .fold(0.0, f64::max);
            assert!(worst <= 0.02, "{variant}: {worst}");
        }
    }

    #[test]
    fn perturbed_record_fails_verification() {
        let cs = rlc(0.75, 0.1, 3.0).unwrap();
        let t = build_midpoint_triple(&cs.system);
        let mut rec = dirac_plus_step(
            &t,
            &cs.distribution,
            &cs.retraction,
            &rlc_initial(),
            0.05,
            None,
            &tol(),
        )
        .unwrap();
        rec.p_next[1] += 1e-3;
        let report =
            verify_dirac_structure(&rec, &t, &cs.distribution, &cs.retraction, 1e-10).unwrap();
        assert!(report.max_violation() >= 9e-4);
        assert!(!report.passed());
    }

    #[test]
    fn constrained_zero_force_matches_unforced_equations() {
        let with_zero_r = rlc(0.75, 0.0, 3.0).unwrap();
        let cs = rlc(0.75, 0.1, 3.0).unwrap();
        let sys = cs.system.clone();
        let unforced = ForcedLagrangianSystem::new("lc", 3, {
            let sys = sys.clone();
            move |q, v| sys.lagrangian(q, v)
        })
        .with_lagrangian_gradient(move |q, v| sys.lagrangian_gradient(q, v).unwrap());
        let a = build_midpoint_triple(&with_zero_r.system);
        let b = build_midpoint_triple(&unforced);
        let mut state = rlc_initial();
        for _ in 0..50 {
            let ra = dirac_plus_step(
                &a,
                &cs.distribution,
                &cs.retraction,
                &state,
                0.05,
                None,
                &tol(),
            )
            .unwrap();
            let rb = dirac_plus_step(
                &b,
                &cs.distribution,
                &cs.retraction,
                &state,
                0.05,
                None,
                &tol(),
            )
            .unwrap();
            assert!(max_norm(&(&ra.q_next - &rb.q_next)) <= 1e-10);
            assert!(max_norm(&(&ra.p_next - &rb.p_next)) <= 1e-10);
            state = ra.next_state();
        }
    }

    #[test]
    fn symplectic_unforced_maps() {
        let free = build_midpoint_triple(&free_particle());
        let mid = build_midpoint_triple(&sho());
        for (q, p, _) in sample_pairs(1, 10, 1.0, 0.1, 3) {
            let state = PhasePoint::new(q, p);
            for h in [0.1, 0.05] {
                assert!(symplecticity_defect(&free, &state, h, &tol()).unwrap() <= 1e-6);
                assert!(symplecticity_defect(&mid, &state, h, &tol()).unwrap() <= 1e-6);
            }
        }
    }

    #[test]
    fn symplecticity_refuses_forced_triples() {
        let t = build_midpoint_triple(&damped_oscillator(1.0, 1.0, 0.01).unwrap());
        assert_eq!(
            symplecticity_defect(&t, &PhasePoint::scalar(1.0, 0.0), 0.1, &tol()),
            Err(Error::ForcedTriple)
        );
        let stub = FnTriple::unforced("drag", 1, |q0: &DVector<f64>, q1: &DVector<f64>, h| {
            0.5 * (q1[0] - q0[0]).powi(2) / h
        })
        .with_forces(|_, _, _| s(-0.1), |_, _, _| s(-0.1));
        assert_eq!(
            symplecticity_defect(&stub, &PhasePoint::scalar(1.0, 0.0), 0.1, &tol()),
            Err(Error::ForcedTriple)
        );
    }

    /// Max energy error over the first 100 steps and over all steps.
    fn energy_errors(sys: &ForcedLagrangianSystem, steps: usize) -> (f64, f64) {
        let t = build_midpoint_triple(sys);
        let states =
            integrate_hamiltonian(&t, &PhasePoint::scalar(1.0, 0.0), 0.1, steps, &tol()).unwrap();
        let energy = |st: &PhasePoint| {
            let v = sys.velocity_from_momentum(&st.q, &st.p).unwrap();
            sys.energy(&st.q, &v).unwrap()
        };
        let e0 = energy(&states[0]);
        let err = |xs: &[PhasePoint]| {
            xs.iter()
                .map(|s| (energy(s) - e0).abs())
                .fold(0.0, f64::max)
        };
        (err(&states[..=100]), err(&states))
    }

    #[test]
    fn sho_energy_has_no_secular_drift() {
        // The midpoint map conserves this quadratic energy up to round-off,
        // so the bound carries a round-off floor.
        let (early, all) = energy_errors(&sho(), 10_000);
        assert!(all <= (2.0 * early).max(1e-12), "{all} vs {early}");
    }

    #[test]
    fn anharmonic_energy_oscillates_without_drift() {
        let quartic = ForcedLagrangianSystem::new("quartic", 1, |q, v| {
            0.5 * v[0] * v[0] - 0.25 * q[0].powi(4)
        })
        .with_lagrangian_gradient(|q, v| (s(-q[0].powi(3)), v.clone()))
        .with_accel(|q, _| s(-q[0].powi(3)))
        .with_energy(|q, v| 0.5 * v[0] * v[0] + 0.25 * q[0].powi(4));
        let (early, all) = energy_errors(&quartic, 10_000);
        assert!(early > 1e-6);
        assert!(all <= 2.0 * early, "{all} vs {early}");
    }

    #[test]
    fn rank_deficient_constraints_rejected() {
        let rows = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        assert!(matches!(
            ConstraintDistribution::constant(rows),
            Err(Error::RankDeficientConstraints { .. })
        ));
        let collapsing = ConstraintDistribution::new(
            2,
            1,
            |q| DMatrix::from_row_slice(1, 2, &[q[0], 0.0]),
            &[DVector::from_element(2, 0.0)],
        );
        assert!(collapsing.is_err());
    }

    #[test]
    fn linear_retraction_round_trip() {
        let r = Retraction::linear();
        for (q, v, h) in sample_pairs(3, 10, 2.0, 0.05, 8) {
            let back = r.inverse(&q, &r.forward(&q, &v, h), h);
            assert!(max_norm(&(back - v)) <= 1e-12);
        }
    }
}
