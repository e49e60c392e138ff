//! Discrete triples `(L_d, f_d⁺, f_d⁻)`.
//!
//! Three constructions are provided:
//!
//! * [`build_recipe_triple`]: quadrature of `L` and `f_L` along a shooting
//!   solution of the forced boundary-value problem. With a rule of order
//!   `q` and a method of order `p` all three maps have order
//!   `min(p + 1, q)`. [`build_mixed_triple`] uses a different rule for the
//!   forces, which breaks equivalence preservation.
//! * [`build_midpoint_triple`]: the closed-form midpoint discretization.
//! * [`exact_triple`]: a refinement oracle for the exact discrete
//!   Lagrangian and forces, for measuring orders only.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bvp::{shoot_bvp, shoot_states, OneStepMethod};
use crate::error::{Error, Result};
use crate::numkit::{fd_gradient, max_norm, ToleranceSpec};
use crate::quadrature::QuadratureRule;
use crate::systems::ForcedLagrangianSystem;

/// How a triple was built.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// One rule and one boundary-value method for all three maps.
    Recipe {
        rule: String,
        method: OneStepMethod,
    },
    /// Separate rules for `L_d` and for `f_d^±`.
    Mixed {
        rule_l: String,
        rule_f: String,
        method: OneStepMethod,
    },
    MidpointClosedForm,
    ExactOracle {
        ref_tol: f64,
    },
    Custom(String),
}

impl Provenance {
    /// Whether the construction maps continuously equivalent forced
    /// representations to strongly equivalent triples.
    pub fn preserves_equivalence(&self) -> bool {
        match self {
            Provenance::Recipe { .. } | Provenance::MidpointClosedForm => true,
            Provenance::ExactOracle { .. } => true,
            Provenance::Mixed { rule_l, rule_f, .. } => rule_l == rule_f,
            Provenance::Custom(_) => false,
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Recipe { rule, method } => write!(f, "recipe({rule}, {method})"),
            Provenance::Mixed {
                rule_l,
                rule_f,
                method,
            } => write!(f, "mixed(L_d: {rule_l}, f_d: {rule_f}, {method})"),
            Provenance::MidpointClosedForm => f.write_str("midpoint-closed-form"),
            Provenance::ExactOracle { ref_tol } => write!(f, "exact-oracle({ref_tol:e})"),
            Provenance::Custom(name) => write!(f, "custom({name})"),
        }
    }
}

/// All discrete quantities at one `(q0, q1, h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteEval {
    pub ld: f64,
    pub d1: DVector<f64>,
    pub d2: DVector<f64>,
    pub f_plus: DVector<f64>,
    pub f_minus: DVector<f64>,
}

impl DiscreteEval {
    /// `𝔽^{f+}L_d = D₂L_d + f_d⁺`.
    pub fn legendre_plus(&self) -> DVector<f64> {
        &self.d2 + &self.f_plus
    }

    /// `𝔽^{f−}L_d = −D₁L_d − f_d⁻`.
    pub fn legendre_minus(&self) -> DVector<f64> {
        -(&self.d1 + &self.f_minus)
    }
}

/// A discrete Lagrangian with its two discrete forces.
///
/// Implementors provide `ld` and the forces; `d1_ld`/`d2_ld` default to
/// central differences of `ld` and may be overridden with exact
/// derivatives.
pub trait DiscreteTriple: Send + Sync {
    fn dim(&self) -> usize;

    fn provenance(&self) -> Provenance;

    fn ld(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<f64>;

    fn f_plus(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<DVector<f64>>;

    fn f_minus(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<DVector<f64>>;

    fn d1_ld(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        fd_d1_ld(self, q0, q1, h)
    }

    fn d2_ld(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        fd_d2_ld(self, q0, q1, h)
    }

    fn evaluate(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<DiscreteEval> {
        Ok(DiscreteEval {
            ld: self.ld(q0, q1, h)?,
            d1: self.d1_ld(q0, q1, h)?,
            d2: self.d2_ld(q0, q1, h)?,
            f_plus: self.f_plus(q0, q1, h)?,
            f_minus: self.f_minus(q0, q1, h)?,
        })
    }

    /// The continuous system behind the triple, when there is one.
    fn system(&self) -> Option<&ForcedLagrangianSystem> {
        None
    }
}

/// `D₁L_d` of any triple, using its exact derivative when it has one.
pub fn d1_ld(
    triple: &dyn DiscreteTriple,
    q0: &DVector<f64>,
    q1: &DVector<f64>,
    h: f64,
) -> Result<DVector<f64>> {
    triple.d1_ld(q0, q1, h)
}

/// `D₂L_d` of any triple, using its exact derivative when it has one.
pub fn d2_ld(
    triple: &dyn DiscreteTriple,
    q0: &DVector<f64>,
    q1: &DVector<f64>,
    h: f64,
) -> Result<DVector<f64>> {
    triple.d2_ld(q0, q1, h)
}

/// `D₁L_d` by central differences of `L_d` alone.
pub fn fd_d1_ld<T: DiscreteTriple + ?Sized>(
    triple: &T,
    q0: &DVector<f64>,
    q1: &DVector<f64>,
    h: f64,
) -> Result<DVector<f64>> {
    fd_gradient(|x| triple.ld(x, q1, h), q0, &ToleranceSpec::default())
}

/// `D₂L_d` by central differences of `L_d` alone.
pub fn fd_d2_ld<T: DiscreteTriple + ?Sized>(
    triple: &T,
    q0: &DVector<f64>,
    q1: &DVector<f64>,
    h: f64,
) -> Result<DVector<f64>> {
    fd_gradient(|x| triple.ld(q0, x, h), q1, &ToleranceSpec::default())
}

/// Triple built from quadrature along a shooting solution.
#[derive(Debug, Clone)]
pub struct RecipeTriple {
    system: ForcedLagrangianSystem,
    rule_l: QuadratureRule,
    rule_f: QuadratureRule,
    method: OneStepMethod,
    mixed: bool,
    tol: ToleranceSpec,
}

/// `L_d = h Σ bᵢ L(qⁱ, vⁱ)`, `f_d^± = h Σ bᵢ f(qⁱ, vⁱ)·∂qⁱ/∂q_{1,0}`, with
/// every node state taken from one shooting solve.
pub fn build_recipe_triple(
    system: &ForcedLagrangianSystem,
    rule: &QuadratureRule,
    method: OneStepMethod,
) -> Result<RecipeTriple> {
    if system.is_dirac_only() {
        return Err(Error::DiracOnly(system.name().to_string()));
    }
    Ok(RecipeTriple {
        system: system.clone(),
        rule_l: rule.clone(),
        rule_f: rule.clone(),
        method,
        mixed: false,
        tol: ToleranceSpec::default(),
    })
}

/// Like [`build_recipe_triple`] but with `rule_l` for `L_d` and `rule_f`
/// for `f_d^±`. Provided to reproduce non-equivalence-preserving
/// constructions.
pub fn build_mixed_triple(
    system: &ForcedLagrangianSystem,
    rule_l: &QuadratureRule,
    rule_f: &QuadratureRule,
    method: OneStepMethod,
) -> Result<RecipeTriple> {
    let mut t = build_recipe_triple(system, rule_l, method)?;
    t.rule_f = rule_f.clone();
    t.mixed = true;
    Ok(t)
}

impl RecipeTriple {
    pub fn with_tolerance(mut self, tol: ToleranceSpec) -> Self {
        self.tol = tol;
        self
    }

    pub fn method(&self) -> OneStepMethod {
        self.method
    }

    pub fn rule_l(&self) -> &QuadratureRule {
        &self.rule_l
    }

    pub fn rule_f(&self) -> &QuadratureRule {
        &self.rule_f
    }

    /// Expected order `min(p + 1, q)` over the rules in use.
    pub fn expected_order(&self) -> usize {
        (self.method.order() + 1)
            .min(self.rule_l.order())
            .min(self.rule_f.order())
    }
}

fn quadrature_eval(
    system: &ForcedLagrangianSystem,
    rule_l: &QuadratureRule,
    rule_f: &QuadratureRule,
    method: OneStepMethod,
    q0: &DVector<f64>,
    q1: &DVector<f64>,
    h: f64,
    tol: &ToleranceSpec,
) -> Result<DiscreteEval> {
    let n = system.dim();
    let sol = shoot_bvp(system, q0, q1, h, rule_l.nodes(), method, tol)?;
    let mut ld = 0.0;
    let mut d1 = DVector::zeros(n);
    let mut d2 = DVector::zeros(n);
    for (i, (b, st)) in rule_l.weights().iter().zip(&sol.node_states).enumerate() {
        let (dl_dq, dl_dv) = system.lagrangian_gradient(&st.q, &st.v)?;
        ld += b * system.lagrangian(&st.q, &st.v);
        d1 += (sol.sens_q0[i].tr_mul(&dl_dq) + sol.sens_v_q0[i].tr_mul(&dl_dv)) * *b;
        d2 += (sol.sens_q1[i].tr_mul(&dl_dq) + sol.sens_v_q1[i].tr_mul(&dl_dv)) * *b;
    }

    let mut f_plus = DVector::zeros(n);
    let mut f_minus = DVector::zeros(n);
    if !system.is_unforced() {
        let separate;
        let sol_f = if rule_f.nodes() == rule_l.nodes() {
            &sol
        } else {
            separate = shoot_bvp(system, q0, q1, h, rule_f.nodes(), method, tol)?;
            &separate
        };
        for (i, (b, st)) in rule_f.weights().iter().zip(&sol_f.node_states).enumerate() {
            let f = system.force(&st.q, &st.v);
            f_plus += sol_f.sens_q1[i].tr_mul(&f) * *b;
            f_minus += sol_f.sens_q0[i].tr_mul(&f) * *b;
        }
    }
    Ok(DiscreteEval {
        ld: h * ld,
        d1: d1 * h,
        d2: d2 * h,
        f_plus: f_plus * h,
        f_minus: f_minus * h,
    })
}

impl DiscreteTriple for RecipeTriple {
    fn dim(&self) -> usize {
        self.system.dim()
    }

    fn provenance(&self) -> Provenance {
        if self.mixed {
            Provenance::Mixed {
                rule_l: self.rule_l.name().to_string(),
                rule_f: self.rule_f.name().to_string(),
                method: self.method,
            }
        } else {
            Provenance::Recipe {
                rule: self.rule_l.name().to_string(),
                method: self.method,
            }
        }
    }

    fn ld(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<f64> {
        let (_, states) = shoot_states(
            &self.system,
            q0,
            q1,
            h,
            self.rule_l.nodes(),
            self.method,
            &self.tol,
        )?;
        let samples: Vec<f64> = states
            .iter()
            .map(|st| self.system.lagrangian(&st.q, &st.v))
            .collect();
        self.rule_l.apply(h, &samples)
    }

    fn f_plus(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        Ok(self.evaluate(q0, q1, h)?.f_plus)
    }

    fn f_minus(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        Ok(self.evaluate(q0, q1, h)?.f_minus)
    }

    fn d1_ld(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        Ok(self.evaluate(q0, q1, h)?.d1)
    }

    fn d2_ld(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        Ok(self.evaluate(q0, q1, h)?.d2)
    }

    fn evaluate(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<DiscreteEval> {
        quadrature_eval(
            &self.system,
            &self.rule_l,
            &self.rule_f,
            self.method,
            q0,
            q1,
            h,
            &self.tol,
        )
    }

    fn system(&self) -> Option<&ForcedLagrangianSystem> {
        Some(&self.system)
    }
}

/// Closed-form midpoint triple:
/// `L_d = h L((q0+q1)/2, (q1−q0)/h)`, `f_d^± = (h/2) f((q0+q1)/2, (q1−q0)/h)`.
#[derive(Debug, Clone)]
pub struct MidpointTriple {
    system: ForcedLagrangianSystem,
}

pub fn build_midpoint_triple(system: &ForcedLagrangianSystem) -> MidpointTriple {
    MidpointTriple {
        system: system.clone(),
    }
}

impl MidpointTriple {
    fn chord(q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> (DVector<f64>, DVector<f64>) {
        ((q0 + q1) * 0.5, (q1 - q0) / h)
    }
}

impl DiscreteTriple for MidpointTriple {
    fn dim(&self) -> usize {
        self.system.dim()
    }

    fn provenance(&self) -> Provenance {
        Provenance::MidpointClosedForm
    }

    fn ld(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<f64> {
        let (qm, vm) = Self::chord(q0, q1, h);
        Ok(h * self.system.lagrangian(&qm, &vm))
    }

    fn f_plus(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        let (qm, vm) = Self::chord(q0, q1, h);
        Ok(self.system.force(&qm, &vm) * (0.5 * h))
    }

    fn f_minus(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        self.f_plus(q0, q1, h)
    }

    fn d1_ld(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        let (qm, vm) = Self::chord(q0, q1, h);
        let (dl_dq, dl_dv) = self.system.lagrangian_gradient(&qm, &vm)?;
        Ok(dl_dq * (0.5 * h) - dl_dv)
    }

    fn d2_ld(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        let (qm, vm) = Self::chord(q0, q1, h);
        let (dl_dq, dl_dv) = self.system.lagrangian_gradient(&qm, &vm)?;
        Ok(dl_dq * (0.5 * h) + dl_dv)
    }

    fn evaluate(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<DiscreteEval> {
        let (qm, vm) = Self::chord(q0, q1, h);
        let (dl_dq, dl_dv) = self.system.lagrangian_gradient(&qm, &vm)?;
        let f = self.system.force(&qm, &vm) * (0.5 * h);
        Ok(DiscreteEval {
            ld: h * self.system.lagrangian(&qm, &vm),
            d1: &dl_dq * (0.5 * h) - &dl_dv,
            d2: dl_dq * (0.5 * h) + dl_dv,
            f_plus: f.clone(),
            f_minus: f,
        })
    }

    fn system(&self) -> Option<&ForcedLagrangianSystem> {
        Some(&self.system)
    }
}

/// Panel counts tried by the exact-quantity oracle.
pub const ORACLE_MIN_PANELS: usize = 4;
pub const ORACLE_MAX_PANELS: usize = 2048;

/// Oracle for the exact discrete Lagrangian and forces: rk4 shooting
/// sub-stepped through a composite Simpson grid whose panel count doubles
/// until successive values agree to `ref_tol` (relative).
#[derive(Debug, Clone)]
pub struct ExactTriple {
    system: ForcedLagrangianSystem,
    ref_tol: f64,
    tol: ToleranceSpec,
}

pub fn exact_triple(system: &ForcedLagrangianSystem, ref_tol: f64) -> Result<ExactTriple> {
    if !(ref_tol >= 1e-13) {
        return Err(Error::InvalidParameter(format!(
            "refinement tolerance must be at least 1e-13, got {ref_tol:e}"
        )));
    }
    if system.is_dirac_only() {
        return Err(Error::DiracOnly(system.name().to_string()));
    }
    Ok(ExactTriple {
        system: system.clone(),
        ref_tol,
        tol: ToleranceSpec::default(),
    })
}

fn relative_change(a: &DVector<f64>, b: &DVector<f64>, floor: f64) -> f64 {
    let scale = max_norm(a).max(max_norm(b)).max(floor);
    if scale == 0.0 {
        0.0
    } else {
        max_norm(&(a - b)) / scale
    }
}

impl ExactTriple {
    /// Converged evaluation and the panel count it needed.
    pub fn evaluate_refined(
        &self,
        q0: &DVector<f64>,
        q1: &DVector<f64>,
        h: f64,
    ) -> Result<(DiscreteEval, usize)> {
        let mut previous: Option<DiscreteEval> = None;
        let mut panels = ORACLE_MIN_PANELS;
        let mut change = f64::INFINITY;
        while panels <= ORACLE_MAX_PANELS {
            let rule = QuadratureRule::composite_simpson(panels)?;
            let eval = quadrature_eval(
                &self.system,
                &rule,
                &rule,
                OneStepMethod::Rk4,
                q0,
                q1,
                h,
                &self.tol,
            )?;
            if let Some(prev) = &previous {
                // Forces and L_d are measured against the momentum scale so
                // that groups near zero do not stall refinement.
                let momentum = max_norm(&eval.d1).max(max_norm(&eval.d2));
                let ld_change = relative_change(
                    &DVector::from_element(1, eval.ld),
                    &DVector::from_element(1, prev.ld),
                    h.abs() * momentum,
                );
                change = ld_change
                    .max(relative_change(&eval.d1, &prev.d1, 0.0))
                    .max(relative_change(&eval.d2, &prev.d2, 0.0))
                    .max(relative_change(&eval.f_plus, &prev.f_plus, momentum))
                    .max(relative_change(&eval.f_minus, &prev.f_minus, momentum));
                if change <= self.ref_tol {
                    return Ok((eval, panels));
                }
            }
            previous = Some(eval);
            panels *= 2;
        }
        Err(Error::RefinementFailed {
            change,
            panels: ORACLE_MAX_PANELS,
        })
    }
}

impl DiscreteTriple for ExactTriple {
    fn dim(&self) -> usize {
        self.system.dim()
    }

    fn provenance(&self) -> Provenance {
        Provenance::ExactOracle {
            ref_tol: self.ref_tol,
        }
    }

    fn ld(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<f64> {
        Ok(self.evaluate(q0, q1, h)?.ld)
    }

    fn f_plus(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        Ok(self.evaluate(q0, q1, h)?.f_plus)
    }

    fn f_minus(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        Ok(self.evaluate(q0, q1, h)?.f_minus)
    }

    fn d1_ld(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        Ok(self.evaluate(q0, q1, h)?.d1)
    }

    fn d2_ld(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        Ok(self.evaluate(q0, q1, h)?.d2)
    }

    fn evaluate(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<DiscreteEval> {
        Ok(self.evaluate_refined(q0, q1, h)?.0)
    }

    fn system(&self) -> Option<&ForcedLagrangianSystem> {
        Some(&self.system)
    }
}

type PairScalar = Arc<dyn Fn(&DVector<f64>, &DVector<f64>, f64) -> f64 + Send + Sync>;
type PairCovector = Arc<dyn Fn(&DVector<f64>, &DVector<f64>, f64) -> DVector<f64> + Send + Sync>;

/// A triple given directly by closures. Derivatives use finite
/// differences of `ld`.
#[derive(Clone)]
pub struct FnTriple {
    name: String,
    dim: usize,
    ld: PairScalar,
    f_plus: PairCovector,
    f_minus: PairCovector,
}

impl fmt::Debug for FnTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnTriple")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish()
    }
}

impl FnTriple {
    /// An unforced triple with the given discrete Lagrangian.
    pub fn unforced<L>(name: impl Into<String>, dim: usize, ld: L) -> Self
    where
        L: Fn(&DVector<f64>, &DVector<f64>, f64) -> f64 + Send + Sync + 'static,
    {
        let zero: PairCovector = Arc::new(move |_, _, _| DVector::zeros(dim));
        Self {
            name: name.into(),
            dim,
            ld: Arc::new(ld),
            f_plus: zero.clone(),
            f_minus: zero,
        }
    }

    pub fn with_forces<P, M>(mut self, f_plus: P, f_minus: M) -> Self
    where
        P: Fn(&DVector<f64>, &DVector<f64>, f64) -> DVector<f64> + Send + Sync + 'static,
        M: Fn(&DVector<f64>, &DVector<f64>, f64) -> DVector<f64> + Send + Sync + 'static,
    {
        self.f_plus = Arc::new(f_plus);
        self.f_minus = Arc::new(f_minus);
        self
    }
}

impl DiscreteTriple for FnTriple {
    fn dim(&self) -> usize {
        self.dim
    }

    fn provenance(&self) -> Provenance {
        Provenance::Custom(self.name.clone())
    }

    fn ld(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<f64> {
        Ok((self.ld)(q0, q1, h))
    }

    fn f_plus(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        Ok((self.f_plus)(q0, q1, h))
    }

    fn f_minus(&self, q0: &DVector<f64>, q1: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        Ok((self.f_minus)(q0, q1, h))
    }
}

/// A boundary pair and step size at which to compare triples.
pub type SamplePair = (DVector<f64>, DVector<f64>, f64);

/// `count` pairs drawn uniformly from `[-bound, bound]^dim`, seeded.
pub fn sample_pairs(dim: usize, count: usize, bound: f64, h: f64, seed: u64) -> Vec<SamplePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let q0 = DVector::from_fn(dim, |_, _| rng.random_range(-bound..=bound));
            let q1 = DVector::from_fn(dim, |_, _| rng.random_range(-bound..=bound));
            (q0, q1, h)
        })
        .collect()
}

/// Maximum violations of the two strong-equivalence identities.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub samples: usize,
    /// `max |f_B⁻ − f_A⁻ − (D₁L_A − D₁L_B)|`
    pub minus_violation: f64,
    /// `max |f_A⁺ − f_B⁺ − (D₂L_B − D₂L_A)|`
    pub plus_violation: f64,
    pub tol: f64,
}

impl EquivalenceReport {
    pub fn max_violation(&self) -> f64 {
        self.minus_violation.max(self.plus_violation)
    }

    pub fn passed(&self) -> bool {
        self.max_violation() <= self.tol
    }
}

/// Checks whether two triples generate the same forced discrete
/// Hamiltonian map on the sampled pairs.
pub fn check_strong_equivalence(
    a: &dyn DiscreteTriple,
    b: &dyn DiscreteTriple,
    samples: &[SamplePair],
    tol: f64,
) -> Result<EquivalenceReport> {
    if a.dim() != b.dim() {
        return Err(Error::LengthMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let mut report = EquivalenceReport {
        samples: samples.len(),
        minus_violation: 0.0,
        plus_violation: 0.0,
        tol,
    };
    for (q0, q1, h) in samples {
        let ea = a.evaluate(q0, q1, *h)?;
        let eb = b.evaluate(q0, q1, *h)?;
        let minus = (&eb.f_minus - &ea.f_minus) - (&ea.d1 - &eb.d1);
        let plus = (&ea.f_plus - &eb.f_plus) - (&eb.d2 - &ea.d2);
        report.minus_violation = report.minus_violation.max(max_norm(&minus));
        report.plus_violation = report.plus_violation.max(max_norm(&plus));
    }
    Ok(report)
}

/// Identity matrix helper used by tests and examples.
pub fn identity(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n)
}
