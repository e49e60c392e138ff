//! Forced variational integrators and forced discrete Lagrange–Dirac
//! integrators.
//!
//! A [`ForcedLagrangianSystem`] describes `L(q, v)` and an external force
//! `f_L(q, v)`. A [`DiscreteTriple`] approximates it by a discrete
//! Lagrangian and two discrete forces, and the steppers in [`integrators`]
//! turn a triple into a one-step map:
//!
//! ```
//! use forced_vi::{
//!     build_recipe_triple, damped_oscillator, integrate_hamiltonian, OneStepMethod, PhasePoint,
//!     QuadratureRule, ToleranceSpec,
//! };
//!
//! let sys = damped_oscillator(1.0, 1.0, 0.01).unwrap();
//! let triple = build_recipe_triple(&sys, &QuadratureRule::simpson(), OneStepMethod::Rk4).unwrap();
//! let states = integrate_hamiltonian(
//!     &triple,
//!     &PhasePoint::scalar(1.0, 0.0),
//!     0.1,
//!     10,
//!     &ToleranceSpec::default(),
//! )
//! .unwrap();
//! let (exact, _) = sys.exact_solution(1.0, &states[0].q, &states[0].p).unwrap();
//! assert!((states[10].q[0] - exact[0]).abs() < 1e-6);
//! ```

#![allow(clippy::too_many_arguments, clippy::neg_cmp_op_on_partial_ord)]

pub mod bvp;
pub mod discretization;
pub mod error;
pub mod harness;
pub mod integrators;
pub mod numkit;
pub mod quadrature;
pub mod systems;

pub use bvp::{integrate_to_nodes, shoot_bvp, BvpSolution, NodeState, OneStepMethod};
pub use discretization::{
    build_midpoint_triple, build_mixed_triple, build_recipe_triple, check_strong_equivalence,
    exact_triple, sample_pairs, DiscreteEval, DiscreteTriple, EquivalenceReport, FnTriple,
    Provenance,
};
pub use error::{Error, Result};
pub use integrators::{
    del_step, dirac_minus_step, dirac_plus_step, dirac_step, hamiltonian_step, integrate_del,
    integrate_dirac, integrate_hamiltonian, legendre_minus, legendre_plus, symplecticity_defect,
    verify_dirac_structure, ConstraintDistribution, DiracStepRecord, DiracVariant, PhasePoint,
    Retraction, StructureReport,
};
pub use numkit::{fd_gradient, fd_jacobian, solve_newton, ToleranceSpec};
pub use quadrature::QuadratureRule;
pub use systems::{
    alpha_oscillator, damped_oscillator, quintic_cancellation, rlc, ConstrainedSystem,
    DampedOscillator, ForcedLagrangianSystem, RlcCircuit,
};
