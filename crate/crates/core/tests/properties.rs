use forced_vi::discretization::DiscreteTriple;
use forced_vi::integrators::integrate_del;
use forced_vi::{
    alpha_oscillator, build_midpoint_triple, build_recipe_triple, check_strong_equivalence,
    damped_oscillator, dirac_plus_step, dirac_step, hamiltonian_step, integrate_hamiltonian,
    legendre_minus, legendre_plus, rlc, symplecticity_defect, verify_dirac_structure, DiracVariant,
    OneStepMethod, PhasePoint, QuadratureRule, Retraction, ToleranceSpec,
};
use nalgebra::DVector;
use proptest::prelude::*;

fn s(x: f64) -> DVector<f64> {
    DVector::from_element(1, x)
}

fn tol() -> ToleranceSpec {
    ToleranceSpec::default()
}

fn rule(index: usize) -> QuadratureRule {
    match index % 3 {
        0 => QuadratureRule::midpoint(),
        1 => QuadratureRule::trapezoid(),
        _ => QuadratureRule::simpson(),
    }
}

fn method(index: usize) -> OneStepMethod {
    [OneStepMethod::Rk2, OneStepMethod::Rk4][index % 2]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rules_integrate_polynomials_below_their_order(
        index in 0usize..3,
        coeffs in prop::collection::vec(-5.0f64..5.0, 4),
        h in 0.01f64..2.0,
    ) {
        let r = rule(index);
        let degree = r.order() - 1;
        let poly = |t: f64| (0..=degree).map(|k| coeffs[k] * t.powi(k as i32)).sum::<f64>();
        let exact: f64 = (0..=degree)
            .map(|k| coeffs[k] * h.powi(k as i32 + 1) / (k as f64 + 1.0))
            .sum();
        let approx = r.integrate(h, poly).unwrap();
        prop_assert!((approx - exact).abs() <= 1e-12 * (1.0 + exact.abs()));
    }

    #[test]
    fn composite_simpson_is_exact_on_cubics(
        panels in 1usize..40,
        coeffs in prop::collection::vec(-5.0f64..5.0, 4),
    ) {
        let r = QuadratureRule::composite_simpson(panels).unwrap();
        let poly = |t: f64| coeffs[0] + coeffs[1] * t + coeffs[2] * t * t + coeffs[3] * t.powi(3);
        let exact = coeffs[0] + coeffs[1] / 2.0 + coeffs[2] / 3.0 + coeffs[3] / 4.0;
        prop_assert!((r.integrate(1.0, poly).unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn equal_recipes_preserve_alpha_equivalence(
        alpha in 0.0f64..=1.0,
        beta in 0.0f64..=1.0,
        index in 0usize..6,
        q0 in -2.0f64..2.0,
        q1 in -2.0f64..2.0,
        h in 0.01f64..0.3,
    ) {
        let (r, m) = (rule(index), method(index));
        let a = build_recipe_triple(&alpha_oscillator(alpha).unwrap(), &r, m).unwrap();
        let b = build_recipe_triple(&alpha_oscillator(beta).unwrap(), &r, m).unwrap();
        let report = check_strong_equivalence(&a, &b, &[(s(q0), s(q1), h)], 1e-8).unwrap();
        prop_assert!(report.passed(), "violation {}", report.max_violation());
    }

    #[test]
    fn midpoint_closed_form_equals_linear_recipe(
        q0 in -2.0f64..2.0,
        q1 in -2.0f64..2.0,
        h in 0.01f64..0.5,
        c in 0.0f64..0.5,
    ) {
        let sys = damped_oscillator(1.0, 1.0, c).unwrap();
        let closed = build_midpoint_triple(&sys).evaluate(&s(q0), &s(q1), h).unwrap();
        let recipe = build_recipe_triple(&sys, &QuadratureRule::midpoint(), OneStepMethod::Linear)
            .unwrap()
            .evaluate(&s(q0), &s(q1), h)
            .unwrap();
        prop_assert!((closed.ld - recipe.ld).abs() < 1e-12);
        prop_assert!((&closed.f_plus - &recipe.f_plus).amax() < 1e-12);
        prop_assert!((&closed.f_minus - &recipe.f_minus).amax() < 1e-12);
        prop_assert!((&closed.d1 - &recipe.d1).amax() < 1e-9);
    }

    #[test]
    fn hamiltonian_steps_match_momentum(
        q in -2.0f64..2.0,
        p in -2.0f64..2.0,
        h in 0.02f64..0.2,
    ) {
        let sys = damped_oscillator(1.0, 1.0, 0.05).unwrap();
        let triple = build_recipe_triple(&sys, &QuadratureRule::trapezoid(), OneStepMethod::Rk2).unwrap();
        let state = PhasePoint::scalar(q, p);
        let next = hamiltonian_step(&triple, &state, h, None, &tol()).unwrap();
        let minus = legendre_minus(&triple, &state.q, &next.q, h).unwrap();
        let plus = legendre_plus(&triple, &state.q, &next.q, h).unwrap();
        prop_assert!((minus - &state.p).amax() < 1e-10);
        prop_assert!((plus - &next.p).amax() < 1e-14);
    }

    #[test]
    fn del_and_hamiltonian_trajectories_agree(
        q in -1.5f64..1.5,
        p in -1.5f64..1.5,
    ) {
        let sys = damped_oscillator(1.0, 1.0, 0.01).unwrap();
        let triple = build_recipe_triple(&sys, &QuadratureRule::simpson(), OneStepMethod::Rk4).unwrap();
        let h = 0.1;
        let states = integrate_hamiltonian(&triple, &PhasePoint::scalar(q, p), h, 30, &tol()).unwrap();
        let qs = integrate_del(&triple, &states[0].q, &states[1].q, h, 29, &tol()).unwrap();
        for (a, b) in states.iter().zip(&qs) {
            prop_assert!((&a.q - b).amax() < 1e-9);
        }
    }

    #[test]
    fn rlc_steps_satisfy_the_dirac_structure(
        qc in -1.0f64..1.0,
        ql in -1.0f64..1.0,
        pl in -0.5f64..0.5,
        resistance in 0.0f64..0.5,
        plus in any::<bool>(),
    ) {
        let circuit = rlc(0.75, resistance, 3.0).unwrap();
        let triple = build_midpoint_triple(&circuit.system);
        let variant = if plus { DiracVariant::Plus } else { DiracVariant::Minus };
        let state = PhasePoint::new(
            DVector::from_vec(vec![qc, ql, ql]),
            DVector::from_vec(vec![0.0, pl, 0.0]),
        );
        let rec = dirac_step(
            variant, &triple, &circuit.distribution, &circuit.retraction, &state, 0.05, None, &tol(),
        ).unwrap();
        prop_assert!(rec.discrete_constraint(&circuit.distribution, &circuit.retraction).amax() <= 1e-10);
        let report = verify_dirac_structure(
            &rec, &triple, &circuit.distribution, &circuit.retraction, 1e-8,
        ).unwrap();
        prop_assert!(report.passed(), "violation {}", report.max_violation());
    }

    #[test]
    fn unforced_steps_are_symplectic(
        q in -2.0f64..2.0,
        p in -2.0f64..2.0,
        index in 0usize..6,
    ) {
        let sho = damped_oscillator(1.0, 1.0, 0.0).unwrap();
        let triple = build_recipe_triple(&sho, &rule(index), method(index)).unwrap();
        let defect = symplecticity_defect(&triple, &PhasePoint::scalar(q, p), 0.1, &tol()).unwrap();
        prop_assert!(defect <= 1e-6, "defect {}", defect);
    }

    #[test]
    fn linear_retraction_round_trips(
        q in prop::collection::vec(-5.0f64..5.0, 3),
        v in prop::collection::vec(-5.0f64..5.0, 3),
        h in 0.001f64..1.0,
    ) {
        let r = Retraction::linear();
        let q = DVector::from_vec(q);
        let v = DVector::from_vec(v);
        let back = r.inverse(&q, &r.forward(&q, &v, h), h);
        prop_assert!((back - &v).amax() <= 1e-9 * (1.0 + v.amax()));
    }

    #[test]
    fn phase_points_round_trip(q in prop::collection::vec(-1e6f64..1e6, 1..5)) {
        let n = q.len();
        let p: Vec<f64> = q.iter().map(|x| -2.0 * x).collect();
        let state = PhasePoint::new(DVector::from_vec(q), DVector::from_vec(p));
        prop_assert_eq!(PhasePoint::from_vector(&state.to_vector()), state.clone());
        prop_assert_eq!(state.dim(), n);
    }

    #[test]
    fn damped_energy_never_increases(
        q in -2.0f64..2.0,
        v in -2.0f64..2.0,
        c in 0.0f64..1.0,
    ) {
        let sys = damped_oscillator(1.0, 1.0, c).unwrap();
        let mut last = sys.energy(&s(q), &s(v)).unwrap();
        for k in 1..50 {
            let (qt, vt) = sys.exact_solution(0.1 * k as f64, &s(q), &s(v)).unwrap();
            let e = sys.energy(&qt, &vt).unwrap();
            prop_assert!(e <= last + 1e-12);
            last = e;
        }
    }
}

#[test]
fn m_zero_dirac_plus_equals_hamiltonian_on_a_trajectory() {
    let sys = damped_oscillator(1.0, 1.0, 0.01).unwrap();
    let triple =
        build_recipe_triple(&sys, &QuadratureRule::trapezoid(), OneStepMethod::Rk2).unwrap();
    let none = forced_vi::ConstraintDistribution::none(1);
    let mut state = PhasePoint::scalar(1.0, 0.0);
    for _ in 0..50 {
        let rec = dirac_plus_step(
            &triple,
            &none,
            &Retraction::linear(),
            &state,
            0.1,
            None,
            &tol(),
        )
        .unwrap();
        let ham = hamiltonian_step(&triple, &state, 0.1, None, &tol()).unwrap();
        assert!((&rec.q_next - &ham.q).amax() < 1e-10);
        assert!((&rec.p_next - &ham.p).amax() < 1e-10);
        assert_eq!(rec.mu.len(), 0);
        state = rec.next_state();
    }
}
