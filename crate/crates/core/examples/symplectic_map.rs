//! Symplecticity defect of unforced discrete Hamiltonian maps, and the
//! energy behaviour of forced and unforced runs.

use forced_vi::{
    build_midpoint_triple, build_recipe_triple, damped_oscillator, integrate_hamiltonian,
    symplecticity_defect, DiscreteTriple, OneStepMethod, PhasePoint, QuadratureRule, ToleranceSpec,
};

fn main() -> forced_vi::Result<()> {
    let tol = ToleranceSpec::default();
    let sho = damped_oscillator(1.0, 1.0, 0.0)?;
    let midpoint = build_midpoint_triple(&sho);
    let simpson = build_recipe_triple(&sho, &QuadratureRule::simpson(), OneStepMethod::Rk4)?;
    let state = PhasePoint::scalar(0.8, -0.3);
    let triples: [&dyn DiscreteTriple; 2] = [&midpoint, &simpson];
    for t in triples {
        let d = symplecticity_defect(t, &state, 0.1, &tol)?;
        println!("{:<28} defect {d:.2e}", t.provenance().to_string());
    }

    let damped = damped_oscillator(1.0, 1.0, 0.1)?;
    let forced = build_recipe_triple(&damped, &QuadratureRule::simpson(), OneStepMethod::Rk4)?;
    println!(
        "forced triple: {}",
        symplecticity_defect(&forced, &state, 0.1, &tol).unwrap_err()
    );
    for (name, sys, t) in [("sho", &sho, &simpson), ("damped", &damped, &forced)] {
        let states = integrate_hamiltonian(t, &PhasePoint::scalar(1.0, 0.0), 0.1, 2000, &tol)?;
        let energy = |s: &PhasePoint| sys.energy(&s.q, &s.p).unwrap();
        println!(
            "{name:<7} energy at t=0: {:.10}  t=200: {:.10}",
            energy(&states[0]),
            energy(&states[2000])
        );
    }
    Ok(())
}
