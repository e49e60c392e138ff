//! Recipe, closed-form midpoint and exact discrete triples for the damped
//! oscillator, and the error of each recipe quantity against the exact one.

use forced_vi::harness::discrete_order_study;
use forced_vi::{
    build_midpoint_triple, build_recipe_triple, damped_oscillator, exact_triple, DiscreteTriple,
    OneStepMethod, QuadratureRule,
};
use nalgebra::DVector;

fn main() -> forced_vi::Result<()> {
    let sys = damped_oscillator(1.0, 1.0, 0.01)?;
    let (q0, q1, h) = (
        DVector::from_element(1, 1.0),
        DVector::from_element(1, 1.04),
        0.1,
    );

    let exact = exact_triple(&sys, 1e-13)?;
    let midpoint = build_midpoint_triple(&sys);
    let trap = build_recipe_triple(&sys, &QuadratureRule::trapezoid(), OneStepMethod::Rk2)?;
    let simpson = build_recipe_triple(&sys, &QuadratureRule::simpson(), OneStepMethod::Rk4)?;
    let triples: [&dyn DiscreteTriple; 4] = [&exact, &midpoint, &trap, &simpson];
    for t in triples {
        let e = t.evaluate(&q0, &q1, h)?;
        println!(
            "{:<40} L_d {:+.12e}  f+ {:+.6e}  F+ {:+.10}  F- {:+.10}",
            t.provenance().to_string(),
            e.ld,
            e.f_plus[0],
            e.legendre_plus()[0],
            e.legendre_minus()[0]
        );
    }

    println!("\nlog-log slopes of the error along the exact motion from (q, v) = (1, 0.5):");
    let hs = [0.2, 0.1, 0.05, 0.025];
    for t in [&trap, &simpson] {
        let study = discrete_order_study(&sys, t, &q0, &DVector::from_element(1, 0.5), &hs)?;
        let slopes: Vec<String> = study
            .slopes()
            .into_iter()
            .map(|(name, s)| format!("{name} {s:.2}"))
            .collect();
        println!("{:<24} {}", t.provenance().to_string(), slopes.join("  "));
    }
    Ok(())
}
