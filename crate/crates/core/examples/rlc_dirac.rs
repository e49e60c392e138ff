//! Series RLC loop integrated with both forced discrete Dirac variants.

use forced_vi::harness::{run_rlc_variant, Experiment, RunConfig};
use forced_vi::DiracVariant;

fn main() -> forced_vi::Result<()> {
    for variant in [DiracVariant::Plus, DiracVariant::Minus] {
        let r = run_rlc_variant(&RunConfig::new(Experiment::Rlc), variant)?;
        println!(
            "({variant}) {} steps: max |q_C - exact| {:.3e}, constraint residual {:.1e}, structure violation {:.1e}",
            r.steps, r.max_charge_error, r.max_constraint_residual, r.max_structure_violation
        );
    }
    Ok(())
}
