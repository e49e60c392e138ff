//! Moves the oscillator potential into the external force in steps of 0.1
//! and compares an equal-rule build with a mixed-rule build.

use forced_vi::harness::{run_alpha_sweep, Experiment, RunConfig};

fn main() -> forced_vi::Result<()> {
    let report = run_alpha_sweep(&RunConfig::new(Experiment::AlphaSweep))?;
    println!(
        "alpha   {:<26}{}",
        report.preserving.provenance, report.mixed.provenance
    );
    for (i, a) in report.alphas.iter().enumerate() {
        println!(
            "{a:.1}     {:<26.3e}{:.3e}",
            report.preserving.deviations[i], report.mixed.deviations[i]
        );
    }
    println!(
        "strong-equivalence violation between alpha = 0 and 1: {:.3e} vs {:.3e}",
        report.preserving.equivalence_violation, report.mixed.equivalence_violation
    );
    Ok(())
}
