//! A harmonic oscillator written with a spurious quintic potential that an
//! external force cancels exactly.

use forced_vi::harness::{run_quintic, Experiment, RunConfig};

fn main() -> forced_vi::Result<()> {
    let report = run_quintic(&RunConfig::new(Experiment::Quintic))?;
    for b in [&report.preserving, &report.mixed, &report.plain_sho] {
        let status = match &b.failure {
            Some(f) => format!("stopped after {} steps: {f}", b.completed),
            None => format!("{} steps", b.completed),
        };
        println!(
            "{:<11} {:<44} max error {:.3e}  {status}",
            b.label, b.provenance, b.max_error
        );
    }
    Ok(())
}
