//! Global error after five periods of the damped oscillator as the number
//! of steps per period doubles.

use forced_vi::harness::{run_convergence, Experiment, RunConfig};

fn main() -> forced_vi::Result<()> {
    for (quad, bvp) in [("trapezoid", "rk2"), ("simpson", "rk4")] {
        let mut cfg = RunConfig::new(Experiment::Converge);
        cfg.quad = Some(quad.into());
        cfg.bvp = Some(bvp.into());
        let report = run_convergence(&cfg)?;
        println!("{quad} + {bvp} (expected order {})", report.expected_order);
        for row in &report.rows {
            match row.ratio {
                Some(r) => println!("  {:>4}  {:.4e}  {:.3}", row.steps_per_period, row.error, r),
                None => println!("  {:>4}  {:.4e}", row.steps_per_period, row.error),
            }
        }
    }
    Ok(())
}
