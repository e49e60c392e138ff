//! Shooting solve of the oscillator boundary-value problem
//! `q(0) = 0`, `q(h) = sin h`, whose exact initial velocity is 1.

use forced_vi::{damped_oscillator, shoot_bvp, OneStepMethod, ToleranceSpec};
use nalgebra::DVector;

fn main() -> forced_vi::Result<()> {
    let sho = damped_oscillator(1.0, 1.0, 0.0)?;
    let h = 0.5;
    let q0 = DVector::from_element(1, 0.0);
    let q1 = DVector::from_element(1, f64::sin(h));
    for method in [OneStepMethod::Euler, OneStepMethod::Rk2, OneStepMethod::Rk4] {
        let sol = shoot_bvp(
            &sho,
            &q0,
            &q1,
            h,
            &[0.0, 0.5, 1.0],
            method,
            &ToleranceSpec::default(),
        )?;
        let mid = &sol.node_states[1];
        println!(
            "{:<5} v0 = {:.12}  q(h/2) = {:.12} (exact {:.12})  dq(h/2)/dq1 = {:.6}",
            method.name(),
            sol.v0[0],
            mid.q[0],
            f64::sin(h / 2.0),
            sol.sens_q1[1][(0, 0)]
        );
    }
    Ok(())
}
