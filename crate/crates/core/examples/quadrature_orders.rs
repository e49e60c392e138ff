//! Observed order of each quadrature rule on `∫ eᵗ dt` over `[0, h]`.

use forced_vi::harness::loglog_slope;
use forced_vi::QuadratureRule;

fn main() -> forced_vi::Result<()> {
    let hs = [0.4, 0.2, 0.1, 0.05];
    for rule in [
        QuadratureRule::midpoint(),
        QuadratureRule::trapezoid(),
        QuadratureRule::simpson(),
    ] {
        let mut errors = Vec::new();
        for &h in &hs {
            let approx = rule.integrate(h, f64::exp)?;
            errors.push((approx - h.exp_m1()).abs());
        }
        // One-panel errors scale as h^(order + 1).
        println!(
            "{:<10} order {}  local slope {:.2}",
            rule.name(),
            rule.order(),
            loglog_slope(&hs, &errors)
        );
    }
    Ok(())
}
