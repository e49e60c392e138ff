//! Damped Newton root-finding and central finite-difference derivatives.
//!
//! Every solver in the crate goes through [`solve_newton`]; derivative
//! access that is not supplied analytically goes through [`fd_gradient`]
//! and [`fd_jacobian`]. All vectors are dense `nalgebra` vectors.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Maximum number of step halvings per Newton iteration.
pub const MAX_HALVINGS: usize = 20;

/// Tolerances shared by the Newton solver and the difference stencils.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceSpec {
    /// Max-norm residual accepted as converged.
    pub residual_tol: f64,
    pub max_iterations: usize,
    /// Relative step of the Newton Jacobian stencil. Gradients use this
    /// value raised to the 2/3 power (cube root of machine epsilon).
    pub fd_step_scale: f64,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self {
            residual_tol: 1e-12,
            max_iterations: 50,
            fd_step_scale: f64::EPSILON.sqrt(),
        }
    }
}

impl ToleranceSpec {
    pub fn new(residual_tol: f64, max_iterations: usize, fd_step_scale: f64) -> Result<Self> {
        let tol = Self {
            residual_tol,
            max_iterations,
            fd_step_scale,
        };
        tol.validate()?;
        Ok(tol)
    }

    /// Default tolerances with a different residual threshold.
    pub fn with_residual_tol(residual_tol: f64) -> Result<Self> {
        Self::new(residual_tol, 50, f64::EPSILON.sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "residual_tol must be positive, got {}",
                self.residual_tol
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.fd_step_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "fd_step_scale must be positive, got {}",
                self.fd_step_scale
            )));
        }
        Ok(())
    }

    /// Stencil half-width used by the Newton Jacobian at coordinate `x`.
    pub fn newton_step(&self, x: f64) -> f64 {
        self.fd_step_scale * x.abs().max(1.0)
    }

    /// Stencil half-width used by gradients, Jacobians and sensitivities.
    pub fn gradient_step(&self, x: f64) -> f64 {
        self.fd_step_scale.powf(2.0 / 3.0) * x.abs().max(1.0)
    }
}

pub(crate) fn max_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn all_finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Central-difference Jacobian with the given per-coordinate half-width.
///
/// The perturbed points are formed first and the divisor is taken from
/// their actual difference, so the stencil width is exactly representable.
fn central_jacobian<F>(
    f: &mut F,
    x: &DVector<f64>,
    step: impl Fn(f64) -> f64,
) -> Result<DMatrix<f64>>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = x.len();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut rows = None;
    for j in 0..n {
        let dx = step(x[j]);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += dx;
        xm[j] -= dx;
        let width = xp[j] - xm[j];
        let fp = f(&xp)?;
        let fm = f(&xm)?;
        if !all_finite(&fp) || !all_finite(&fm) {
            return Err(Error::NonFiniteValue {
                context: "finite-difference evaluation",
            });
        }
        rows = Some(fp.len());
        cols.push((fp - fm) / width);
    }
    let m = rows.unwrap_or(0);
    Ok(DMatrix::from_fn(m, n, |i, j| cols[j][i]))
}

/// Central-difference gradient of a scalar function.
pub fn fd_gradient<F>(mut f: F, x: &DVector<f64>, tol: &ToleranceSpec) -> Result<DVector<f64>>
where
    F: FnMut(&DVector<f64>) -> Result<f64>,
{
    let mut g = DVector::zeros(x.len());
    for j in 0..x.len() {
        let dx = tol.gradient_step(x[j]);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += dx;
        xm[j] -= dx;
        let width = xp[j] - xm[j];
        let fp = f(&xp)?;
        let fm = f(&xm)?;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::NonFiniteValue {
                context: "finite-difference gradient",
            });
        }
        g[j] = (fp - fm) / width;
    }
    Ok(g)
}

/// Central-difference Jacobian of a vector function; row `i` is the
/// gradient of component `i`.
pub fn fd_jacobian<F>(mut f: F, x: &DVector<f64>, tol: &ToleranceSpec) -> Result<DMatrix<f64>>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    central_jacobian(&mut f, x, |xi| tol.gradient_step(xi))
}

/// Solves the linear system, flagging numerically singular matrices.
pub(crate) fn solve_linear(
    a: DMatrix<f64>,
    b: &DVector<f64>,
    at: &DVector<f64>,
) -> Result<DVector<f64>> {
    let singular = || Error::SingularJacobian {
        iterate: at.iter().copied().collect(),
    };
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.ncols(),
            found: b.len(),
        });
    }
    if a.nrows() == 0 {
        return Ok(DVector::zeros(0));
    }
    let scale = a.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Err(singular());
    }
    let lu = a.lu();
    let u = lu.u();
    let pivot_min = u
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |m, x| m.min(x.abs()));
    if pivot_min <= 1e-14 * scale {
        return Err(singular());
    }
    lu.solve(b).ok_or_else(singular)
}

/// Damped Newton iteration on `residual(x) = 0`.
///
/// The Jacobian is rebuilt every iteration by central differences with
/// half-width `fd_step_scale * max(1, |x_i|)`. A full step that does not
/// reduce the max-norm residual is halved up to [`MAX_HALVINGS`] times.
/// Once the residual is below `residual_tol` one further Newton step is
/// tried and kept only if it does not increase the residual, which drives
/// well-conditioned problems to round-off.
pub fn solve_newton<F>(
    mut residual: F,
    guess: &DVector<f64>,
    tol: &ToleranceSpec,
) -> Result<DVector<f64>>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let mut x = guess.clone();
    if !all_finite(&x) {
        return Err(Error::NonFiniteValue {
            context: "Newton initial guess",
        });
    }
    let mut r = residual(&x)?;
    if !all_finite(&r) {
        return Err(Error::NonFiniteValue {
            context: "Newton residual",
        });
    }
    let mut norm = max_norm(&r);

    for iteration in 0..=tol.max_iterations {
        let converged = norm <= tol.residual_tol;
        if !converged && iteration == tol.max_iterations {
            break;
        }
        let jac = match central_jacobian(&mut residual, &x, |xi| tol.newton_step(xi)) {
            Ok(j) => j,
            Err(_) if converged => return Ok(x),
            Err(e) => return Err(e),
        };
        let dx = match solve_linear(jac, &(-&r), &x) {
            Ok(dx) => dx,
            Err(_) if converged => return Ok(x),
            Err(e) => return Err(e),
        };

        if converged {
            // One polishing step toward round-off, kept only if it helps.
            let trial = &x + &dx;
            if let Ok(rt) = residual(&trial) {
                if all_finite(&rt) && max_norm(&rt) <= norm {
                    return Ok(trial);
                }
            }
            return Ok(x);
        }

        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial = &x + &dx * lambda;
            if let Ok(rt) = residual(&trial) {
                let nt = max_norm(&rt);
                if all_finite(&rt) && nt < norm {
                    x = trial;
                    r = rt;
                    norm = nt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence {
                iterations: iteration + 1,
                residual: norm,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: tol.max_iterations,
        residual: norm,
    })
}
