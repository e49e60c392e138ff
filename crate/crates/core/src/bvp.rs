//! Explicit one-step methods and the shooting solver for the forced
//! Euler–Lagrange boundary-value problem on `[0, h]`.
//!
//! [`shoot_bvp`] returns the states at the quadrature nodes together with
//! their sensitivities to the boundary data. The sensitivities come from
//! the tangent-linear form of the same Runge–Kutta steps that produce the
//! states, so they are the exact derivatives of the computed node states;
//! [`fd_sensitivities`] differentiates the whole shooting solve instead and
//! serves as an independent check.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numkit::{solve_linear, solve_newton, ToleranceSpec};
use crate::systems::{concat, split, ForcedLagrangianSystem};

const EULER_A: &[&[f64]] = &[&[]];
const EULER_B: &[f64] = &[1.0];
const RK2_A: &[&[f64]] = &[&[], &[0.5]];
const RK2_B: &[f64] = &[0.0, 1.0];
const RK4_A: &[&[f64]] = &[&[], &[0.5], &[0.0, 0.5], &[0.0, 0.0, 1.0]];
const RK4_B: &[f64] = &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0];

/// One-step map for the first-order form `q̇ = v`, `v̇ = a(q, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OneStepMethod {
    /// Explicit Euler, order 1.
    Euler,
    /// Explicit midpoint Runge–Kutta, order 2.
    Rk2,
    /// Classical Runge–Kutta, order 4.
    Rk4,
    /// Straight-line motion `q += v·dt` that ignores the acceleration.
    /// Only meaningful as a boundary-value method: the shooting solution
    /// is the chord between the endpoints (first-order accurate).
    Linear,
}

impl OneStepMethod {
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "euler" => Ok(Self::Euler),
            "rk2" => Ok(Self::Rk2),
            "rk4" => Ok(Self::Rk4),
            "linear" => Ok(Self::Linear),
            other => Err(Error::UnknownMethod(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Euler => "euler",
            Self::Rk2 => "rk2",
            Self::Rk4 => "rk4",
            Self::Linear => "linear",
        }
    }

    /// Order `p` of the method as a boundary-value solver.
    pub fn order(&self) -> usize {
        match self {
            Self::Euler | Self::Linear => 1,
            Self::Rk2 => 2,
            Self::Rk4 => 4,
        }
    }

    fn tableau(&self) -> (&'static [&'static [f64]], &'static [f64]) {
        match self {
            Self::Euler | Self::Linear => (EULER_A, EULER_B),
            Self::Rk2 => (RK2_A, RK2_B),
            Self::Rk4 => (RK4_A, RK4_B),
        }
    }

    fn field(&self, sys: &ForcedLagrangianSystem, y: &DVector<f64>) -> Result<DVector<f64>> {
        let n = sys.dim();
        let (q, v) = split(y, n);
        let a = match self {
            Self::Linear => DVector::zeros(n),
            _ => sys.accel(&q, &v)?,
        };
        Ok(concat(&v, &a))
    }

    fn field_jacobian(
        &self,
        sys: &ForcedLagrangianSystem,
        y: &DVector<f64>,
    ) -> Result<DMatrix<f64>> {
        let n = sys.dim();
        let mut jac = DMatrix::zeros(2 * n, 2 * n);
        jac.view_mut((0, n), (n, n)).fill_with_identity();
        if *self != Self::Linear {
            let (q, v) = split(y, n);
            jac.view_mut((n, 0), (n, 2 * n))
                .copy_from(&sys.accel_jacobian(&q, &v)?);
        }
        Ok(jac)
    }

    /// Advances `y = (q, v)` by `dt`, and the tangent matrix `phi` with it
    /// when one is supplied.
    fn advance(
        &self,
        sys: &ForcedLagrangianSystem,
        y: &DVector<f64>,
        phi: Option<&DMatrix<f64>>,
        dt: f64,
    ) -> Result<(DVector<f64>, Option<DMatrix<f64>>)> {
        if dt == 0.0 {
            return Ok((y.clone(), phi.cloned()));
        }
        let (a, b) = self.tableau();
        let mut ks: Vec<DVector<f64>> = Vec::with_capacity(b.len());
        let mut kts: Vec<DMatrix<f64>> = Vec::with_capacity(b.len());
        for row in a {
            let mut yi = y.clone();
            for (j, aij) in row.iter().enumerate() {
                if *aij != 0.0 {
                    yi.axpy(dt * aij, &ks[j], 1.0);
                }
            }
            ks.push(self.field(sys, &yi)?);
            if let Some(phi) = phi {
                let mut pi = phi.clone();
                for (j, aij) in row.iter().enumerate() {
                    if *aij != 0.0 {
                        pi += &kts[j] * (dt * aij);
                    }
                }
                kts.push(self.field_jacobian(sys, &yi)? * pi);
            }
        }
        let mut y_next = y.clone();
        for (bi, k) in b.iter().zip(&ks) {
            if *bi != 0.0 {
                y_next.axpy(dt * bi, k, 1.0);
            }
        }
        if y_next.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteState);
        }
        let phi_next = phi.map(|phi| {
            let mut p = phi.clone();
            for (bi, k) in b.iter().zip(&kts) {
                if *bi != 0.0 {
                    p += k * (dt * bi);
                }
            }
            p
        });
        Ok((y_next, phi_next))
    }

    /// One step of the method from `(q, v)`.
    pub fn step(
        &self,
        sys: &ForcedLagrangianSystem,
        q: &DVector<f64>,
        v: &DVector<f64>,
        dt: f64,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        let (y, _) = self.advance(sys, &concat(q, v), None, dt)?;
        Ok(split(&y, sys.dim()))
    }
}

impl FromStr for OneStepMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::by_name(s)
    }
}

impl fmt::Display for OneStepMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Integrates the initial-value problem for `steps` steps of size `dt`.
pub fn integrate(
    sys: &ForcedLagrangianSystem,
    method: OneStepMethod,
    q0: &DVector<f64>,
    v0: &DVector<f64>,
    dt: f64,
    steps: usize,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let mut y = concat(q0, v0);
    for _ in 0..steps {
        y = method.advance(sys, &y, None, dt)?.0;
    }
    Ok(split(&y, sys.dim()))
}

/// Position and velocity at one quadrature node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub q: DVector<f64>,
    pub v: DVector<f64>,
}

struct Path {
    nodes: Vec<DVector<f64>>,
    node_tangents: Vec<DMatrix<f64>>,
    end: DVector<f64>,
    end_tangent: Option<DMatrix<f64>>,
}

fn check_nodes(nodes: &[f64]) -> Result<()> {
    if nodes.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(Error::InvalidParameter("nodes must lie in [0, 1]".into()));
    }
    if nodes.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter(
            "nodes must be sorted ascending".into(),
        ));
    }
    Ok(())
}

fn integrate_path(
    sys: &ForcedLagrangianSystem,
    q0: &DVector<f64>,
    v0: &DVector<f64>,
    h: f64,
    nodes: &[f64],
    method: OneStepMethod,
    tangent: bool,
) -> Result<Path> {
    let n = sys.dim();
    let mut y = concat(q0, v0);
    let mut phi = tangent.then(|| DMatrix::identity(2 * n, 2 * n));
    let mut t = 0.0;
    let mut out = Path {
        nodes: Vec::with_capacity(nodes.len()),
        node_tangents: Vec::new(),
        end: DVector::zeros(0),
        end_tangent: None,
    };
    for &c in nodes {
        let (y_next, phi_next) = method.advance(sys, &y, phi.as_ref(), (c - t) * h)?;
        y = y_next;
        phi = phi_next;
        t = c;
        out.nodes.push(y.clone());
        if let Some(p) = &phi {
            out.node_tangents.push(p.clone());
        }
    }
    let (y_end, phi_end) = method.advance(sys, &y, phi.as_ref(), (1.0 - t) * h)?;
    out.end = y_end;
    out.end_tangent = phi_end;
    Ok(out)
}

/// States at times `cᵢ h` of the forced Euler–Lagrange flow from `(q0, v0)`,
/// sub-stepping from node to node.
pub fn integrate_to_nodes(
    sys: &ForcedLagrangianSystem,
    q0: &DVector<f64>,
    v0: &DVector<f64>,
    h: f64,
    nodes: &[f64],
    method: OneStepMethod,
) -> Result<Vec<NodeState>> {
    check_nodes(nodes)?;
    let path = integrate_path(sys, q0, v0, h, nodes, method, false)?;
    let n = sys.dim();
    Ok(path
        .nodes
        .iter()
        .map(|y| {
            let (q, v) = split(y, n);
            NodeState { q, v }
        })
        .collect())
}

/// Solution of the boundary-value problem `q(0) = q0`, `q(h) = q1`.
///
/// `sens_q0[i][(j, k)] = ∂qⁱ_j / ∂q0_k`, and likewise for the other
/// sensitivity lists.
#[derive(Debug, Clone)]
pub struct BvpSolution {
    pub v0: DVector<f64>,
    pub node_states: Vec<NodeState>,
    pub sens_q0: Vec<DMatrix<f64>>,
    pub sens_q1: Vec<DMatrix<f64>>,
    pub sens_v_q0: Vec<DMatrix<f64>>,
    pub sens_v_q1: Vec<DMatrix<f64>>,
}

fn check_boundary(
    sys: &ForcedLagrangianSystem,
    q0: &DVector<f64>,
    q1: &DVector<f64>,
    h: f64,
) -> Result<()> {
    for q in [q0, q1] {
        if q.len() != sys.dim() {
            return Err(Error::LengthMismatch {
                expected: sys.dim(),
                found: q.len(),
            });
        }
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "h must be positive, got {h}"
        )));
    }
    Ok(())
}

fn solve_initial_velocity(
    sys: &ForcedLagrangianSystem,
    q0: &DVector<f64>,
    q1: &DVector<f64>,
    h: f64,
    nodes: &[f64],
    method: OneStepMethod,
    tol: &ToleranceSpec,
    guess: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    let n = sys.dim();
    let default_guess = (q1 - q0) / h;
    let guess = guess.unwrap_or(&default_guess);
    solve_newton(
        |v0| {
            let path = integrate_path(sys, q0, v0, h, nodes, method, false)?;
            Ok(path.end.rows(0, n) - q1)
        },
        guess,
        tol,
    )
}

/// Node states of the boundary-value solution, without sensitivities.
pub fn shoot_states(
    sys: &ForcedLagrangianSystem,
    q0: &DVector<f64>,
    q1: &DVector<f64>,
    h: f64,
    nodes: &[f64],
    method: OneStepMethod,
    tol: &ToleranceSpec,
) -> Result<(DVector<f64>, Vec<NodeState>)> {
    check_boundary(sys, q0, q1, h)?;
    check_nodes(nodes)?;
    let v0 = solve_initial_velocity(sys, q0, q1, h, nodes, method, tol, None)?;
    let states = integrate_to_nodes(sys, q0, &v0, h, nodes, method)?;
    Ok((v0, states))
}

/// Shooting solve of the forced Euler–Lagrange boundary-value problem.
///
/// Newton on the terminal-position residual starting from the chord
/// velocity `(q1 − q0)/h`; sensitivities from the tangent-linear steps.
pub fn shoot_bvp(
    sys: &ForcedLagrangianSystem,
    q0: &DVector<f64>,
    q1: &DVector<f64>,
    h: f64,
    nodes: &[f64],
    method: OneStepMethod,
    tol: &ToleranceSpec,
) -> Result<BvpSolution> {
    check_boundary(sys, q0, q1, h)?;
    check_nodes(nodes)?;
    let n = sys.dim();
    let v0 = solve_initial_velocity(sys, q0, q1, h, nodes, method, tol, None)?;
    let path = integrate_path(sys, q0, &v0, h, nodes, method, true)?;
    let end = path.end_tangent.expect("tangent requested");

    // q(h) = q1 fixes v0(q0, q1): ∂v0/∂q1 = Φ_qv⁻¹, ∂v0/∂q0 = −Φ_qv⁻¹ Φ_qq.
    let phi_qq = end.view((0, 0), (n, n)).into_owned();
    let phi_qv = end.view((0, n), (n, n)).into_owned();
    let mut dv0_dq1 = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut e = DVector::zeros(n);
        e[k] = 1.0;
        let col = solve_linear(phi_qv.clone(), &e, &v0)?;
        dv0_dq1.set_column(k, &col);
    }
    let dv0_dq0 = -&dv0_dq1 * phi_qq;

    let mut sol = BvpSolution {
        v0,
        node_states: Vec::with_capacity(nodes.len()),
        sens_q0: Vec::with_capacity(nodes.len()),
        sens_q1: Vec::with_capacity(nodes.len()),
        sens_v_q0: Vec::with_capacity(nodes.len()),
        sens_v_q1: Vec::with_capacity(nodes.len()),
    };
    for (y, phi) in path.nodes.iter().zip(&path.node_tangents) {
        let (q, v) = split(y, n);
        sol.node_states.push(NodeState { q, v });
        let from_q0 = phi.view((0, 0), (2 * n, n));
        let from_v0 = phi.view((0, n), (2 * n, n));
        let d_q0 = from_q0 + from_v0 * &dv0_dq0;
        let d_q1 = from_v0 * &dv0_dq1;
        sol.sens_q0.push(d_q0.rows(0, n).into_owned());
        sol.sens_v_q0.push(d_q0.rows(n, n).into_owned());
        sol.sens_q1.push(d_q1.rows(0, n).into_owned());
        sol.sens_v_q1.push(d_q1.rows(n, n).into_owned());
    }
    Ok(sol)
}

/// Position sensitivities `(∂qⁱ/∂q0, ∂qⁱ/∂q1)` by central differences of
/// the complete shooting solve, with half-width
/// `fd_step_scale^(2/3) · max(1, |component|)`.
pub fn fd_sensitivities(
    sys: &ForcedLagrangianSystem,
    q0: &DVector<f64>,
    q1: &DVector<f64>,
    h: f64,
    nodes: &[f64],
    method: OneStepMethod,
    tol: &ToleranceSpec,
) -> Result<(Vec<DMatrix<f64>>, Vec<DMatrix<f64>>)> {
    check_boundary(sys, q0, q1, h)?;
    check_nodes(nodes)?;
    let n = sys.dim();
    let (v0, _) = shoot_states(sys, q0, q1, h, nodes, method, tol)?;
    let solve = |a: &DVector<f64>, b: &DVector<f64>| -> Result<Vec<NodeState>> {
        let v = solve_initial_velocity(sys, a, b, h, nodes, method, tol, Some(&v0))?;
        integrate_to_nodes(sys, a, &v, h, nodes, method)
    };
    let mut sens_q0 = vec![DMatrix::zeros(n, n); nodes.len()];
    let mut sens_q1 = vec![DMatrix::zeros(n, n); nodes.len()];
    for (which, sens) in [(0, &mut sens_q0), (1, &mut sens_q1)] {
        let base = if which == 0 { q0 } else { q1 };
        for k in 0..n {
            let dx = tol.gradient_step(base[k]);
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[k] += dx;
            minus[k] -= dx;
            let width = plus[k] - minus[k];
            let (sp, sm) = if which == 0 {
                (solve(&plus, q1)?, solve(&minus, q1)?)
            } else {
                (solve(q0, &plus)?, solve(q0, &minus)?)
            };
            for (i, (a, b)) in sp.iter().zip(&sm).enumerate() {
                sens[i].set_column(k, &((&a.q - &b.q) / width));
            }
        }
    }
    Ok((sens_q0, sens_q1))
}
