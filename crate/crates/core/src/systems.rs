//! Continuous forced Lagrangian systems and the built-in examples.
//!
//! A [`ForcedLagrangianSystem`] carries a Lagrangian `L(q, v)`, a force
//! `f_L(q, v)`, and, for nondegenerate systems, the explicit acceleration
//! field of the forced Euler–Lagrange equations. Optional analytic
//! gradients replace finite differences wherever they are supplied.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::integrators::{ConstraintDistribution, Retraction};
use crate::numkit::{fd_gradient, fd_jacobian, max_norm, solve_newton, ToleranceSpec};

pub type ScalarField = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;
/// Returns `(∂L/∂q, ∂L/∂v)`.
pub type GradientField =
    Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> (DVector<f64>, DVector<f64>) + Send + Sync>;
/// Returns the `n × 2n` Jacobian of the acceleration with respect to `(q, v)`.
pub type JacobianField = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;
/// Maps `(t, q(0), v(0))` to `(q(t), v(t))`.
pub type FlowMap =
    Arc<dyn Fn(f64, &DVector<f64>, &DVector<f64>) -> (DVector<f64>, DVector<f64>) + Send + Sync>;

/// Step used for the time derivative of `∂L/∂v` in the Euler–Lagrange residual.
const EL_TIME_STEP: f64 = 1e-4;

#[derive(Clone)]
pub struct ForcedLagrangianSystem {
    name: String,
    dim: usize,
    lagrangian: ScalarField,
    force: Option<VectorField>,
    accel: Option<VectorField>,
    lagrangian_gradient: Option<GradientField>,
    accel_jacobian: Option<JacobianField>,
    exact_solution: Option<FlowMap>,
    energy: Option<ScalarField>,
    period: Option<f64>,
    tol: ToleranceSpec,
}

impl fmt::Debug for ForcedLagrangianSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ForcedLagrangianSystem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("forced", &self.force.is_some())
            .field("has_accel", &self.accel.is_some())
            .field("period", &self.period)
            .finish()
    }
}

impl ForcedLagrangianSystem {
    /// An unforced system with no acceleration field; use the `with_*`
    /// builders to add the rest.
    pub fn new<L>(name: impl Into<String>, dim: usize, lagrangian: L) -> Self
    where
        L: Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            dim,
            lagrangian: Arc::new(lagrangian),
            force: None,
            accel: None,
            lagrangian_gradient: None,
            accel_jacobian: None,
            exact_solution: None,
            energy: None,
            period: None,
            tol: ToleranceSpec::default(),
        }
    }

    pub fn with_force<F>(mut self, force: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        self.force = Some(Arc::new(force));
        self
    }

    pub fn with_accel<F>(mut self, accel: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        self.accel = Some(Arc::new(accel));
        self
    }

    pub fn with_lagrangian_gradient<F>(mut self, gradient: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> (DVector<f64>, DVector<f64>) + Send + Sync + 'static,
    {
        self.lagrangian_gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_accel_jacobian<F>(mut self, jacobian: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.accel_jacobian = Some(Arc::new(jacobian));
        self
    }

    pub fn with_exact_solution<F>(mut self, flow: F) -> Self
    where
        F: Fn(f64, &DVector<f64>, &DVector<f64>) -> (DVector<f64>, DVector<f64>)
            + Send
            + Sync
            + 'static,
    {
        self.exact_solution = Some(Arc::new(flow));
        self
    }

    pub fn with_energy<F>(mut self, energy: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        self.energy = Some(Arc::new(energy));
        self
    }

    pub fn with_period(mut self, period: f64) -> Self {
        self.period = Some(period);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn lagrangian(&self, q: &DVector<f64>, v: &DVector<f64>) -> f64 {
        (self.lagrangian)(q, v)
    }

    pub fn is_unforced(&self) -> bool {
        self.force.is_none()
    }

    pub fn force(&self, q: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        match &self.force {
            Some(f) => f(q, v),
            None => DVector::zeros(self.dim),
        }
    }

    /// Degenerate systems carry no acceleration field.
    pub fn is_dirac_only(&self) -> bool {
        self.accel.is_none()
    }

    pub fn accel(&self, q: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        match &self.accel {
            Some(a) => Ok(a(q, v)),
            None => Err(Error::DiracOnly(self.name.clone())),
        }
    }

    /// `∂a/∂(q, v)` as an `n × 2n` matrix.
    pub fn accel_jacobian(&self, q: &DVector<f64>, v: &DVector<f64>) -> Result<DMatrix<f64>> {
        if let Some(j) = &self.accel_jacobian {
            return Ok(j(q, v));
        }
        let accel = self
            .accel
            .as_ref()
            .ok_or_else(|| Error::DiracOnly(self.name.clone()))?;
        let n = self.dim;
        let y = concat(q, v);
        fd_jacobian(
            |y| {
                let (q, v) = split(y, n);
                Ok(accel(&q, &v))
            },
            &y,
            &self.tol,
        )
    }

    /// `(∂L/∂q, ∂L/∂v)`, analytic when supplied.
    pub fn lagrangian_gradient(
        &self,
        q: &DVector<f64>,
        v: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        if let Some(g) = &self.lagrangian_gradient {
            return Ok(g(q, v));
        }
        let dq = fd_gradient(|x| Ok(self.lagrangian(x, v)), q, &self.tol)?;
        let dv = fd_gradient(|x| Ok(self.lagrangian(q, x)), v, &self.tol)?;
        Ok((dq, dv))
    }

    /// Continuous Legendre transform `p = ∂L/∂v`.
    pub fn momentum(&self, q: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.lagrangian_gradient(q, v)?.1)
    }

    /// Inverts the continuous Legendre transform by Newton from `v = 0`.
    /// Fails with `SingularJacobian` for degenerate Lagrangians.
    pub fn velocity_from_momentum(
        &self,
        q: &DVector<f64>,
        p: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        solve_newton(
            |v| Ok(self.momentum(q, v)? - p),
            &DVector::zeros(self.dim),
            &self.tol,
        )
    }

    pub fn exact_solution(
        &self,
        t: f64,
        q0: &DVector<f64>,
        v0: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        match &self.exact_solution {
            Some(flow) => Ok(flow(t, q0, v0)),
            None => Err(Error::Unavailable("exact solution")),
        }
    }

    pub fn has_exact_solution(&self) -> bool {
        self.exact_solution.is_some()
    }

    pub fn energy(&self, q: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        match &self.energy {
            Some(e) => Ok(e(q, v)),
            None => Err(Error::Unavailable("energy")),
        }
    }

    pub fn has_energy(&self) -> bool {
        self.energy.is_some()
    }

    /// Forced Euler–Lagrange residual `∂L/∂q − d/dt(∂L/∂v) + f` along
    /// `(q, v, accel(q, v))`.
    pub fn euler_lagrange_residual(
        &self,
        q: &DVector<f64>,
        v: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let a = self.accel(q, v)?;
        let (dl_dq, _) = self.lagrangian_gradient(q, v)?;
        let eps = EL_TIME_STEP;
        let p_fwd = self.momentum(&(q + v * eps), &(v + &a * eps))?;
        let p_bwd = self.momentum(&(q - v * eps), &(v - &a * eps))?;
        let dp_dt = (p_fwd - p_bwd) / (2.0 * eps);
        Ok(dl_dq - dp_dt + self.force(q, v))
    }

    /// Largest Euler–Lagrange residual over the samples, scaled by the
    /// magnitude of the terms that cancel in it.
    pub fn accel_consistency(&self, samples: &[(DVector<f64>, DVector<f64>)]) -> Result<f64> {
        let mut worst = 0.0_f64;
        for (q, v) in samples {
            let r = self.euler_lagrange_residual(q, v)?;
            let (dl_dq, _) = self.lagrangian_gradient(q, v)?;
            let scale = 1.0_f64
                .max(max_norm(&dl_dq))
                .max(max_norm(&self.force(q, v)));
            worst = worst.max(max_norm(&r) / scale);
        }
        Ok(worst)
    }
}

pub(crate) fn concat(q: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let n = q.len();
    DVector::from_fn(2 * n, |i, _| if i < n { q[i] } else { v[i - n] })
}

pub(crate) fn split(y: &DVector<f64>, n: usize) -> (DVector<f64>, DVector<f64>) {
    (y.rows(0, n).into_owned(), y.rows(n, n).into_owned())
}

fn scalar(x: f64) -> DVector<f64> {
    DVector::from_element(1, x)
}

/// Linear damped oscillator `m q̈ + c q̇ + k q = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedOscillator {
    pub mass: f64,
    pub stiffness: f64,
    pub damping: f64,
}

impl DampedOscillator {
    pub fn new(mass: f64, stiffness: f64, damping: f64) -> Result<Self> {
        if !(mass > 0.0) || !(stiffness > 0.0) || !(damping >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need m > 0, k > 0, c >= 0; got m={mass}, k={stiffness}, c={damping}"
            )));
        }
        if damping * damping >= 4.0 * mass * stiffness {
            return Err(Error::Overdamped);
        }
        Ok(Self {
            mass,
            stiffness,
            damping,
        })
    }

    pub fn decay_rate(&self) -> f64 {
        self.damping / (2.0 * self.mass)
    }

    /// Damped angular frequency `ω_d = sqrt(k/m − (c/2m)²)`.
    pub fn omega_d(&self) -> f64 {
        let g = self.decay_rate();
        (self.stiffness / self.mass - g * g).sqrt()
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega_d()
    }

    /// Closed-form `(q(t), v(t))` of the underdamped motion.
    pub fn exact(&self, t: f64, q0: f64, v0: f64) -> (f64, f64) {
        underdamped(self.decay_rate(), self.omega_d(), t, q0, v0)
    }

    pub fn system(&self) -> ForcedLagrangianSystem {
        let Self {
            mass: m,
            stiffness: k,
            damping: c,
        } = *self;
        let this = *self;
        let mut sys = ForcedLagrangianSystem::new("damped-ho", 1, move |q, v| {
            0.5 * m * v[0] * v[0] - 0.5 * k * q[0] * q[0]
        })
        .with_lagrangian_gradient(move |q, v| (scalar(-k * q[0]), scalar(m * v[0])))
        .with_accel(move |q, v| scalar((-k * q[0] - c * v[0]) / m))
        .with_accel_jacobian(move |_, _| DMatrix::from_row_slice(1, 2, &[-k / m, -c / m]))
        .with_exact_solution(move |t, q0, v0| {
            let (q, v) = this.exact(t, q0[0], v0[0]);
            (scalar(q), scalar(v))
        })
        .with_energy(move |q, v| 0.5 * m * v[0] * v[0] + 0.5 * k * q[0] * q[0])
        .with_period(self.period());
        if c != 0.0 {
            sys = sys.with_force(move |_, v| scalar(-c * v[0]));
        }
        sys
    }
}

fn underdamped(gamma: f64, omega: f64, t: f64, q0: f64, v0: f64) -> (f64, f64) {
    let b = (v0 + gamma * q0) / omega;
    let (s, co) = (omega * t).sin_cos();
    let e = (-gamma * t).exp();
    let q = e * (q0 * co + b * s);
    let v = e * (-gamma * (q0 * co + b * s) + omega * (-q0 * s + b * co));
    (q, v)
}

/// Damped oscillator `L = ½mv² − ½kq²`, `f = −cv`.
pub fn damped_oscillator(
    mass: f64,
    stiffness: f64,
    damping: f64,
) -> Result<ForcedLagrangianSystem> {
    Ok(DampedOscillator::new(mass, stiffness, damping)?.system())
}

fn sho_flow(t: f64, q0: &DVector<f64>, v0: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let (q, v) = underdamped(0.0, 1.0, t, q0[0], v0[0]);
    (scalar(q), scalar(v))
}

/// Harmonic oscillator with the fraction `alpha` of its potential force
/// moved out of the Lagrangian and into the external force:
/// `L = ½v² − (1−α)·½q²`, `f = −αq`. The motion is `q̈ = −q` for every α.
pub fn alpha_oscillator(alpha: f64) -> Result<ForcedLagrangianSystem> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    let keep = 1.0 - alpha;
    let mut sys = ForcedLagrangianSystem::new("alpha-ho", 1, move |q, v| {
        0.5 * v[0] * v[0] - keep * 0.5 * q[0] * q[0]
    })
    .with_lagrangian_gradient(move |q, v| (scalar(-keep * q[0]), scalar(v[0])))
    .with_accel(|q, _| scalar(-q[0]))
    .with_accel_jacobian(|_, _| DMatrix::from_row_slice(1, 2, &[-1.0, 0.0]))
    .with_exact_solution(sho_flow)
    // Representation-independent energy of the common motion.
    .with_energy(|q, v| 0.5 * v[0] * v[0] + 0.5 * q[0] * q[0])
    .with_period(2.0 * PI);
    if alpha != 0.0 {
        sys = sys.with_force(move |q, _| scalar(-alpha * q[0]));
    }
    Ok(sys)
}

/// Harmonic oscillator with an artificial `100 q⁵` potential whose force is
/// cancelled by the external force `+500 q⁴`.
pub fn quintic_cancellation() -> ForcedLagrangianSystem {
    ForcedLagrangianSystem::new("quintic", 1, |q, v| {
        0.5 * v[0] * v[0] - 0.5 * q[0] * q[0] - 100.0 * q[0].powi(5)
    })
    .with_lagrangian_gradient(|q, v| (scalar(-q[0] - 500.0 * q[0].powi(4)), scalar(v[0])))
    .with_force(|q, _| scalar(500.0 * q[0].powi(4)))
    .with_accel(|q, _| scalar(-q[0]))
    .with_accel_jacobian(|_, _| DMatrix::from_row_slice(1, 2, &[-1.0, 0.0]))
    .with_exact_solution(sho_flow)
    .with_energy(|q, v| 0.5 * v[0] * v[0] + 0.5 * q[0] * q[0])
    .with_period(2.0 * PI)
}

/// A degenerate system together with its constraint distribution and the
/// retraction used to discretize the constraints.
#[derive(Debug, Clone)]
pub struct ConstrainedSystem {
    pub system: ForcedLagrangianSystem,
    pub distribution: ConstraintDistribution,
    pub retraction: Retraction,
}

/// Series RLC loop parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlcCircuit {
    pub inductance: f64,
    pub resistance: f64,
    pub capacitance: f64,
}

/// Coordinate layout of the RLC configuration vector.
pub const RLC_CAPACITOR: usize = 0;
pub const RLC_INDUCTOR: usize = 1;
pub const RLC_RESISTOR: usize = 2;

impl RlcCircuit {
    pub fn new(inductance: f64, resistance: f64, capacitance: f64) -> Result<Self> {
        if !(inductance > 0.0) || !(resistance >= 0.0) || !(capacitance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need L > 0, R >= 0, C > 0; got L={inductance}, R={resistance}, C={capacitance}"
            )));
        }
        Ok(Self {
            inductance,
            resistance,
            capacitance,
        })
    }

    pub fn decay_rate(&self) -> f64 {
        self.resistance / (2.0 * self.inductance)
    }

    /// `ω_d = sqrt(1/(LC) − (R/2L)²)`; NaN when overdamped.
    pub fn omega_d(&self) -> f64 {
        let g = self.decay_rate();
        (1.0 / (self.inductance * self.capacitance) - g * g).sqrt()
    }

    /// Analytic capacitor charge of `L q̈ + R q̇ + q/C = 0` starting from
    /// charge `q0` and zero current.
    pub fn capacitor_charge(&self, t: f64, q0: f64) -> Result<f64> {
        let omega = self.omega_d();
        if !omega.is_finite() || omega == 0.0 {
            return Err(Error::Overdamped);
        }
        Ok(underdamped(self.decay_rate(), omega, t, q0, 0.0).0)
    }

    /// The circuit as a Dirac-only constrained system over
    /// `(q^C, q^L, q^R)`.
    pub fn constrained_system(&self) -> ConstrainedSystem {
        let Self {
            inductance: l,
            resistance: r,
            capacitance: c,
        } = *self;
        let system = ForcedLagrangianSystem::new("rlc", 3, move |q, v| {
            0.5 * l * v[RLC_INDUCTOR].powi(2) - q[RLC_CAPACITOR].powi(2) / (2.0 * c)
        })
        .with_lagrangian_gradient(move |q, v| {
            let mut dq = DVector::zeros(3);
            let mut dv = DVector::zeros(3);
            dq[RLC_CAPACITOR] = -q[RLC_CAPACITOR] / c;
            dv[RLC_INDUCTOR] = l * v[RLC_INDUCTOR];
            (dq, dv)
        })
        .with_force(move |_, v| {
            let mut f = DVector::zeros(3);
            f[RLC_RESISTOR] = -r * v[RLC_RESISTOR];
            f
        })
        .with_energy(move |q, v| {
            0.5 * l * v[RLC_INDUCTOR].powi(2) + q[RLC_CAPACITOR].powi(2) / (2.0 * c)
        });
        // ω¹ = dq^L − dq^R, ω² = dq^R − dq^C.
        let rows = DMatrix::from_row_slice(2, 3, &[0.0, 1.0, -1.0, -1.0, 0.0, 1.0]);
        let distribution =
            ConstraintDistribution::constant(rows).expect("Kirchhoff rows are independent");
        ConstrainedSystem {
            system,
            distribution,
            retraction: Retraction::linear(),
        }
    }
}

/// The RLC resonator as a constrained Lagrange–Dirac system.
pub fn rlc(inductance: f64, resistance: f64, capacitance: f64) -> Result<ConstrainedSystem> {
    Ok(RlcCircuit::new(inductance, resistance, capacitance)?.constrained_system())
}

/// Looks up a built-in system by its CLI name. `alpha` is used only by
/// `alpha-ho`.
pub fn by_name(name: &str, alpha: f64) -> Result<ForcedLagrangianSystem> {
    match name {
        "damped-ho" => damped_oscillator(1.0, 1.0, 0.01),
        "alpha-ho" => alpha_oscillator(alpha),
        "quintic" => Ok(quintic_cancellation()),
        "rlc" => Ok(rlc(0.75, 0.1, 3.0)?.system),
        other => Err(Error::UnknownSystem(other.to_string())),
    }
}
