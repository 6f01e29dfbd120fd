//! Equations of motion.
//!
//! The 13-state model is `{q, ω_c', θ_w', ω_w'}`:
//!
//! ```text
//! q̇    = ½ Gᵀ ω_c
//! ω̇_c  = -Ī_c⁻¹ [ω̃_c (Ī_c ω_c + I_w ω_w) + M_g(q)] - Ī_c⁻¹ τ
//! θ̇_w  = ω_w
//! ω̇_w  = I_w⁻¹ τ
//! ```
//!
//! where `M_g(q) = ½ m̄_c g l G Γ q` is the gravity moment (see
//! [`CubliModel::gravity_moment`]). The exact form keeps the wheel
//! gyroscopic term in the wheel row instead of assuming `ω_w ≫ ω_c`.
//!
//! The symmetric-top equations in Z-X-Z Euler angles serve as an
//! independent reference for the wheels-locked case.

use crate::kinematics::{omega_tilde, qdot_unchecked};
use crate::model::CubliModel;
use crate::{Error, Quaternion, Result, Vec3, Vec4};

/// Quaternion norm tolerance accepted by the right-hand sides. Loose on
/// purpose: intermediate RK stages sit off the unit sphere by about
/// `(dt |ω|)² / 8` before the step is renormalised.
pub const STATE_UNIT_TOL: f64 = 1e-2;

/// Below this `sin θ` the top equations are singular.
pub const TOP_SIN_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub q: Quaternion,
    pub omega_c: Vec3,
    pub theta_w: Vec3,
    pub omega_w: Vec3,
}

impl State {
    pub const DIM: usize = 13;

    pub fn at_rest(q: Quaternion) -> Self {
        Self {
            q,
            omega_c: Vec3::zeros(),
            theta_w: Vec3::zeros(),
            omega_w: Vec3::zeros(),
        }
    }

    pub fn with_omega(q: Quaternion, omega_c: Vec3) -> Self {
        Self {
            omega_c,
            ..Self::at_rest(q)
        }
    }

    pub fn to_array(&self) -> [f64; 13] {
        let q = self.q.to_array();
        [
            q[0],
            q[1],
            q[2],
            q[3],
            self.omega_c.x,
            self.omega_c.y,
            self.omega_c.z,
            self.theta_w.x,
            self.theta_w.y,
            self.theta_w.z,
            self.omega_w.x,
            self.omega_w.y,
            self.omega_w.z,
        ]
    }

    pub fn from_array(a: &[f64; 13]) -> Self {
        Self {
            q: Quaternion::new(a[0], a[1], a[2], a[3]),
            omega_c: Vec3::new(a[4], a[5], a[6]),
            theta_w: Vec3::new(a[7], a[8], a[9]),
            omega_w: Vec3::new(a[10], a[11], a[12]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Time derivative of a [`State`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub qdot: Vec4,
    pub omega_c_dot: Vec3,
    pub theta_w_dot: Vec3,
    pub omega_w_dot: Vec3,
}

impl StateDerivative {
    pub fn to_array(&self) -> [f64; 13] {
        let mut a = [0.0; 13];
        a[..4].copy_from_slice(self.qdot.as_slice());
        a[4..7].copy_from_slice(self.omega_c_dot.as_slice());
        a[7..10].copy_from_slice(self.theta_w_dot.as_slice());
        a[10..].copy_from_slice(self.omega_w_dot.as_slice());
        a
    }

    pub fn from_array(a: &[f64; 13]) -> Self {
        Self {
            qdot: Vec4::new(a[0], a[1], a[2], a[3]),
            omega_c_dot: Vec3::new(a[4], a[5], a[6]),
            theta_w_dot: Vec3::new(a[7], a[8], a[9]),
            omega_w_dot: Vec3::new(a[10], a[11], a[12]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsFlags {
    pub gravity_on: bool,
    /// Wheels held fixed relative to the structure: `ω_w ≡ 0`, `τ ≡ 0`.
    pub wheels_locked: bool,
    pub use_exact_form: bool,
}

impl Default for DynamicsFlags {
    fn default() -> Self {
        Self {
            gravity_on: true,
            wheels_locked: false,
            use_exact_form: false,
        }
    }
}

impl DynamicsFlags {
    pub fn locked() -> Self {
        Self {
            wheels_locked: true,
            ..Self::default()
        }
    }

    pub fn torque_free() -> Self {
        Self {
            gravity_on: false,
            wheels_locked: true,
            use_exact_form: false,
        }
    }
}

/// Motor torque as a function of time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum TorqueProfile {
    #[default]
    Zero,
    Constant(Vec3),
}

impl TorqueProfile {
    pub fn at(&self, _t: f64) -> Vec3 {
        match self {
            TorqueProfile::Zero => Vec3::zeros(),
            TorqueProfile::Constant(v) => *v,
        }
    }
}

fn check_inputs(s: &State, tau: &Vec3) -> Result<()> {
    if !s.is_finite() {
        return Err(Error::NonFinite("state"));
    }
    if !tau.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("torque"));
    }
    let n = s.q.norm();
    if (n - 1.0).abs() > STATE_UNIT_TOL {
        return Err(Error::NonUnitQuaternion { norm: n });
    }
    Ok(())
}

fn gravity(s: &State, model: &CubliModel, flags: &DynamicsFlags) -> Vec3 {
    if flags.gravity_on {
        model.gravity_moment(&s.q)
    } else {
        Vec3::zeros()
    }
}

/// Simplified (default) right-hand side.
pub fn state_derivative(s: &State, tau: &Vec3, model: &CubliModel, flags: &DynamicsFlags) -> Result<StateDerivative> {
    if flags.use_exact_form {
        return state_derivative_exact(s, tau, model, flags);
    }
    check_inputs(s, tau)?;
    let (omega_w, tau) = if flags.wheels_locked {
        (Vec3::zeros(), Vec3::zeros())
    } else {
        (s.omega_w, *tau)
    };
    let w = s.omega_c;
    let h = model.ibar_c * w + model.i_w * omega_w;
    let omega_c_dot = -model.ibar_c_inv * (w.cross(&h) + gravity(s, model, flags)) - model.ibar_c_inv * tau;
    Ok(StateDerivative {
        qdot: qdot_unchecked(&s.q, &w),
        omega_c_dot,
        theta_w_dot: omega_w,
        omega_w_dot: wheel_inverse(model) * tau,
    })
}

fn wheel_inverse(model: &CubliModel) -> crate::Mat3 {
    crate::Mat3::identity() / model.params.i_wxx
}

/// Coupled form without the `ω_w ≫ ω_c` simplification:
///
/// ```text
/// ω̇_c         = -Ī_c⁻¹ ω̃_c[Ī_c ω_c] - Ī_c⁻¹ M_g - Ī_c⁻¹ τ
/// ω̇_c + ω̇_w   = -I_w⁻¹ ω̃_c[I_w(ω_c + ω_w)] + I_w⁻¹ τ
/// ```
pub fn state_derivative_exact(
    s: &State,
    tau: &Vec3,
    model: &CubliModel,
    flags: &DynamicsFlags,
) -> Result<StateDerivative> {
    check_inputs(s, tau)?;
    let w = s.omega_c;
    let (omega_w, tau) = if flags.wheels_locked {
        (Vec3::zeros(), Vec3::zeros())
    } else {
        (s.omega_w, *tau)
    };
    let omega_c_dot =
        -model.ibar_c_inv * (w.cross(&(model.ibar_c * w)) + gravity(s, model, flags)) - model.ibar_c_inv * tau;
    let omega_w_dot = if flags.wheels_locked {
        Vec3::zeros()
    } else {
        let i_w_inv = wheel_inverse(model);
        let total = -i_w_inv * w.cross(&(model.i_w * (w + omega_w))) + i_w_inv * tau;
        total - omega_c_dot
    };
    Ok(StateDerivative {
        qdot: qdot_unchecked(&s.q, &w),
        omega_c_dot,
        theta_w_dot: omega_w,
        omega_w_dot,
    })
}

/// Residual of the structure kinetic equation
/// `Ī_c ω̇_c + ω̃_c[Ī_c ω_c] + I_w(ω̇_c + ω̇_w) + ω̃_c[I_w(ω_c + ω_w)] + M_g`.
///
/// Gravity is always included; `tau` enters only through the wheel equation.
pub fn structure_equation_residual(s: &State, sdot: &StateDerivative, _tau: &Vec3, model: &CubliModel) -> Vec3 {
    let wt = omega_tilde(&s.omega_c);
    model.ibar_c * sdot.omega_c_dot
        + wt * (model.ibar_c * s.omega_c)
        + model.i_w * (sdot.omega_c_dot + sdot.omega_w_dot)
        + wt * (model.i_w * (s.omega_c + s.omega_w))
        + model.gravity_moment(&s.q)
}

/// Residual of the wheel kinetic equation
/// `I_w(ω̇_c + ω̇_w) + ω̃_c[I_w(ω_c + ω_w)] - τ`.
pub fn wheel_equation_residual(s: &State, sdot: &StateDerivative, tau: &Vec3, model: &CubliModel) -> Vec3 {
    model.i_w * (sdot.omega_c_dot + sdot.omega_w_dot) + omega_tilde(&s.omega_c) * (model.i_w * (s.omega_c + s.omega_w))
        - tau
}

/// Euler-angle state of the symmetric top.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TopState {
    pub psi: f64,
    pub theta: f64,
    pub phi: f64,
    pub psid: f64,
    pub thetad: f64,
    pub phid: f64,
}

impl TopState {
    pub fn to_array(&self) -> [f64; 6] {
        [self.psi, self.theta, self.phi, self.psid, self.thetad, self.phid]
    }

    pub fn from_array(a: &[f64; 6]) -> Self {
        Self {
            psi: a[0],
            theta: a[1],
            phi: a[2],
            psid: a[3],
            thetad: a[4],
            phid: a[5],
        }
    }
}

/// Derivative of a [`TopState`]; the angle fields hold the rates and the
/// rate fields hold the accelerations.
pub fn top_derivative(t: &TopState, model: &CubliModel) -> Result<TopState> {
    let (st, ct) = t.theta.sin_cos();
    if st.abs() < TOP_SIN_EPS {
        return Err(Error::GimbalSingular { sin_theta: st.abs() });
    }
    let (i_o, i) = (model.i_o, model.i_3);
    let mgz = model.m_c * model.params.g * model.z_g;
    let spin = t.psid * ct + t.phid;
    // I_o(ψ̈ sθ + 2ψ̇θ̇ cθ) - I θ̇ (ψ̇ cθ + φ̇) = 0
    let psidd = (i * t.thetad * spin - 2.0 * i_o * t.psid * t.thetad * ct) / (i_o * st);
    // I_o(θ̈ - ψ̇² sθ cθ) + I ψ̇ (ψ̇ cθ + φ̇) sθ = m g z_G sθ
    let thetadd = t.psid * t.psid * st * ct + (mgz * st - i * t.psid * spin * st) / i_o;
    // I(φ̈ + ψ̈ cθ - ψ̇θ̇ sθ) = 0
    let phidd = t.psid * t.thetad * st - psidd * ct;
    Ok(TopState {
        psi: t.psid,
        theta: t.thetad,
        phi: t.phid,
        psid: psidd,
        thetad: thetadd,
        phid: phidd,
    })
}

/// Roots of `(I_o - I) ψ̇² cos θ - I ψ̇ φ̇ + m g z_G = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrecessionRoots {
    /// Ascending pair.
    Two(f64, f64),
    /// Degenerate linear case (`cos θ = 0` or `I_o = I`).
    Single(f64),
}

impl PrecessionRoots {
    pub fn slow(&self) -> f64 {
        match *self {
            PrecessionRoots::Two(a, _) => a,
            PrecessionRoots::Single(a) => a,
        }
    }
}

pub fn steady_precession_rates(phid: f64, theta: f64, model: &CubliModel) -> Result<PrecessionRoots> {
    let i = model.i_3;
    let a = (model.i_o - i) * theta.cos();
    let b = -i * phid;
    let c = model.m_c * model.params.g * model.z_g;
    if a.abs() < 1e-14 * (b.abs() + c.abs()) {
        if b == 0.0 {
            return Err(Error::BelowMinimumSpin { discriminant: 0.0 });
        }
        return Ok(PrecessionRoots::Single(-c / b));
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::BelowMinimumSpin { discriminant: disc });
    }
    let k = -0.5 * (b + b.signum() * disc.sqrt());
    let (r1, r2) = if k == 0.0 { (0.0, 0.0) } else { (c / k, k / a) };
    Ok(PrecessionRoots::Two(r1.min(r2), r1.max(r2)))
}

/// `(2 / I) √((I_o - I) cos θ m g z_G)`, or 0 when no minimum exists.
pub fn min_spin_velocity(theta: f64, model: &CubliModel) -> f64 {
    let i = model.i_3;
    let k = (model.i_o - i) * theta.cos() * model.m_c * model.params.g * model.z_g;
    if k <= 0.0 {
        0.0
    } else {
        2.0 / i * k.sqrt()
    }
}
