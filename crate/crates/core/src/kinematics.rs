//! Lagrange-matrix kinematics and Z-X-Z Euler angles.
//!
//! `ω' = 2 G q̇ = -2 Ġ q` and `q̇ = ½ Gᵀ ω' = ½ Ω q`, with `ω'` the body
//! angular velocity expressed in body axes.

use std::f64::consts::PI;

use nalgebra::Matrix3x4;

use crate::{Error, Mat3, Mat4, Quaternion, Result, Vec3, Vec4};

/// Below this `θ` (or above `π - θ`) Euler angles are reported in the
/// gimbal-locked form.
pub const GIMBAL_EPS: f64 = 1e-6;

/// The 3×4 Lagrange matrix built from a quaternion or its rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangeMatrix(pub Matrix3x4<f64>);

impl LagrangeMatrix {
    pub fn matrix(&self) -> &Matrix3x4<f64> {
        &self.0
    }

    pub fn mul_vec4(&self, v: &Vec4) -> Vec3 {
        self.0 * v
    }

    pub fn transpose_mul(&self, v: &Vec3) -> Vec4 {
        self.0.transpose() * v
    }
}

/// 4×4 skew matrix `Ω(ω')` with `q̇ = ½ Ω q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaMatrix(pub Mat4);

/// Precession `psi`, nutation `theta`, spin `phi` (radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerZXZ {
    pub psi: f64,
    pub theta: f64,
    pub phi: f64,
    /// Set when `theta` is within [`GIMBAL_EPS`] of 0 or π; `psi` is then 0
    /// and the whole azimuth sits in `phi`.
    pub gimbal_lock: bool,
}

impl EulerZXZ {
    /// Wraps `psi` and `phi` into (-π, π]. `theta` must lie in [0, π].
    pub fn new(psi: f64, theta: f64, phi: f64) -> Self {
        Self {
            psi: wrap_angle(psi),
            theta,
            phi: wrap_angle(phi),
            gimbal_lock: theta < GIMBAL_EPS || PI - theta < GIMBAL_EPS,
        }
    }
}

/// `(ψ̇, θ̇, φ̇)` in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerRates {
    pub psid: f64,
    pub thetad: f64,
    pub phid: f64,
}

/// Wraps into (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

fn lagrange_rows(a: [f64; 4]) -> Matrix3x4<f64> {
    let [a0, a1, a2, a3] = a;
    #[rustfmt::skip]
    let m = Matrix3x4::new(
        -a1,  a0,  a3, -a2,
        -a2, -a3,  a0,  a1,
        -a3,  a2, -a1,  a0,
    );
    m
}

pub fn build_g(q: &Quaternion) -> LagrangeMatrix {
    LagrangeMatrix(lagrange_rows(q.to_array()))
}

/// `Ġ`, the same pattern filled from `q̇`.
pub fn build_g_dot(qdot: &Vec4) -> LagrangeMatrix {
    LagrangeMatrix(lagrange_rows([qdot[0], qdot[1], qdot[2], qdot[3]]))
}

pub fn omega_matrix(omega: &Vec3) -> OmegaMatrix {
    let (x, y, z) = (omega.x, omega.y, omega.z);
    #[rustfmt::skip]
    let m = Mat4::new(
        0.0,  -x,  -y,  -z,
          x, 0.0,   z,  -y,
          y,  -z, 0.0,   x,
          z,   y,  -x, 0.0,
    );
    OmegaMatrix(m)
}

/// Cross-product matrix: `omega_tilde(ω) v = ω × v`.
pub fn omega_tilde(omega: &Vec3) -> Mat3 {
    omega.cross_matrix()
}

/// `ω' = 2 G(q) q̇`.
pub fn omega_from_qdot(q: &Quaternion, qdot: &Vec4) -> Result<Vec3> {
    q.check_unit()?;
    Ok(build_g(q).mul_vec4(qdot) * 2.0)
}

/// `ω' = -2 Ġ q`, the form with `q` in evidence.
pub fn omega_from_gdot(q: &Quaternion, qdot: &Vec4) -> Result<Vec3> {
    q.check_unit()?;
    Ok(build_g_dot(qdot).mul_vec4(&q.to_vec4()) * -2.0)
}

/// `q̇ = ½ Gᵀ ω'`.
pub fn qdot_from_omega(q: &Quaternion, omega: &Vec3) -> Result<Vec4> {
    q.check_unit()?;
    Ok(qdot_unchecked(q, omega))
}

/// Kinematic equation without the unit-norm check, for the integrator's
/// intermediate stages.
pub(crate) fn qdot_unchecked(q: &Quaternion, omega: &Vec3) -> Vec4 {
    build_g(q).transpose_mul(omega) * 0.5
}

// Passive elementary rotations.
fn rot_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0)
}

fn rot_x(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, s, 0.0, -s, c)
}

/// Passive matrix inertial → principal frame for the given angles.
pub fn euler_zxz_matrix(psi: f64, theta: f64, phi: f64) -> Mat3 {
    rot_z(phi) * rot_x(theta) * rot_z(psi)
}

/// Euler angles of the rotation taking the inertial frame to the principal
/// frame, where `principal_rotation` maps body coordinates to principal
/// coordinates (its rows are the principal axes).
pub fn quat_to_euler_zxz(q: &Quaternion, principal_rotation: &Mat3) -> EulerZXZ {
    let c = principal_rotation * q.rotation_matrix();
    euler_from_matrix(&c)
}

pub fn euler_from_matrix(c: &Mat3) -> EulerZXZ {
    let theta = c[(0, 2)].hypot(c[(1, 2)]).atan2(c[(2, 2)]);
    if theta < GIMBAL_EPS {
        // C ≈ Rz(ψ+φ)
        EulerZXZ::new(0.0, theta, c[(0, 1)].atan2(c[(0, 0)]))
    } else if PI - theta < GIMBAL_EPS {
        // C ≈ Rz(φ)·Rx(π)·Rz(ψ), depends on φ-ψ only
        EulerZXZ::new(0.0, theta, (-c[(0, 1)]).atan2(c[(0, 0)]))
    } else {
        EulerZXZ::new(c[(2, 0)].atan2(-c[(2, 1)]), theta, c[(0, 2)].atan2(c[(1, 2)]))
    }
}

/// Unit quaternion whose passive rotation matrix is `r`.
pub fn quat_from_rotation_matrix(r: &Mat3) -> Quaternion {
    // R = (q0² - |v|²) I + 2 v vᵀ - 2 q0 [v×]
    let tr = r.trace();
    let q = if tr > r[(0, 0)].max(r[(1, 1)]).max(r[(2, 2)]) {
        let q0 = 0.5 * (1.0 + tr).sqrt();
        let k = 0.25 / q0;
        Quaternion::new(
            q0,
            (r[(1, 2)] - r[(2, 1)]) * k,
            (r[(2, 0)] - r[(0, 2)]) * k,
            (r[(0, 1)] - r[(1, 0)]) * k,
        )
    } else if r[(0, 0)] >= r[(1, 1)] && r[(0, 0)] >= r[(2, 2)] {
        let q1 = 0.5 * (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).sqrt();
        let k = 0.25 / q1;
        Quaternion::new(
            (r[(1, 2)] - r[(2, 1)]) * k,
            q1,
            (r[(0, 1)] + r[(1, 0)]) * k,
            (r[(0, 2)] + r[(2, 0)]) * k,
        )
    } else if r[(1, 1)] >= r[(2, 2)] {
        let q2 = 0.5 * (1.0 - r[(0, 0)] + r[(1, 1)] - r[(2, 2)]).sqrt();
        let k = 0.25 / q2;
        Quaternion::new(
            (r[(2, 0)] - r[(0, 2)]) * k,
            (r[(0, 1)] + r[(1, 0)]) * k,
            q2,
            (r[(1, 2)] + r[(2, 1)]) * k,
        )
    } else {
        let q3 = 0.5 * (1.0 - r[(0, 0)] - r[(1, 1)] + r[(2, 2)]).sqrt();
        let k = 0.25 / q3;
        Quaternion::new(
            (r[(0, 1)] - r[(1, 0)]) * k,
            (r[(0, 2)] + r[(2, 0)]) * k,
            (r[(1, 2)] + r[(2, 1)]) * k,
            q3,
        )
    };
    let q = q.normalized();
    if q.q0 < 0.0 {
        -q
    } else {
        q
    }
}

/// Inverse of [`quat_to_euler_zxz`].
pub fn euler_zxz_to_quat(e: &EulerZXZ, principal_rotation: &Mat3) -> Quaternion {
    let c = euler_zxz_matrix(e.psi, e.theta, e.phi);
    quat_from_rotation_matrix(&(principal_rotation.transpose() * c))
}

/// Body angular velocity (body axes) produced by the given Euler rates.
pub fn body_rates_from_euler(e: &EulerZXZ, rates: &EulerRates, principal_rotation: &Mat3) -> Vec3 {
    let (st, ct) = e.theta.sin_cos();
    let (sp, cp) = e.phi.sin_cos();
    let w = Vec3::new(
        rates.psid * st * sp + rates.thetad * cp,
        rates.psid * st * cp - rates.thetad * sp,
        rates.psid * ct + rates.phid,
    );
    principal_rotation.transpose() * w
}

/// Euler rates from a body angular velocity; singular when `sin θ` vanishes.
pub fn euler_rates_from_body(e: &EulerZXZ, omega: &Vec3, principal_rotation: &Mat3) -> Result<EulerRates> {
    let (st, ct) = e.theta.sin_cos();
    if st.abs() < GIMBAL_EPS {
        return Err(Error::GimbalSingular { sin_theta: st.abs() });
    }
    let w = principal_rotation * omega;
    let (sp, cp) = e.phi.sin_cos();
    let psid = (w.x * sp + w.y * cp) / st;
    Ok(EulerRates {
        psid,
        thetad: w.x * cp - w.y * sp,
        phid: w.z - psid * ct,
    })
}
