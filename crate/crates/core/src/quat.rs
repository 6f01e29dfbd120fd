//! Quaternion algebra, scalar-first `[q0, q1, q2, q3]`.
//!
//! Rotations follow the frame-transformation (passive) convention: for a
//! vector `r` fixed in the inertial frame, `r' = q̄ ∘ r ∘ q` gives its
//! coordinates in the frame rotated by `q`. None of the algebra here
//! renormalises implicitly.

use std::ops::{Mul, Neg};

use crate::{Error, Mat3, Result, Vec4};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Tolerance on `|q| - 1` for quaternions used as rotations.
pub const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub q0: f64,
    pub qv: Vec3,
}

impl Quaternion {
    pub const fn new(q0: f64, q1: f64, q2: f64, q3: f64) -> Self {
        Self {
            q0,
            qv: Vec3::new(q1, q2, q3),
        }
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 0.0)
    }

    /// Quaternion with zero real part carrying `v`.
    pub fn pure(v: Vec3) -> Self {
        Self { q0: 0.0, qv: v }
    }

    pub fn from_vec4(v: &Vec4) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_vec4(&self) -> Vec4 {
        Vec4::new(self.q0, self.qv.x, self.qv.y, self.qv.z)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.q0, self.qv.x, self.qv.y, self.qv.z]
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn norm_squared(&self) -> f64 {
        self.q0 * self.q0 + self.qv.norm_squared()
    }

    pub fn conjugate(&self) -> Self {
        Self {
            q0: self.q0,
            qv: -self.qv,
        }
    }

    /// Hamilton product `self ∘ rhs`.
    pub fn product(&self, rhs: &Self) -> Self {
        Self {
            q0: self.q0 * rhs.q0 - self.qv.dot(&rhs.qv),
            qv: rhs.qv * self.q0 + self.qv * rhs.q0 + self.qv.cross(&rhs.qv),
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            q0: self.q0 * k,
            qv: self.qv * k,
        }
    }

    pub fn normalized(&self) -> Self {
        self.scale(1.0 / self.norm())
    }

    pub fn is_finite(&self) -> bool {
        self.q0.is_finite() && self.qv.iter().all(|c| c.is_finite())
    }

    /// Fails unless `||q| - 1| <= UNIT_TOL`.
    pub fn check_unit(&self) -> Result<()> {
        self.check_unit_within(UNIT_TOL)
    }

    pub fn check_unit_within(&self, tol: f64) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() <= tol {
            Ok(())
        } else {
            Err(Error::NonUnitQuaternion { norm: n })
        }
    }

    /// The passive rotation matrix `R` with `R r = vec(q̄ ∘ r ∘ q)`.
    ///
    /// Defined for any `q`; it is orthonormal only when `q` is unit.
    pub fn rotation_matrix(&self) -> Mat3 {
        let (q0, v) = (self.q0, self.qv);
        let skew = crate::kinematics::omega_tilde(&v);
        Mat3::identity() * (q0 * q0 - v.norm_squared()) + v * v.transpose() * 2.0 - skew * (2.0 * q0)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, rhs: Quaternion) -> Quaternion {
        self.product(&rhs)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;

    fn neg(self) -> Quaternion {
        self.scale(-1.0)
    }
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::identity()
    }
}

/// A unit eigenaxis and a rotation angle in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    axis: Vec3,
    angle: f64,
}

impl AxisAngle {
    /// Accepts an axis within `UNIT_TOL` of unit length and stores it
    /// normalised.
    pub fn new(axis: Vec3, angle: f64) -> Result<Self> {
        let n = axis.norm();
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::NonUnitAxis { norm: n });
        }
        Ok(Self { axis: axis / n, angle })
    }

    /// Normalises `axis` first; fails only for a zero or non-finite axis.
    pub fn from_unnormalized(axis: Vec3, angle: f64) -> Result<Self> {
        let n = axis.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NonUnitAxis { norm: n });
        }
        Self::new(axis / n, angle)
    }

    pub fn axis(&self) -> Vec3 {
        self.axis
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }
}

pub fn quat_product(a: &Quaternion, b: &Quaternion) -> Quaternion {
    a.product(b)
}

pub fn conjugate(q: &Quaternion) -> Quaternion {
    q.conjugate()
}

/// `[cos(φ/2), ê sin(φ/2)]`.
pub fn from_axis_angle(a: &AxisAngle) -> Quaternion {
    let (s, c) = (0.5 * a.angle).sin_cos();
    Quaternion { q0: c, qv: a.axis * s }
}

/// Coordinates of the fixed vector `r` in the frame rotated by `q`.
pub fn rotate_passive(r: &Vec3, q: &Quaternion) -> Result<Vec3> {
    q.check_unit()?;
    Ok((q.conjugate() * Quaternion::pure(*r) * *q).qv)
}

/// Inverse of [`rotate_passive`]: `q ∘ r' ∘ q̄`.
pub fn rotate_passive_inverse(r_body: &Vec3, q: &Quaternion) -> Result<Vec3> {
    q.check_unit()?;
    Ok((*q * Quaternion::pure(*r_body) * q.conjugate()).qv)
}

/// Rodrigues' formula in the passive sign convention:
/// `(1 - cos φ)(r·ê)ê + cos φ r + sin φ (r × ê)`.
pub fn rodrigues(r: &Vec3, axis: &Vec3, phi: f64) -> Result<Vec3> {
    let n = axis.norm();
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::NonUnitAxis { norm: n });
    }
    let (s, c) = phi.sin_cos();
    Ok(axis * ((1.0 - c) * r.dot(axis)) + r * c + r.cross(axis) * s)
}
