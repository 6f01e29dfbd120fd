//! Physical parameters and derived constants.
//!
//! Everything is expressed in the body frame `x'y'z'` with origin at the
//! pivot vertex `O`; the cube occupies the positive octant, so its diagonal
//! `[1,1,1]/√3` points from the pivot through the centre of mass.

use std::path::Path;

use crate::kinematics::build_g;
use crate::quat::{from_axis_angle, AxisAngle};
use crate::{kv, Error, Mat3, Mat4, Quaternion, Result, Vec3};

/// Raw physical parameters. Defaults reproduce the reference prototype.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubliParams {
    /// Structure side length (m).
    pub l: f64,
    /// Structure mass (kg).
    pub m_s: f64,
    /// Mass of each wheel (kg).
    pub m_w: f64,
    /// Structure central moment of inertia (kg·m²), same about every axis.
    pub i_sxx: f64,
    /// Wheel moment about its spin axis (kg·m²).
    pub i_wxx: f64,
    /// Wheel moment about a transverse axis (kg·m²).
    pub i_wyy: f64,
    /// Gravitational acceleration magnitude (m/s²).
    pub g: f64,
}

impl Default for CubliParams {
    fn default() -> Self {
        Self {
            l: 0.15,
            m_s: 0.40,
            m_w: 0.15,
            i_sxx: 2e-3,
            i_wxx: 1e-4,
            i_wyy: 4e-5,
            g: 9.81,
        }
    }
}

impl CubliParams {
    pub const KEYS: [&'static str; 7] = [
        "side_length",
        "mass_structure",
        "mass_wheel",
        "inertia_structure_xx",
        "inertia_wheel_axial",
        "inertia_wheel_transverse",
        "gravity",
    ];

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("side_length", self.l),
            ("mass_structure", self.m_s),
            ("mass_wheel", self.m_w),
            ("inertia_structure_xx", self.i_sxx),
            ("inertia_wheel_axial", self.i_wxx),
            ("inertia_wheel_transverse", self.i_wyy),
            ("gravity", self.g),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        if self.i_wxx <= self.i_wyy {
            return Err(Error::InvalidParameter {
                name: "inertia_wheel_axial",
                reason: "must exceed inertia_wheel_transverse".into(),
            });
        }
        Ok(())
    }

    /// Parses a parameter file; missing keys keep their default.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut p = Self::default();
        for e in kv::parse(text)? {
            let v = e.f64()?;
            match e.key.as_str() {
                "side_length" => p.l = v,
                "mass_structure" => p.m_s = v,
                "mass_wheel" => p.m_w = v,
                "inertia_structure_xx" => p.i_sxx = v,
                "inertia_wheel_axial" => p.i_wxx = v,
                "inertia_wheel_transverse" => p.i_wyy = v,
                "gravity" => p.g = v,
                _ => {
                    return Err(Error::UnknownKey {
                        key: e.key,
                        line: e.line,
                    })
                }
            }
        }
        p.validate()?;
        Ok(p)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_kv_str(&text)
    }

    pub fn to_kv_string(&self) -> String {
        let vals = [self.l, self.m_s, self.m_w, self.i_sxx, self.i_wxx, self.i_wyy, self.g];
        Self::KEYS
            .iter()
            .zip(vals)
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

/// Derived constants of the assembled cube.
#[derive(Debug, Clone, PartialEq)]
pub struct CubliModel {
    pub params: CubliParams,
    /// Total inertia at `O` minus the wheels' axial moments.
    pub ibar_c: Mat3,
    pub ibar_c_inv: Mat3,
    /// `diag(I_wxx, I_wxx, I_wxx)`.
    pub i_w: Mat3,
    /// Centre of mass relative to `O`.
    pub r_c: Vec3,
    /// `m_s + 3 m_w`.
    pub m_c: f64,
    /// `m_s + 2 m_w`.
    pub mbar_c: f64,
    /// `|r_c|`.
    pub z_g: f64,
    pub gamma: Mat4,
    /// Rows are the principal axes in body coordinates; row 3 is the diagonal.
    pub principal_rotation: Mat3,
    /// Doubly degenerate transverse principal moment.
    pub i_o: f64,
    /// Principal moment about the diagonal.
    pub i_3: f64,
    /// Inertial gravity vector `[0, 0, g]`.
    pub g_vec: Vec3,
    /// Structure and wheel inertias at `O`, kept for inspection.
    pub i_s_o: Mat3,
    pub i_w_o: [Mat3; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumSet {
    pub q_s: Quaternion,
    pub q_u: Quaternion,
}

/// Huygens–Steiner: `I_G + m (|r|² I - r rᵀ)`.
pub fn parallel_axis(i_g: &Mat3, m: f64, r: &Vec3) -> Result<Mat3> {
    if m < 0.0 {
        return Err(Error::InvalidParameter {
            name: "mass",
            reason: format!("must be >= 0, got {m}"),
        });
    }
    Ok(i_g + (Mat3::identity() * r.norm_squared() - r * r.transpose()) * m)
}

#[rustfmt::skip]
pub fn gamma_matrix() -> Mat4 {
    Mat4::new(
         1.0,  1.0, -1.0, 0.0,
         1.0, -1.0,  0.0, 1.0,
        -1.0,  0.0, -1.0, 1.0,
         0.0,  1.0,  1.0, 1.0,
    )
}

pub fn build_model(p: &CubliParams) -> Result<CubliModel> {
    p.validate()?;
    let h = 0.5 * p.l;
    let r_s = Vec3::repeat(h);
    let r_w = [Vec3::new(0.0, h, h), Vec3::new(h, 0.0, h), Vec3::new(h, h, 0.0)];
    let i_w_g = [
        Mat3::from_diagonal(&Vec3::new(p.i_wxx, p.i_wyy, p.i_wyy)),
        Mat3::from_diagonal(&Vec3::new(p.i_wyy, p.i_wxx, p.i_wyy)),
        Mat3::from_diagonal(&Vec3::new(p.i_wyy, p.i_wyy, p.i_wxx)),
    ];
    let i_s_o = parallel_axis(&(Mat3::identity() * p.i_sxx), p.m_s, &r_s)?;
    let mut i_w_o = [Mat3::zeros(); 3];
    for k in 0..3 {
        i_w_o[k] = parallel_axis(&i_w_g[k], p.m_w, &r_w[k])?;
    }
    let i_w = Mat3::identity() * p.i_wxx;
    let ibar_c = i_s_o + i_w_o[0] + i_w_o[1] + i_w_o[2] - i_w;

    let m_c = p.m_s + 3.0 * p.m_w;
    let r_c = (r_s * p.m_s + (r_w[0] + r_w[1] + r_w[2]) * p.m_w) / m_c;
    let (principal_rotation, i_o, i_3) = principal_axes(&ibar_c)?;
    let ibar_c_inv = cube_symmetric_inverse(&ibar_c);

    Ok(CubliModel {
        params: *p,
        ibar_c,
        ibar_c_inv,
        i_w,
        r_c,
        m_c,
        mbar_c: p.m_s + 2.0 * p.m_w,
        z_g: r_c.norm(),
        gamma: gamma_matrix(),
        principal_rotation,
        i_o,
        i_3,
        g_vec: Vec3::new(0.0, 0.0, p.g),
        i_s_o,
        i_w_o,
    })
}

/// Splits a matrix of the form `a I + b (J - I)` into `(a, b)`.
fn cube_symmetric_parts(m: &Mat3) -> Result<(f64, f64)> {
    let diag = [m[(0, 0)], m[(1, 1)], m[(2, 2)]];
    let off = [m[(0, 1)], m[(0, 2)], m[(1, 2)]];
    let lower = [m[(1, 0)], m[(2, 0)], m[(2, 1)]];
    let scale = m.amax().max(1.0);
    let tol = 1e-12 * scale;
    let spread = |v: &[f64; 3]| {
        let max = v.iter().cloned().fold(f64::MIN, f64::max);
        let min = v.iter().cloned().fold(f64::MAX, f64::min);
        max - min
    };
    if spread(&diag) > tol {
        return Err(Error::NotCubeSymmetric(format!("unequal diagonal {diag:?}")));
    }
    if spread(&off) > tol {
        return Err(Error::NotCubeSymmetric(format!("unequal off-diagonal {off:?}")));
    }
    if off.iter().zip(&lower).any(|(a, b)| (a - b).abs() > tol) {
        return Err(Error::NotCubeSymmetric("not symmetric".into()));
    }
    Ok((diag.iter().sum::<f64>() / 3.0, off.iter().sum::<f64>() / 3.0))
}

/// `(a I + b(J - I))⁻¹ = (I - b/(a + 2b) J) / (a - b)`.
fn cube_symmetric_inverse(m: &Mat3) -> Mat3 {
    let (a, b) = cube_symmetric_parts(m).expect("checked by principal_axes");
    (Mat3::identity() - Mat3::repeat(b / (a + 2.0 * b))) / (a - b)
}

/// Closed-form eigen-decomposition of a cube-symmetric inertia tensor.
///
/// Returns `(rotation, I_o, I_3)` where the rows of `rotation` are the
/// principal axes: `normalize([1,-1,0])`, `e3 × e1`, and `[1,1,1]/√3`.
pub fn principal_axes(ibar_c: &Mat3) -> Result<(Mat3, f64, f64)> {
    let (a, b) = cube_symmetric_parts(ibar_c)?;
    let e3 = Vec3::repeat(1.0 / 3f64.sqrt());
    let e1 = Vec3::new(1.0, -1.0, 0.0).normalize();
    let e2 = e3.cross(&e1);
    let rot = Mat3::from_rows(&[e1.transpose(), e2.transpose(), e3.transpose()]);
    Ok((rot, a - b, a + 2.0 * b))
}

impl CubliModel {
    pub fn reference() -> Self {
        build_model(&CubliParams::default()).expect("default parameters are valid")
    }

    /// Unit body diagonal (principal axis 3).
    pub fn diagonal_axis(&self) -> Vec3 {
        self.principal_rotation.row(2).transpose()
    }

    /// Gravity moment `½ m̄_c g l G Γ q`, equal to `m_c r_c × g'`.
    pub fn gravity_moment(&self, q: &Quaternion) -> Vec3 {
        let p = &self.params;
        build_g(q).mul_vec4(&(self.gamma * q.to_vec4())) * (0.5 * self.mbar_c * p.g * p.l)
    }

    /// `V = m_c r_cᵀ R(q) g`.
    pub fn potential_energy(&self, q: &Quaternion) -> f64 {
        self.m_c * self.r_c.dot(&(q.rotation_matrix() * self.g_vec))
    }
}

/// Stable (diagonal down) and unstable (diagonal up) equilibria, both as
/// rotations about the horizontal axis `[1,-1,0]/√2`.
pub fn equilibria(_model: &CubliModel) -> EquilibriumSet {
    let tilt = (1.0 / 3f64.sqrt()).acos();
    let axis = Vec3::new(1.0, -1.0, 0.0).normalize();
    let q_u = from_axis_angle(&AxisAngle::new(axis, tilt).expect("unit axis"));
    let q_s = from_axis_angle(&AxisAngle::new(-axis, std::f64::consts::PI - tilt).expect("unit axis"));
    EquilibriumSet { q_s, q_u }
}

/// Orientation whose diagonal is tilted `nutation` radians away from the
/// upright equilibrium, in the vertical plane containing `[1,1,0]`.
pub fn nutated_orientation(_model: &CubliModel, nutation: f64) -> Quaternion {
    let tilt = (1.0 / 3f64.sqrt()).acos();
    let axis = Vec3::new(1.0, -1.0, 0.0).normalize();
    from_axis_angle(&AxisAngle::new(axis, tilt - nutation).expect("unit axis"))
}

/// The unsimplified gravity matrix `Λ` with `V = m_c qᵀ Λ q` for unit `q`.
///
/// Only used to cross-check [`CubliModel::gravity_moment`].
pub fn lambda_matrix(model: &CubliModel) -> Mat4 {
    let g = model.g_vec;
    let r = model.r_c;
    let gr = g.dot(&r);
    let gxr = g.cross(&r);
    let lower = g * r.transpose() + r * g.transpose() - Mat3::identity() * gr;
    let mut m = Mat4::zeros();
    m[(0, 0)] = gr;
    for k in 0..3 {
        m[(0, k + 1)] = -gxr[k];
        m[(k + 1, 0)] = -gxr[k];
        for j in 0..3 {
            m[(k + 1, j + 1)] = lower[(k, j)];
        }
    }
    m
}
