//! Observables and Poinsot-construction runs.

use crate::dynamics::{DynamicsFlags, State, TorqueProfile};
use crate::integrate::{cubli_rhs, simulate, IntegratorConfig};
use crate::kinematics::{quat_to_euler_zxz, EulerZXZ};
use crate::model::CubliModel;
use crate::{Error, Quaternion, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub e: f64,
    pub t: f64,
    pub v: f64,
    /// `Ī_c ω_c` in body axes.
    pub h_body: Vec3,
    /// Projection of `h_body` on the unit up-direction.
    pub h_z: f64,
    /// Sum of the components of `h_body` (√3 × the diagonal projection).
    pub h_diag: f64,
    pub euler: EulerZXZ,
    pub com_inertial: Vec3,
}

/// `(E, T, V)` with `T = ½ ω_cᵀ Ī_c ω_c + ½ ω_wᵀ I_w ω_w` and
/// `V = m_c r_cᵀ R g`.
///
/// This is the energy the simplified equations of motion conserve: they drop
/// the wheels' axial inertia from the structure's rotation (`ω_w ≫ ω_c`), so
/// the wheel term carries only the relative speed.
pub fn mechanical_energy(s: &State, model: &CubliModel) -> (f64, f64, f64) {
    let w = s.omega_c;
    let t = 0.5 * w.dot(&(model.ibar_c * w)) + 0.5 * s.omega_w.dot(&(model.i_w * s.omega_w));
    let v = model.potential_energy(&s.q);
    (t + v, t, v)
}

/// Energy with the coupled wheel term `½ (ω_c + ω_w)ᵀ I_w (ω_c + ω_w)`.
///
/// Differs from [`mechanical_energy`] by `ω_cᵀ I_w ω_w + ½ ω_cᵀ I_w ω_c`,
/// which the simplified dynamics neglect; kept for comparison reports.
pub fn mechanical_energy_coupled(s: &State, model: &CubliModel) -> (f64, f64, f64) {
    let w = s.omega_c;
    let ww = w + s.omega_w;
    let t = 0.5 * w.dot(&(model.ibar_c * w)) + 0.5 * ww.dot(&(model.i_w * ww));
    let v = model.potential_energy(&s.q);
    (t + v, t, v)
}

/// `(H_z, H_diag)` for locked wheels: `H = Ī_c ω_c`.
pub fn momentum_projections(s: &State, model: &CubliModel) -> (f64, f64) {
    let h = model.ibar_c * s.omega_c;
    let up = s.q.rotation_matrix() * Vec3::z();
    (h.dot(&up), h.sum())
}

/// `H_z` against the g-scaled body gravity vector `g' = R g`, as some
/// references write it. Equal to `g · H_z`.
pub fn momentum_projection_scaled(s: &State, model: &CubliModel) -> f64 {
    (model.ibar_c * s.omega_c).dot(&(s.q.rotation_matrix() * model.g_vec))
}

/// Centre of mass in inertial coordinates, `Rᵀ r_c`.
pub fn com_inertial(s: &State, model: &CubliModel) -> Vec3 {
    s.q.rotation_matrix().transpose() * model.r_c
}

pub fn observables(s: &State, model: &CubliModel) -> Observables {
    let (e, t, v) = mechanical_energy(s, model);
    let (h_z, h_diag) = momentum_projections(s, model);
    Observables {
        e,
        t,
        v,
        h_body: model.ibar_c * s.omega_c,
        h_z,
        h_diag,
        euler: quat_to_euler_zxz(&s.q, &model.principal_rotation),
        com_inertial: com_inertial(s, model),
    }
}

/// Angular momentum of the locked-wheel body in principal coordinates.
pub fn principal_momentum(omega_c: &Vec3, model: &CubliModel) -> Vec3 {
    model.principal_rotation * (model.ibar_c * omega_c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoinsotMode {
    /// Members share `|H|`.
    ConstantH,
    /// Members share the kinetic energy `T`.
    ConstantT,
}

impl std::str::FromStr for PoinsotMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "H" | "h" => Ok(PoinsotMode::ConstantH),
            "T" | "t" => Ok(PoinsotMode::ConstantT),
            other => Err(format!("unknown Poinsot mode `{other}` (expected H or T)")),
        }
    }
}

/// Initial body rates on the chosen level set, with `H₃/H₃,max` equally
/// spaced from +1 down to -1 and azimuth 0 in the principal frame. A single
/// member sits on the pole of principal axis 3.
pub fn poinsot_family(mode: PoinsotMode, level: f64, n: usize, model: &CubliModel) -> Result<Vec<Vec3>> {
    if !(level > 0.0 && level.is_finite()) {
        return Err(Error::EmptyLevelSet(format!("level must be > 0, got {level}")));
    }
    if n == 0 {
        return Err(Error::EmptyLevelSet("n must be >= 1".into()));
    }
    let (i_o, i_3) = (model.i_o, model.i_3);
    let out = (0..n)
        .map(|k| {
            let u = if n == 1 {
                1.0
            } else {
                1.0 - 2.0 * k as f64 / (n - 1) as f64
            };
            let (h1, h3) = match mode {
                PoinsotMode::ConstantH => (level * (1.0 - u * u).max(0.0).sqrt(), level * u),
                PoinsotMode::ConstantT => {
                    let h3 = u * (2.0 * level * i_3).sqrt();
                    (((2.0 * level - h3 * h3 / i_3) * i_o).max(0.0).sqrt(), h3)
                }
            };
            let w_principal = Vec3::new(h1 / i_o, 0.0, h3 / i_3);
            model.principal_rotation.transpose() * w_principal
        })
        .collect();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoinsotRun {
    pub omega0: Vec3,
    /// `(t, H₁, H₂, H₃)` in principal coordinates.
    pub trace: Vec<(f64, Vec3)>,
    pub h_mag: f64,
    pub t_val: f64,
    /// `max |H₁² + H₂² + H₃² - H²|`.
    pub max_sphere_residual: f64,
    /// `max |H₁²/I_o + H₂²/I_o + H₃²/I₃ - 2T|`.
    pub max_ellipsoid_residual: f64,
    pub max_h3_drift: f64,
}

/// Torque-free run (gravity off, wheels locked) from the identity
/// orientation.
pub fn poinsot_run(omega0: &Vec3, cfg: &IntegratorConfig, model: &CubliModel) -> Result<PoinsotRun> {
    let s0 = State::with_omega(Quaternion::identity(), *omega0);
    let traj = simulate(
        &s0,
        cfg,
        cubli_rhs(model, DynamicsFlags::torque_free(), TorqueProfile::Zero),
    )?;
    let h0 = principal_momentum(omega0, model);
    let h_mag = h0.norm();
    let t_val = 0.5 * omega0.dot(&(model.ibar_c * omega0));
    let (i_o, i_3) = (model.i_o, model.i_3);
    let mut run = PoinsotRun {
        omega0: *omega0,
        trace: Vec::with_capacity(traj.samples.len()),
        h_mag,
        t_val,
        max_sphere_residual: 0.0,
        max_ellipsoid_residual: 0.0,
        max_h3_drift: 0.0,
    };
    for smp in &traj.samples {
        let h = principal_momentum(&smp.state.omega_c, model);
        let sphere = (h.norm_squared() - h_mag * h_mag).abs();
        let ellipsoid = ((h.x * h.x + h.y * h.y) / i_o + h.z * h.z / i_3 - 2.0 * t_val).abs();
        run.max_sphere_residual = run.max_sphere_residual.max(sphere);
        run.max_ellipsoid_residual = run.max_ellipsoid_residual.max(ellipsoid);
        run.max_h3_drift = run.max_h3_drift.max((h.z - h0.z).abs());
        run.trace.push((smp.t, h));
    }
    Ok(run)
}

/// Runs every family member on its own thread; results keep input order.
pub fn poinsot_family_runs(omegas: &[Vec3], cfg: &IntegratorConfig, model: &CubliModel) -> Result<Vec<PoinsotRun>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = omegas
            .iter()
            .map(|w| scope.spawn(move || poinsot_run(w, cfg, model)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("poinsot worker panicked"))
            .collect()
    })
}
