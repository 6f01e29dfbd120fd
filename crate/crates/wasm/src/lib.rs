//! Browser bindings for the cubli simulator.
//!
//! Every export returns a flat `Float64Array`; the row layouts are given on
//! each function. Work is done in the `*_rows` functions so they can be
//! tested natively.

use cubli::analysis::{com_inertial, poinsot_family, poinsot_run, PoinsotMode};
use cubli::dynamics::{
    min_spin_velocity, steady_precession_rates, DynamicsFlags, PrecessionRoots, State, TorqueProfile,
};
use cubli::integrate::{cubli_rhs, simulate, IntegratorConfig};
use cubli::kinematics::{body_rates_from_euler, euler_zxz_to_quat, quat_to_euler_zxz, EulerRates, EulerZXZ};
use cubli::model::CubliModel;
use cubli::scenario::unwrap_angles;
use wasm_bindgen::prelude::*;

/// Longest run the page may request, in seconds.
pub const MAX_DURATION: f64 = 20.0;
const DT: f64 = 1e-3;
/// Samples per second handed back to the page.
const OUTPUT_RATE: f64 = 200.0;

fn check_duration(duration: f64) -> Result<(), String> {
    if duration > 0.0 && duration <= MAX_DURATION {
        Ok(())
    } else {
        Err(format!("duration must be in (0, {MAX_DURATION}] s"))
    }
}

fn record_every(duration: f64) -> usize {
    let steps = (duration / DT).round() as usize;
    let wanted = (duration * OUTPUT_RATE).ceil().max(1.0) as usize;
    (steps / wanted).max(1)
}

/// Rows of `[t, psi, theta, phi, comx, comy, comz]` for a cube tilted
/// `tilt_deg` from upright and spun at `spin` rad/s about its diagonal.
pub fn spin_rows(tilt_deg: f64, spin: f64, duration: f64) -> Result<Vec<f64>, String> {
    check_duration(duration)?;
    if !(0.0..=90.0).contains(&tilt_deg) || !spin.is_finite() {
        return Err("tilt must be in [0, 90] degrees and spin finite".into());
    }
    let m = CubliModel::reference();
    let p = &m.principal_rotation;
    let e0 = EulerZXZ::new(0.0, tilt_deg.to_radians(), 0.0);
    let rates = EulerRates {
        psid: 0.0,
        thetad: 0.0,
        phid: spin,
    };
    let s0 = State::with_omega(euler_zxz_to_quat(&e0, p), body_rates_from_euler(&e0, &rates, p));
    let cfg = IntegratorConfig {
        record_every: record_every(duration),
        ..IntegratorConfig::new(DT, duration)
    };
    let traj =
        simulate(&s0, &cfg, cubli_rhs(&m, DynamicsFlags::locked(), TorqueProfile::Zero)).map_err(|e| e.to_string())?;
    let euler: Vec<EulerZXZ> = traj.samples.iter().map(|s| quat_to_euler_zxz(&s.state.q, p)).collect();
    let psi = unwrap_angles(&euler.iter().map(|e| e.psi).collect::<Vec<_>>());
    let phi = unwrap_angles(&euler.iter().map(|e| e.phi).collect::<Vec<_>>());
    let mut out = Vec::with_capacity(traj.samples.len() * 7);
    for (k, smp) in traj.samples.iter().enumerate() {
        let c = com_inertial(&smp.state, &m);
        out.extend_from_slice(&[smp.t, psi[k], euler[k].theta, phi[k], c.x, c.y, c.z]);
    }
    Ok(out)
}

/// `[slow, fast, min_spin]`; the roots are NaN below the minimum spin.
pub fn precession_values(tilt_deg: f64, spin: f64) -> Vec<f64> {
    let m = CubliModel::reference();
    let theta = tilt_deg.to_radians();
    let (slow, fast) = match steady_precession_rates(spin, theta, &m) {
        Ok(PrecessionRoots::Two(a, b)) => (a, b),
        Ok(PrecessionRoots::Single(a)) => (a, f64::NAN),
        Err(_) => (f64::NAN, f64::NAN),
    };
    vec![slow, fast, min_spin_velocity(theta, &m)]
}

/// Rows of `[member, t, H1, H2, H3]` (principal axes) for a torque-free
/// family; `mode` is `"H"` or `"T"`.
pub fn poinsot_rows(mode: &str, level: f64, n: usize, duration: f64) -> Result<Vec<f64>, String> {
    check_duration(duration)?;
    if n == 0 || n > 32 {
        return Err("n must be in 1..=32".into());
    }
    let mode: PoinsotMode = mode.parse()?;
    let m = CubliModel::reference();
    let cfg = IntegratorConfig {
        record_every: record_every(duration),
        ..IntegratorConfig::new(DT, duration)
    };
    let omegas = poinsot_family(mode, level, n, &m).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for (k, w) in omegas.iter().enumerate() {
        let run = poinsot_run(w, &cfg, &m).map_err(|e| e.to_string())?;
        for (t, h) in &run.trace {
            out.extend_from_slice(&[k as f64, *t, h.x, h.y, h.z]);
        }
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn spin_trace(tilt_deg: f64, spin: f64, duration: f64) -> Result<Vec<f64>, JsError> {
    spin_rows(tilt_deg, spin, duration).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn precession(tilt_deg: f64, spin: f64) -> Vec<f64> {
    precession_values(tilt_deg, spin)
}

#[wasm_bindgen]
pub fn poinsot_traces(mode: &str, level: f64, n: usize, duration: f64) -> Result<Vec<f64>, JsError> {
    poinsot_rows(mode, level, n, duration).map_err(|e| JsError::new(&e))
}
