//! Fixed-step classical RK4.
//!
//! Step times are computed as `k * dt`, never accumulated, so identical
//! inputs give bit-identical trajectories.

use crate::dynamics::{
    state_derivative, top_derivative, DynamicsFlags, State, StateDerivative, TopState, TorqueProfile,
};
use crate::model::CubliModel;
use crate::{Error, Result};

pub const DEFAULT_DT: f64 = 1e-3;
pub const MAX_DT: f64 = 1e-2;
/// Norm tolerance for the initial quaternion of a run.
pub const INITIAL_UNIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Keep every `record_every`-th step (the final step is always kept).
    pub record_every: usize,
    pub renormalize: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            t_end: 1.0,
            record_every: 1,
            renormalize: true,
        }
    }
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(Error::InvalidConfig(format!(
                "dt must be in (0, {MAX_DT}], got {}",
                self.dt
            )));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidConfig(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig("record_every must be >= 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: State,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// Largest `||q| - 1|` seen after a step, before renormalisation.
    pub max_norm_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }
}

/// One RK4 step on a flat state vector.
pub fn rk4_array<const N: usize, F>(y: &[f64; N], t: f64, dt: f64, f: &F) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let axpy = |a: &[f64; N], k: &[f64; N], h: f64| -> [f64; N] { std::array::from_fn(|i| a[i] + h * k[i]) };
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * dt, &axpy(y, &k1, 0.5 * dt))?;
    let k3 = f(t + 0.5 * dt, &axpy(y, &k2, 0.5 * dt))?;
    let k4 = f(t + dt, &axpy(y, &k3, dt))?;
    let out: [f64; N] = std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(Error::NonFinite("rk4 update"))
    }
}

/// RK4 step of the 13-state model. Returns the new state and the
/// pre-renormalisation quaternion norm.
pub fn rk4_step<F>(s: &State, t: f64, dt: f64, deriv: &F, renormalize: bool) -> Result<(State, f64)>
where
    F: Fn(f64, &State) -> Result<StateDerivative>,
{
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::InvalidConfig(format!("dt must be > 0, got {dt}")));
    }
    let f = |t: f64, y: &[f64; 13]| deriv(t, &State::from_array(y)).map(|d| d.to_array());
    let mut next = State::from_array(&rk4_array(&s.to_array(), t, dt, &f)?);
    let norm = next.q.norm();
    if renormalize {
        next.q = next.q.scale(1.0 / norm);
    }
    Ok((next, norm))
}

/// Right-hand side of the 13-state model with a torque profile.
pub fn cubli_rhs<'a>(
    model: &'a CubliModel,
    flags: DynamicsFlags,
    torque: TorqueProfile,
) -> impl Fn(f64, &State) -> Result<StateDerivative> + 'a {
    move |t, s| state_derivative(s, &torque.at(t), model, &flags)
}

pub fn simulate<F>(s0: &State, cfg: &IntegratorConfig, deriv: F) -> Result<Trajectory>
where
    F: Fn(f64, &State) -> Result<StateDerivative>,
{
    cfg.validate()?;
    s0.q.check_unit_within(INITIAL_UNIT_TOL)?;
    if !s0.is_finite() {
        return Err(Error::NonFinite("initial state"));
    }
    let n = cfg.steps();
    let mut traj = Trajectory {
        samples: Vec::with_capacity(n / cfg.record_every + 2),
        max_norm_drift: 0.0,
    };
    traj.samples.push(Sample { t: 0.0, state: *s0 });
    let mut s = *s0;
    for k in 0..n {
        let t = k as f64 * cfg.dt;
        let (next, norm) = rk4_step(&s, t, cfg.dt, &deriv, cfg.renormalize)
            .map_err(|e| Error::Integration { t, source: Box::new(e) })?;
        traj.max_norm_drift = traj.max_norm_drift.max((norm - 1.0).abs());
        s = next;
        let step = k + 1;
        if step % cfg.record_every == 0 || step == n {
            traj.samples.push(Sample {
                t: step as f64 * cfg.dt,
                state: s,
            });
        }
    }
    Ok(traj)
}

/// Integrates the symmetric-top reference model.
pub fn simulate_top(t0: &TopState, cfg: &IntegratorConfig, model: &CubliModel) -> Result<Vec<(f64, TopState)>> {
    cfg.validate()?;
    let f = |_t: f64, y: &[f64; 6]| top_derivative(&TopState::from_array(y), model).map(|d| d.to_array());
    let n = cfg.steps();
    let mut out = vec![(0.0, *t0)];
    let mut y = t0.to_array();
    for k in 0..n {
        let t = k as f64 * cfg.dt;
        y = rk4_array(&y, t, cfg.dt, &f).map_err(|e| Error::Integration { t, source: Box::new(e) })?;
        let step = k + 1;
        if step % cfg.record_every == 0 || step == n {
            out.push((step as f64 * cfg.dt, TopState::from_array(&y)));
        }
    }
    Ok(out)
}
