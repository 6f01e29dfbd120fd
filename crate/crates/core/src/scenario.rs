//! Built-in validation runs, scenario config files and CSV/summary output.
//!
//! A scenario config is a flat `key = value` file (see [`CONFIG_KEYS`]).
//! Loading starts from the built-in defaults of the named scenario, applies
//! the `CUBLI_DT` override if present, then the file's keys.

use std::f64::consts::{PI, TAU};
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analysis::{
    mechanical_energy_coupled, observables, poinsot_family, poinsot_family_runs, Observables, PoinsotMode, PoinsotRun,
};
use crate::dynamics::{steady_precession_rates, DynamicsFlags, PrecessionRoots, State, TorqueProfile};
use crate::integrate::{cubli_rhs, simulate, IntegratorConfig, Trajectory, DEFAULT_DT};
use crate::kinematics::{body_rates_from_euler, euler_rates_from_body, quat_to_euler_zxz, EulerRates};
use crate::model::{equilibria, nutated_orientation, CubliModel};
use crate::{kv, Error, Quaternion, Result, Vec3};

/// Pass/fail bounds used by run summaries and the acceptance tests.
pub mod thresholds {
    /// Relative drift of `E` over a free-fall run.
    pub const ENERGY_REL_DRIFT: f64 = 1e-6;
    /// Accepted range for `drift(dt) / drift(dt/2)` (fourth order gives 16).
    pub const RK4_RATIO_RANGE: (f64, f64) = (8.0, 32.0);
    /// Drift of `H_z` and `H_diag`, relative to `max(1, |H(0)|)`.
    pub const MOMENTUM_REL_DRIFT: f64 = 1e-6;
    /// Per-component state deviation while resting at an equilibrium.
    pub const EQUILIBRIUM_DEVIATION: f64 = 1e-9;
    /// State derivative at an equilibrium.
    pub const EQUILIBRIUM_DERIVATIVE: f64 = 1e-12;
    /// Spin-rate tolerance for pure spin (rad/s).
    pub const SPIN_RATE_TOL: f64 = 0.01;
    /// Precession and nutation rates that count as flat (rad/s).
    pub const FLAT_RATE: f64 = 1e-3;
    /// Euler-angle agreement between the quaternion and top models (rad).
    pub const TOP_AGREEMENT: f64 = 1e-3;
    /// Nutation band around the initial tilt in steady precession (rad).
    pub const STEADY_NUTATION_BAND: f64 = 0.5 * std::f64::consts::PI / 180.0;
    /// Reference slow and fast steady-precession rates at 10° (rad/s).
    pub const STEADY_PRECESSION_RATES: (f64, f64) = (4.40, 22.19);
    /// Relative tolerance on precession rates.
    pub const PRECESSION_REL_TOL: f64 = 0.05;
    /// Relative tolerance on the Vieta product of the precession roots.
    pub const VIETA_REL_TOL: f64 = 1e-9;
    /// Minimum spin velocity at 10° nutation (rad/s) and its tolerance.
    pub const MIN_SPIN_10DEG: (f64, f64) = (47.9, 0.05);
    /// Sphere and ellipsoid residuals, relative to `H²`.
    pub const POINSOT_REL_RESIDUAL: f64 = 1e-6;
    /// Drift of the axial momentum component per Poinsot run.
    pub const H3_DRIFT: f64 = 1e-8;
    /// Identity-suite tolerance.
    pub const IDENTITY_TOL: f64 = 1e-10;
    /// Model-assembly tolerance (relative).
    pub const MODEL_REL_TOL: f64 = 1e-9;
    /// Exact vs simplified derivative agreement with locked wheels.
    pub const EXACT_SIMPLIFIED_TOL: f64 = 1e-14;
}

use thresholds as th;

pub const CSV_HEADER: &str =
    "t,q0,q1,q2,q3,wx,wy,wz,th1,th2,th3,ww1,ww2,ww3,E,T,V,Hz,Hdiag,psi,theta,phi,comx,comy,comz";
pub const POINSOT_CSV_HEADER: &str = "t,H1,H2,H3";
pub const FAMILY_CSV_HEADER: &str = "index,file,w1,w2,w3,H,T,sphere_residual,ellipsoid_residual,h3_drift";

/// Samples needed by [`final_half_slope`].
pub const MIN_SLOPE_SAMPLES: usize = 10;

pub const DT_ENV_VAR: &str = "CUBLI_DT";

pub const CONFIG_KEYS: [&str; 16] = [
    "scenario",
    "duration",
    "dt",
    "record_every",
    "orientation",
    "omega_c",
    "euler_rates",
    "omega_w",
    "gravity",
    "wheels_locked",
    "exact_dynamics",
    "torque",
    "poinsot_mode",
    "poinsot_level",
    "poinsot_n",
    "out_dir",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Sim1Energy,
    Sim2Momentum,
    Sim3StableEq,
    Sim4UnstableEq,
    Sim5Spin,
    Sim6Precession,
    Sim8SteadyPrecession,
    Sim9PoinsotH,
    Sim9PoinsotT,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Scenario::Sim1Energy,
        Scenario::Sim2Momentum,
        Scenario::Sim3StableEq,
        Scenario::Sim4UnstableEq,
        Scenario::Sim5Spin,
        Scenario::Sim6Precession,
        Scenario::Sim8SteadyPrecession,
        Scenario::Sim9PoinsotH,
        Scenario::Sim9PoinsotT,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Sim1Energy => "sim1_energy",
            Scenario::Sim2Momentum => "sim2_momentum",
            Scenario::Sim3StableEq => "sim3_stable_eq",
            Scenario::Sim4UnstableEq => "sim4_unstable_eq",
            Scenario::Sim5Spin => "sim5_spin",
            Scenario::Sim6Precession => "sim6_precession",
            Scenario::Sim8SteadyPrecession => "sim8_steady_precession",
            Scenario::Sim9PoinsotH => "sim9_poinsot_H",
            Scenario::Sim9PoinsotT => "sim9_poinsot_T",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Scenario::Sim1Energy => "free fall from the identity orientation; mechanical energy conserved",
            Scenario::Sim2Momentum => "identity orientation, unit body rates; H_z and H_diag conserved",
            Scenario::Sim3StableEq => "rest at the stable equilibrium (diagonal down) for 10 s",
            Scenario::Sim4UnstableEq => "rest at the unstable equilibrium (diagonal up) for 10 s",
            Scenario::Sim5Spin => "spin about the upright diagonal at 1 Hz",
            Scenario::Sim6Precession => "10° tilt with fast diagonal spin; precession, nutation and spin",
            Scenario::Sim8SteadyPrecession => "10° tilt on the slow steady-precession branch",
            Scenario::Sim9PoinsotH => "torque-free family sharing |H|; sphere and ellipsoid membership",
            Scenario::Sim9PoinsotT => "torque-free family sharing T; sphere and ellipsoid membership",
        }
    }

    pub fn is_poinsot(self) -> bool {
        matches!(self, Scenario::Sim9PoinsotH | Scenario::Sim9PoinsotT)
    }

    pub fn from_name(name: &str) -> Result<Self> {
        if let Some(s) = Self::ALL.iter().find(|s| s.name().eq_ignore_ascii_case(name)) {
            return Ok(*s);
        }
        let lower = name.to_ascii_lowercase();
        let score = |s: &Scenario| {
            let cand = s.name().to_ascii_lowercase();
            let prefix = if !lower.is_empty() && cand.starts_with(&lower) {
                1.0
            } else {
                0.0
            };
            prefix + strsim::jaro_winkler(&lower, &cand)
        };
        let suggestion = Self::ALL
            .iter()
            .max_by(|a, b| score(a).total_cmp(&score(b)))
            .map(|s| s.name().to_string());
        Err(Error::UnknownScenario {
            name: name.to_string(),
            suggestion,
        })
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_name(s)
    }
}

/// One line per built-in scenario: name, then description.
pub fn list_scenarios() -> String {
    let width = Scenario::ALL.iter().map(|s| s.name().len()).max().unwrap_or(0);
    Scenario::ALL
        .iter()
        .map(|s| format!("{:width$}  {}\n", s.name(), s.description()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Orientation {
    Identity,
    Stable,
    Unstable,
    /// Tilt of the diagonal away from upright, in degrees.
    Nutated(f64),
    Explicit(Quaternion),
}

impl Orientation {
    pub fn resolve(&self, model: &CubliModel) -> Quaternion {
        match *self {
            Orientation::Identity => Quaternion::identity(),
            Orientation::Stable => equilibria(model).q_s,
            Orientation::Unstable => equilibria(model).q_u,
            Orientation::Nutated(deg) => nutated_orientation(model, deg.to_radians()),
            Orientation::Explicit(q) => q,
        }
    }
}

impl FromStr for Orientation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "identity" => return Ok(Orientation::Identity),
            "stable" => return Ok(Orientation::Stable),
            "unstable" => return Ok(Orientation::Unstable),
            _ => {}
        }
        if let Some(inner) = t.strip_prefix("nutated(").and_then(|r| r.strip_suffix(')')) {
            let deg: f64 = inner
                .trim()
                .parse()
                .map_err(|_| format!("`{inner}` is not an angle in degrees"))?;
            if !(0.0..=180.0).contains(&deg) {
                return Err(format!("nutation must be in [0, 180] degrees, got {deg}"));
            }
            return Ok(Orientation::Nutated(deg));
        }
        let parts: Vec<f64> = t
            .split(',')
            .map(|p| p.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<_>>()
            .ok_or_else(|| format!("expected identity, stable, unstable, nutated(deg) or q0,q1,q2,q3; got `{t}`"))?;
        let [a, b, c, d] = parts[..] else {
            return Err(format!("a quaternion needs 4 components, got {}", parts.len()));
        };
        let q = Quaternion::new(a, b, c, d);
        let n = q.norm();
        if (n - 1.0).abs() > 1e-6 {
            return Err(format!("quaternion must be unit norm, |q| = {n}"));
        }
        Ok(Orientation::Explicit(q.normalized()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialRates {
    /// Body-axis `ω_c`.
    Body(Vec3),
    /// Z-X-Z Euler rates at the initial orientation.
    Euler(EulerRates),
}

impl InitialRates {
    pub fn resolve(&self, q: &Quaternion, model: &CubliModel) -> Vec3 {
        match self {
            InitialRates::Body(w) => *w,
            InitialRates::Euler(r) => {
                let e = quat_to_euler_zxz(q, &model.principal_rotation);
                body_rates_from_euler(&e, r, &model.principal_rotation)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoinsotSpec {
    pub mode: PoinsotMode,
    pub level: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub duration: f64,
    pub dt: f64,
    pub record_every: usize,
    pub orientation: Orientation,
    pub rates: InitialRates,
    pub omega_w: Vec3,
    pub gravity_on: bool,
    pub wheels_locked: bool,
    pub exact_dynamics: bool,
    pub torque: TorqueProfile,
    pub poinsot: Option<PoinsotSpec>,
    pub out_dir: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn builtin(scenario: Scenario) -> Self {
        let base = Self {
            scenario,
            duration: 5.0,
            dt: DEFAULT_DT,
            record_every: 1,
            orientation: Orientation::Identity,
            rates: InitialRates::Body(Vec3::zeros()),
            omega_w: Vec3::zeros(),
            gravity_on: true,
            wheels_locked: true,
            exact_dynamics: false,
            torque: TorqueProfile::Zero,
            poinsot: None,
            out_dir: None,
        };
        let diag = |w: f64| InitialRates::Body(Vec3::repeat(w));
        match scenario {
            Scenario::Sim1Energy => base,
            Scenario::Sim2Momentum => Self {
                rates: diag(1.0),
                ..base
            },
            Scenario::Sim3StableEq => Self {
                duration: 10.0,
                orientation: Orientation::Stable,
                ..base
            },
            Scenario::Sim4UnstableEq => Self {
                duration: 10.0,
                orientation: Orientation::Unstable,
                ..base
            },
            Scenario::Sim5Spin => Self {
                orientation: Orientation::Unstable,
                rates: diag(TAU / 3f64.sqrt()),
                ..base
            },
            Scenario::Sim6Precession => Self {
                duration: 2.0,
                orientation: Orientation::Nutated(10.0),
                rates: diag(20.0 * PI / 3f64.sqrt()),
                ..base
            },
            Scenario::Sim8SteadyPrecession => Self {
                duration: 2.0,
                orientation: Orientation::Nutated(10.0),
                rates: InitialRates::Body(Vec3::new(38.47, 38.47, 39.40)),
                ..base
            },
            Scenario::Sim9PoinsotH | Scenario::Sim9PoinsotT => {
                let (mode, level) = if scenario == Scenario::Sim9PoinsotH {
                    (PoinsotMode::ConstantH, 0.05)
                } else {
                    (PoinsotMode::ConstantT, 0.1)
                };
                Self {
                    duration: 10.0,
                    gravity_on: false,
                    poinsot: Some(PoinsotSpec { mode, level, n: 9 }),
                    ..base
                }
            }
        }
    }

    /// Built-in Poinsot scenario for `mode` with the given level set.
    pub fn poinsot(mode: PoinsotMode, level: f64, n: usize) -> Self {
        let scenario = match mode {
            PoinsotMode::ConstantH => Scenario::Sim9PoinsotH,
            PoinsotMode::ConstantT => Scenario::Sim9PoinsotT,
        };
        Self {
            poinsot: Some(PoinsotSpec { mode, level, n }),
            ..Self::builtin(scenario)
        }
    }

    /// Resolves a config from an optional scenario name, an optional config
    /// file body and an optional `CUBLI_DT` value. A name given both ways
    /// must agree.
    pub fn load(scenario: Option<&str>, config_text: Option<&str>, env_dt: Option<&str>) -> Result<Self> {
        let entries = match config_text {
            Some(text) => kv::parse(text)?,
            None => Vec::new(),
        };
        let mut seen = std::collections::HashSet::new();
        for e in &entries {
            if !CONFIG_KEYS.contains(&e.key.as_str()) {
                return Err(Error::UnknownKey {
                    key: e.key.clone(),
                    line: e.line,
                });
            }
            if !seen.insert(e.key.as_str()) {
                return Err(e.err("key given more than once"));
            }
        }
        if seen.contains("omega_c") && seen.contains("euler_rates") {
            let e = entries.iter().find(|e| e.key == "euler_rates").expect("seen");
            return Err(e.err("give either omega_c or euler_rates, not both"));
        }

        let from_file = entries.iter().find(|e| e.key == "scenario");
        let name = match (scenario, from_file) {
            (Some(a), Some(e)) => {
                let b = Scenario::from_name(&e.value)?;
                if Scenario::from_name(a)? != b {
                    return Err(e.err(format!("conflicts with --scenario {a}")));
                }
                b
            }
            (Some(a), None) => Scenario::from_name(a)?,
            (None, Some(e)) => Scenario::from_name(&e.value)?,
            (None, None) => return Err(Error::InvalidConfig("no scenario given".into())),
        };
        let mut cfg = Self::builtin(name);

        if let Some(v) = env_dt {
            cfg.dt = v
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite() && *x > 0.0)
                .ok_or_else(|| Error::InvalidConfig(format!("{DT_ENV_VAR} must be a positive number, got `{v}`")))?;
        }

        for e in &entries {
            match e.key.as_str() {
                "scenario" => {}
                "duration" => cfg.duration = e.f64()?,
                "dt" => cfg.dt = e.f64()?,
                "record_every" => cfg.record_every = e.usize()?,
                "orientation" => cfg.orientation = e.value.parse().map_err(|r: String| e.err(r))?,
                "omega_c" => cfg.rates = InitialRates::Body(e.vec3()?),
                "euler_rates" => {
                    let v = e.vec3()?;
                    cfg.rates = InitialRates::Euler(EulerRates {
                        psid: v.x,
                        thetad: v.y,
                        phid: v.z,
                    });
                }
                "omega_w" => cfg.omega_w = e.vec3()?,
                "gravity" => cfg.gravity_on = e.bool()?,
                "wheels_locked" => cfg.wheels_locked = e.bool()?,
                "exact_dynamics" => cfg.exact_dynamics = e.bool()?,
                "torque" => {
                    cfg.torque = if e.value.eq_ignore_ascii_case("zero") {
                        TorqueProfile::Zero
                    } else {
                        TorqueProfile::Constant(e.vec3()?)
                    }
                }
                "poinsot_mode" => {
                    let mode = e.value.parse().map_err(|r: String| e.err(r))?;
                    cfg.poinsot_mut(e)?.mode = mode;
                }
                "poinsot_level" => {
                    let level = e.f64()?;
                    cfg.poinsot_mut(e)?.level = level;
                }
                "poinsot_n" => {
                    let n = e.usize()?;
                    cfg.poinsot_mut(e)?.n = n;
                }
                "out_dir" => cfg.out_dir = Some(PathBuf::from(&e.value)),
                _ => unreachable!("keys checked above"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn poinsot_mut(&mut self, e: &kv::Entry) -> Result<&mut PoinsotSpec> {
        let name = self.scenario.name();
        self.poinsot
            .as_mut()
            .ok_or_else(|| e.err(format!("only valid for Poinsot scenarios, not {name}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.integrator_config().validate()?;
        if let Some(p) = &self.poinsot {
            if !(p.level > 0.0 && p.level.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "poinsot_level must be > 0, got {}",
                    p.level
                )));
            }
            if p.n == 0 {
                return Err(Error::InvalidConfig("poinsot_n must be >= 1".into()));
            }
        }
        Ok(())
    }

    pub fn integrator_config(&self) -> IntegratorConfig {
        IntegratorConfig {
            dt: self.dt,
            t_end: self.duration,
            record_every: self.record_every,
            renormalize: true,
        }
    }

    pub fn flags(&self) -> DynamicsFlags {
        DynamicsFlags {
            gravity_on: self.gravity_on,
            wheels_locked: self.wheels_locked,
            use_exact_form: self.exact_dynamics,
        }
    }

    pub fn initial_state(&self, model: &CubliModel) -> State {
        let q = self.orientation.resolve(model);
        State {
            omega_w: self.omega_w,
            ..State::with_omega(q, self.rates.resolve(&q, model))
        }
    }
}

/// Unwraps a sequence of angles in (-π, π] into a continuous one. Steps
/// larger than π between samples are taken as wraps.
pub fn unwrap_angles(a: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for &x in a {
        if let Some(p) = prev {
            let d = x - p;
            if d > PI {
                offset -= TAU;
            } else if d < -PI {
                offset += TAU;
            }
        }
        out.push(x + offset);
        prev = Some(x);
    }
    out
}

/// Least-squares slope of `y(t)` over the second half of the samples.
pub fn final_half_slope(t: &[f64], y: &[f64]) -> Result<f64> {
    let n = t.len().min(y.len());
    if n < MIN_SLOPE_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SLOPE_SAMPLES,
            got: n,
        });
    }
    let (t, y) = (&t[n / 2..n], &y[n / 2..n]);
    let m = t.len() as f64;
    let tm = t.iter().sum::<f64>() / m;
    let ym = y.iter().sum::<f64>() / m;
    let (mut sty, mut stt) = (0.0, 0.0);
    for (a, b) in t.iter().zip(y) {
        sty += (a - tm) * (b - ym);
        stt += (a - tm) * (a - tm);
    }
    Ok(sty / stt)
}

/// Precession rate `ψ̇` of a trajectory: slope of the unwrapped precession
/// angle over the final half of the run.
pub fn measure_precession(traj: &Trajectory, model: &CubliModel) -> Result<f64> {
    let t: Vec<f64> = traj.times().collect();
    let psi: Vec<f64> = traj
        .samples
        .iter()
        .map(|s| quat_to_euler_zxz(&s.state.q, &model.principal_rotation).psi)
        .collect();
    final_half_slope(&t, &unwrap_angles(&psi))
}

/// One CSV row: a recorded state with its observables and unwrapped angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub state: State,
    pub obs: Observables,
    pub psi: f64,
    pub phi: f64,
}

pub fn trace_rows(traj: &Trajectory, model: &CubliModel) -> Vec<TraceRow> {
    let obs: Vec<Observables> = traj.samples.iter().map(|s| observables(&s.state, model)).collect();
    let psi = unwrap_angles(&obs.iter().map(|o| o.euler.psi).collect::<Vec<_>>());
    let phi = unwrap_angles(&obs.iter().map(|o| o.euler.phi).collect::<Vec<_>>());
    traj.samples
        .iter()
        .zip(obs)
        .enumerate()
        .map(|(k, (s, o))| TraceRow {
            t: s.t,
            state: s.state,
            obs: o,
            psi: psi[k],
            phi: phi[k],
        })
        .collect()
}

fn push_num(line: &mut String, x: f64) {
    if !line.is_empty() {
        line.push(',');
    }
    let _ = write!(line, "{x:.16e}");
}

/// CSV text with [`CSV_HEADER`]; every value carries 17 significant digits.
pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::with_capacity((rows.len() + 1) * 25 * 24);
    out.push_str(CSV_HEADER);
    out.push('\n');
    let mut line = String::new();
    for r in rows {
        line.clear();
        let s = &r.state;
        let o = &r.obs;
        let vals = [r.t, s.q.q0, s.q.qv.x, s.q.qv.y, s.q.qv.z]
            .into_iter()
            .chain(s.omega_c.iter().copied())
            .chain(s.theta_w.iter().copied())
            .chain(s.omega_w.iter().copied())
            .chain([o.e, o.t, o.v, o.h_z, o.h_diag, r.psi, o.euler.theta, r.phi])
            .chain(o.com_inertial.iter().copied());
        for v in vals {
            push_num(&mut line, v);
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn poinsot_csv(run: &PoinsotRun) -> String {
    let mut out = String::from(POINSOT_CSV_HEADER);
    out.push('\n');
    let mut line = String::new();
    for (t, h) in &run.trace {
        line.clear();
        for v in [*t, h.x, h.y, h.z] {
            push_num(&mut line, v);
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn member_file_name(index: usize) -> String {
    format!("member_{index:02}.csv")
}

pub fn family_csv(runs: &[PoinsotRun]) -> String {
    let mut out = String::from(FAMILY_CSV_HEADER);
    out.push('\n');
    for (k, r) in runs.iter().enumerate() {
        let mut line = String::new();
        let _ = write!(line, "{k},{}", member_file_name(k));
        for v in [
            r.omega0.x,
            r.omega0.y,
            r.omega0.z,
            r.h_mag,
            r.t_val,
            r.max_sphere_residual,
            r.max_ellipsoid_residual,
            r.max_h3_drift,
        ] {
            let _ = write!(line, ",{v:.16e}");
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    /// Human-readable bound, e.g. `<= 1e-6`.
    pub bound: String,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &'static str, measured: f64, limit: f64) -> Self {
        Self {
            name,
            measured,
            bound: format!("<= {limit:.3e}"),
            pass: measured <= limit,
        }
    }

    fn near(name: &'static str, measured: f64, target: f64, tol: f64) -> Self {
        Self {
            name,
            measured,
            bound: format!("{target:.6} +/- {tol:.3e}"),
            pass: (measured - target).abs() <= tol,
        }
    }

    fn holds(name: &'static str, measured: f64, what: &str, pass: bool) -> Self {
        Self {
            name,
            measured,
            bound: what.to_string(),
            pass,
        }
    }
}

/// Maximum drifts over the recorded samples. `energy`, `h_mag` and
/// `kinetic` are relative to their initial magnitude; `h_z` and `h_diag`
/// to `max(1, |H(0)|)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Drifts {
    pub energy: f64,
    /// Same, for the energy with the coupled wheel term.
    pub energy_coupled: f64,
    pub h_z: f64,
    pub h_diag: f64,
    pub h_mag: f64,
    pub kinetic: f64,
    /// Largest per-component deviation of the 13-state from its start.
    pub state: f64,
    /// Largest `| |r_com| - z_G |`.
    pub com_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub scenario: Scenario,
    pub samples: usize,
    pub drifts: Option<Drifts>,
    /// Min and max of the unwrapped `(ψ, θ, φ)`.
    pub euler_min: Option<[f64; 3]>,
    pub euler_max: Option<[f64; 3]>,
    /// Final-half slopes `(ψ̇, θ̇, φ̇)`.
    pub euler_rates: Option<[f64; 3]>,
    /// Steady-precession roots predicted from the initial spin and tilt.
    pub predicted_precession: Option<PrecessionRoots>,
    pub poinsot: Vec<PoinsotRun>,
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// `key = value` report, one check per `check.<name>` line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario = {}", self.scenario);
        let _ = writeln!(s, "description = {}", self.scenario.description());
        let _ = writeln!(s, "samples = {}", self.samples);
        if let Some(d) = &self.drifts {
            for (k, v) in [
                ("energy_drift", d.energy),
                ("energy_coupled_drift", d.energy_coupled),
                ("hz_drift", d.h_z),
                ("hdiag_drift", d.h_diag),
                ("h_mag_drift", d.h_mag),
                ("kinetic_drift", d.kinetic),
                ("state_deviation", d.state),
                ("com_radius_error", d.com_radius),
            ] {
                let _ = writeln!(s, "{k} = {v:.6e}");
            }
        }
        let names = ["psi", "theta", "phi"];
        if let (Some(lo), Some(hi)) = (self.euler_min, self.euler_max) {
            for k in 0..3 {
                let _ = writeln!(s, "{}_min = {:.9}", names[k], lo[k]);
                let _ = writeln!(s, "{}_max = {:.9}", names[k], hi[k]);
            }
        }
        if let Some(r) = self.euler_rates {
            for k in 0..3 {
                let _ = writeln!(s, "{}_rate = {:.9}", names[k], r[k]);
            }
        }
        match self.predicted_precession {
            Some(PrecessionRoots::Two(a, b)) => {
                let _ = writeln!(s, "predicted_precession = {a:.6}, {b:.6}");
            }
            Some(PrecessionRoots::Single(a)) => {
                let _ = writeln!(s, "predicted_precession = {a:.6}");
            }
            None => {}
        }
        for (k, r) in self.poinsot.iter().enumerate() {
            let _ = writeln!(
                s,
                "member_{k:02} = H {:.6e}, T {:.6e}, sphere {:.3e}, ellipsoid {:.3e}, h3 {:.3e}",
                r.h_mag, r.t_val, r.max_sphere_residual, r.max_ellipsoid_residual, r.max_h3_drift
            );
        }
        for c in &self.checks {
            let verdict = if c.pass { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "check.{} = {:.6e} ({}) {verdict}", c.name, c.measured, c.bound);
        }
        let _ = writeln!(s, "result = {}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}

fn rel_scale(x0: f64) -> f64 {
    if x0.abs() > 0.0 {
        x0.abs()
    } else {
        1.0
    }
}

fn max_dev(xs: impl Iterator<Item = f64>, x0: f64) -> f64 {
    xs.map(|x| (x - x0).abs()).fold(0.0, f64::max)
}

fn drifts(traj: &Trajectory, rows: &[TraceRow], model: &CubliModel) -> Drifts {
    let o0 = &rows[0].obs;
    let h0 = o0.h_body.norm();
    let mom = h0.max(1.0);
    let ec0 = mechanical_energy_coupled(&rows[0].state, model).0;
    let a0 = rows[0].state.to_array();
    Drifts {
        energy: max_dev(rows.iter().map(|r| r.obs.e), o0.e) / rel_scale(o0.e),
        energy_coupled: max_dev(rows.iter().map(|r| mechanical_energy_coupled(&r.state, model).0), ec0)
            / rel_scale(ec0),
        h_z: max_dev(rows.iter().map(|r| r.obs.h_z), o0.h_z) / mom,
        h_diag: max_dev(rows.iter().map(|r| r.obs.h_diag), o0.h_diag) / mom,
        h_mag: max_dev(rows.iter().map(|r| r.obs.h_body.norm()), h0) / rel_scale(h0),
        kinetic: max_dev(rows.iter().map(|r| r.obs.t), o0.t) / rel_scale(o0.t),
        state: traj
            .samples
            .iter()
            .flat_map(|s| s.state.to_array().into_iter().zip(a0).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max),
        com_radius: max_dev(rows.iter().map(|r| r.obs.com_inertial.norm()), model.z_g),
    }
}

fn is_nondecreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0] - 1e-12)
}

/// Summary of a trajectory run, with the checks of its base scenario.
pub fn summarize(cfg: &ScenarioConfig, traj: &Trajectory, rows: &[TraceRow], model: &CubliModel) -> RunSummary {
    let d = drifts(traj, rows, model);
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let series = [
        rows.iter().map(|r| r.psi).collect::<Vec<_>>(),
        rows.iter().map(|r| r.obs.euler.theta).collect::<Vec<_>>(),
        rows.iter().map(|r| r.phi).collect::<Vec<_>>(),
    ];
    let lo = series
        .each_ref()
        .map(|s| s.iter().copied().fold(f64::INFINITY, f64::min));
    let hi = series
        .each_ref()
        .map(|s| s.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let rates = match (
        final_half_slope(&t, &series[0]),
        final_half_slope(&t, &series[1]),
        final_half_slope(&t, &series[2]),
    ) {
        (Ok(a), Ok(b), Ok(c)) => Some([a, b, c]),
        _ => None,
    };

    let s0 = &rows[0].state;
    let e0 = rows[0].obs.euler;
    let predicted = euler_rates_from_body(&e0, &s0.omega_c, &model.principal_rotation)
        .ok()
        .and_then(|r| steady_precession_rates(r.phid, e0.theta, model).ok());

    let mut checks = Vec::new();
    match cfg.scenario {
        Scenario::Sim1Energy => checks.push(Check::at_most("energy_drift", d.energy, th::ENERGY_REL_DRIFT)),
        Scenario::Sim2Momentum => {
            checks.push(Check::at_most("hz_drift", d.h_z, th::MOMENTUM_REL_DRIFT));
            checks.push(Check::at_most("hdiag_drift", d.h_diag, th::MOMENTUM_REL_DRIFT));
        }
        Scenario::Sim3StableEq | Scenario::Sim4UnstableEq => {
            checks.push(Check::at_most("state_deviation", d.state, th::EQUILIBRIUM_DEVIATION))
        }
        Scenario::Sim5Spin => {
            let expected = s0.omega_c.dot(&model.diagonal_axis());
            let [psid, thetad, phid] = rates.unwrap_or([f64::NAN; 3]);
            checks.push(Check::near("spin_rate", phid, expected, th::SPIN_RATE_TOL));
            checks.push(Check::at_most("precession_rate", psid.abs(), th::FLAT_RATE));
            checks.push(Check::at_most("nutation_rate", thetad.abs(), th::FLAT_RATE));
        }
        Scenario::Sim6Precession => {
            let n = t.len().max(1) - 1;
            let span = t[n] - t[0];
            let mean_psid = (series[0][n] - series[0][0]) / span;
            let mean_phid = (series[2][n] - series[2][0]) / span;
            let theta0 = e0.theta;
            let mean_theta = series[1].iter().sum::<f64>() / series[1].len() as f64;
            checks.push(Check::holds(
                "precession_monotone",
                mean_psid,
                "psi nondecreasing",
                is_nondecreasing(&series[0]),
            ));
            checks.push(Check::holds(
                "spin_monotone",
                mean_phid,
                "phi nondecreasing",
                is_nondecreasing(&series[2]),
            ));
            checks.push(Check::holds(
                "spin_exceeds_precession",
                mean_phid - mean_psid,
                "> 0",
                mean_phid > mean_psid,
            ));
            checks.push(Check::holds(
                "nutation_oscillates",
                mean_theta.to_degrees(),
                "theta crosses its mean, starts at the lower turning point",
                lo[1] < mean_theta && mean_theta < hi[1] && (theta0 - lo[1]).abs() <= th::STEADY_NUTATION_BAND,
            ));
        }
        Scenario::Sim8SteadyPrecession => {
            let band = max_dev(series[1].iter().copied(), e0.theta);
            checks.push(Check::at_most("nutation_band", band, th::STEADY_NUTATION_BAND));
            let target = th::STEADY_PRECESSION_RATES.0;
            let psid = rates.map_or(f64::NAN, |r| r[0]);
            checks.push(Check::near(
                "precession_rate",
                psid,
                target,
                th::PRECESSION_REL_TOL * target,
            ));
        }
        Scenario::Sim9PoinsotH | Scenario::Sim9PoinsotT => {}
    }

    RunSummary {
        scenario: cfg.scenario,
        samples: rows.len(),
        drifts: Some(d),
        euler_min: Some(lo),
        euler_max: Some(hi),
        euler_rates: rates,
        predicted_precession: predicted,
        poinsot: Vec::new(),
        checks,
        files: Vec::new(),
    }
}

/// Poinsot family summary: every member checked against the residual and
/// axial-drift bounds.
pub fn summarize_poinsot(cfg: &ScenarioConfig, runs: Vec<PoinsotRun>) -> RunSummary {
    let worst = |f: &dyn Fn(&PoinsotRun) -> f64| runs.iter().map(f).fold(0.0, f64::max);
    let sphere = worst(&|r| r.max_sphere_residual / (r.h_mag * r.h_mag));
    let ellipsoid = worst(&|r| r.max_ellipsoid_residual / (r.h_mag * r.h_mag));
    let h3 = worst(&|r| r.max_h3_drift);
    RunSummary {
        scenario: cfg.scenario,
        samples: runs.iter().map(|r| r.trace.len()).sum(),
        drifts: None,
        euler_min: None,
        euler_max: None,
        euler_rates: None,
        predicted_precession: None,
        checks: vec![
            Check::at_most("sphere_residual", sphere, th::POINSOT_REL_RESIDUAL),
            Check::at_most("ellipsoid_residual", ellipsoid, th::POINSOT_REL_RESIDUAL),
            Check::at_most("h3_drift", h3, th::H3_DRIFT),
        ],
        poinsot: runs,
        files: Vec::new(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let res = std::fs::write(&tmp, contents).and_then(|_| std::fs::rename(&tmp, path));
    res.map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

fn remove_outputs(dir: &Path, names: &[String]) {
    for n in names {
        let _ = std::fs::remove_file(dir.join(n));
    }
}

/// Runs a scenario and writes its outputs into `cfg.out_dir`:
/// `trace.csv` and `summary.txt`, or for Poinsot scenarios one
/// `member_NN.csv` per family member, `family.csv` and `summary.txt`.
///
/// If the integration fails, any output files of the run already in the
/// directory are removed before the error is returned.
pub fn run_scenario(cfg: &ScenarioConfig, model: &CubliModel) -> Result<RunSummary> {
    cfg.validate()?;
    let dir = cfg
        .out_dir
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("no output directory given".into()))?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    if let Some(p) = &cfg.poinsot {
        let mut names: Vec<String> = (0..p.n).map(member_file_name).collect();
        names.extend(["family.csv".to_string(), "summary.txt".to_string()]);
        let omegas = poinsot_family(p.mode, p.level, p.n, model)?;
        let runs = poinsot_family_runs(&omegas, &cfg.integrator_config(), model)
            .inspect_err(|_| remove_outputs(dir, &names))?;
        let mut written = Vec::new();
        let result = (|| {
            for (k, r) in runs.iter().enumerate() {
                let path = dir.join(member_file_name(k));
                write_file(&path, &poinsot_csv(r))?;
                written.push(path);
            }
            let path = dir.join("family.csv");
            write_file(&path, &family_csv(&runs))?;
            written.push(path);
            Ok(())
        })();
        result.inspect_err(|_| remove_outputs(dir, &names))?;
        let mut summary = summarize_poinsot(cfg, runs);
        let path = dir.join("summary.txt");
        write_file(&path, &summary.to_text())?;
        written.push(path);
        summary.files = written;
        return Ok(summary);
    }

    let names = ["trace.csv".to_string(), "summary.txt".to_string()];
    let s0 = cfg.initial_state(model);
    let traj = simulate(&s0, &cfg.integrator_config(), cubli_rhs(model, cfg.flags(), cfg.torque))
        .inspect_err(|_| remove_outputs(dir, &names))?;
    let rows = trace_rows(&traj, model);
    let mut summary = summarize(cfg, &traj, &rows, model);
    let trace = dir.join("trace.csv");
    let report = dir.join("summary.txt");
    write_file(&trace, &trace_csv(&rows))
        .and_then(|_| write_file(&report, &summary.to_text()))
        .inspect_err(|_| remove_outputs(dir, &names))?;
    summary.files = vec![trace, report];
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_scenarios_listed_and_accepted() {
        let text = list_scenarios();
        assert_eq!(text.lines().count(), 9);
        for line in text.lines() {
            let name = line.split_whitespace().next().unwrap();
            assert!(Scenario::from_name(name).is_ok());
        }
    }

    #[test]
    fn unknown_name_suggests_closest() {
        match Scenario::from_name("sim5_spn") {
            Err(Error::UnknownScenario { suggestion, .. }) => assert_eq!(suggestion.as_deref(), Some("sim5_spin")),
            other => panic!("{other:?}"),
        }
        let msg = Scenario::from_name("sim8_steady").unwrap_err().to_string();
        assert!(msg.contains("sim8_steady_precession"), "{msg}");
    }

    #[test]
    fn slope_of_exact_line() {
        let t: Vec<f64> = (0..100).map(|k| k as f64 * 0.01).collect();
        let y: Vec<f64> = t.iter().map(|t| 4.40 * t).collect();
        assert!((final_half_slope(&t, &y).unwrap() - 4.40).abs() < 1e-12);
        assert_eq!(
            final_half_slope(&t[..9], &y[..9]),
            Err(Error::TooFewSamples { needed: 10, got: 9 })
        );
    }

    #[test]
    fn unwrap_restores_ramp() {
        let ramp: Vec<f64> = (0..500).map(|k| k as f64 * 0.05).collect();
        let wrapped: Vec<f64> = ramp.iter().map(|a| crate::kinematics::wrap_angle(*a)).collect();
        for (a, b) in unwrap_angles(&wrapped).iter().zip(&ramp) {
            assert!((a - b).abs() < 1e-12);
        }
        let down: Vec<f64> = ramp.iter().map(|a| crate::kinematics::wrap_angle(-a)).collect();
        assert!((unwrap_angles(&down)[499] + ramp[499]).abs() < 1e-12);
    }

    #[test]
    fn orientation_parsing() {
        assert_eq!("identity".parse::<Orientation>(), Ok(Orientation::Identity));
        assert_eq!("nutated(10)".parse::<Orientation>(), Ok(Orientation::Nutated(10.0)));
        assert!(matches!(
            "1, 0, 0, 0".parse::<Orientation>(),
            Ok(Orientation::Explicit(_))
        ));
        assert!("2,0,0,0".parse::<Orientation>().is_err());
        assert!("1,0,0".parse::<Orientation>().is_err());
        assert!("sideways".parse::<Orientation>().is_err());
    }

    #[test]
    fn config_overrides_and_errors() {
        let cfg = ScenarioConfig::load(Some("sim1_energy"), Some("duration = 0.5\nomega_c = 1,2,3\n"), None).unwrap();
        assert_eq!(cfg.duration, 0.5);
        assert_eq!(cfg.rates, InitialRates::Body(Vec3::new(1.0, 2.0, 3.0)));

        let err = ScenarioConfig::load(Some("sim1_energy"), Some("duraton = 1\n"), None).unwrap_err();
        assert_eq!(
            err,
            Error::UnknownKey {
                key: "duraton".into(),
                line: 1
            }
        );
        let both = "omega_c = 1,1,1\neuler_rates = 0,0,1\n";
        assert!(matches!(
            ScenarioConfig::load(Some("sim1_energy"), Some(both), None),
            Err(Error::BadValue { line: 2, .. })
        ));
        let twice = "orientation = stable\norientation = unstable\n";
        assert!(matches!(
            ScenarioConfig::load(Some("sim1_energy"), Some(twice), None),
            Err(Error::BadValue { line: 2, .. })
        ));
        assert!(ScenarioConfig::load(Some("sim1_energy"), Some("poinsot_n = 3\n"), None).is_err());
        assert!(ScenarioConfig::load(Some("sim1_energy"), Some("scenario = sim5_spin\n"), None).is_err());
        assert!(ScenarioConfig::load(None, None, None).is_err());
    }

    #[test]
    fn env_dt_sits_between_builtin_and_file() {
        let cfg = ScenarioConfig::load(Some("sim5_spin"), None, Some("2e-3")).unwrap();
        assert_eq!(cfg.dt, 2e-3);
        let cfg = ScenarioConfig::load(Some("sim5_spin"), Some("dt = 5e-4"), Some("2e-3")).unwrap();
        assert_eq!(cfg.dt, 5e-4);
        assert!(ScenarioConfig::load(Some("sim5_spin"), None, Some("fast")).is_err());
    }

    #[test]
    fn euler_rate_initial_condition() {
        let m = CubliModel::reference();
        let cfg = ScenarioConfig::load(Some("sim6_precession"), Some("euler_rates = 0, 0, 10"), None).unwrap();
        let s = cfg.initial_state(&m);
        let e = quat_to_euler_zxz(&s.q, &m.principal_rotation);
        let r = euler_rates_from_body(&e, &s.omega_c, &m.principal_rotation).unwrap();
        assert!((r.phid - 10.0).abs() < 1e-12 && r.psid.abs() < 1e-12 && r.thetad.abs() < 1e-12);
    }

    #[test]
    fn csv_has_exact_header_and_width() {
        let m = CubliModel::reference();
        let cfg = ScenarioConfig {
            duration: 0.01,
            ..ScenarioConfig::builtin(Scenario::Sim2Momentum)
        };
        let traj = simulate(
            &cfg.initial_state(&m),
            &cfg.integrator_config(),
            cubli_rhs(&m, cfg.flags(), cfg.torque),
        )
        .unwrap();
        let csv = trace_csv(&trace_rows(&traj, &m));
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        for l in lines {
            let cells: Vec<&str> = l.split(',').collect();
            assert_eq!(cells.len(), 25);
            for c in cells {
                let x: f64 = c.parse().unwrap();
                assert_eq!(format!("{x:.16e}"), c);
            }
        }
    }
}
