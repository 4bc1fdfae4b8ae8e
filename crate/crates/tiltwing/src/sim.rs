//! Rigid-body flight dynamics simulation with actuator lag and the closed
//! control loop.
//!
//! Physics runs at 1 kHz (RK4 by default) on the 13-dimensional state
//! (position, velocity, attitude quaternion, body rates). The controller
//! and allocation run decimated at 200 Hz. Rotor thrusts follow first
//! order lag dynamics; the tilt servos are rate limited.

use crate::aero::{self, AeroParams, WingSegment};
use crate::alloc::{self, ActuatorCommand, AllocLimits, Saturation};
use crate::ctrl::{self, AttitudeGains, AttitudeSetpoint, ControllerState};
use crate::error::{Result, TiltwingError};
use crate::geom::{thrust_dir, RigidBodyState, VehicleGeometry};
use crate::math::Quat;
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Rk4,
    SemiImplicitEuler,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Physics step [s].
    pub dt: f64,
    /// Controller runs every `control_decimation` physics steps.
    pub control_decimation: usize,
    pub integrator: Integrator,
    /// Rotor thrust first-order lag time constant [s].
    pub thrust_tau: f64,
    /// Tilt servo slew rate limit [rad/s].
    pub servo_rate: f64,
    /// Log every `log_decimation` physics steps.
    pub log_decimation: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-3,
            control_decimation: 5,
            integrator: Integrator::Rk4,
            thrust_tau: 0.05,
            servo_rate: 3.0,
            log_decimation: 10,
        }
    }
}

/// Electrical power model per rotor: momentum-theory induced power over a
/// propulsive efficiency, plus a profile term linear in thrust.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerModel {
    pub eta_prop: f64,
    /// Profile/ESC losses [W/N].
    pub k_profile: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        PowerModel {
            eta_prop: 0.75,
            k_profile: 2.0,
        }
    }
}

impl PowerModel {
    pub fn rotor_power(&self, thrust: f64, geometry: &VehicleGeometry) -> f64 {
        let t = thrust.abs();
        t.powf(1.5) / (2.0 * geometry.rho * geometry.disc_area()).sqrt() / self.eta_prop
            + self.k_profile * t
    }

    pub fn total_power(&self, act: &ActuatorState, geometry: &VehicleGeometry) -> f64 {
        self.rotor_power(act.t_r, geometry)
            + self.rotor_power(act.t_l, geometry)
            + self.rotor_power(act.t_t, geometry)
    }
}

/// Physical actuator outputs trailing the commanded values.
#[derive(Debug, Clone, Copy)]
pub struct ActuatorState {
    pub t_r: f64,
    pub t_l: f64,
    pub t_t: f64,
    pub zeta_r: f64,
    pub zeta_l: f64,
}

impl ActuatorState {
    pub fn new(chi: f64) -> Self {
        ActuatorState {
            t_r: 0.0,
            t_l: 0.0,
            t_t: 0.0,
            zeta_r: chi,
            zeta_l: chi,
        }
    }

    pub fn chi(&self) -> f64 {
        0.5 * (self.zeta_r + self.zeta_l)
    }

    pub fn epsilon(&self) -> f64 {
        0.5 * (self.zeta_r - self.zeta_l)
    }

    /// Advances the lag and slew dynamics by `dt` toward `cmd`. The thrust
    /// lag uses the exact exponential update, so it is step-size invariant.
    pub fn update(&mut self, cmd: &ActuatorCommand, cfg: &SimConfig, dt: f64) {
        let a = 1.0 - (-dt / cfg.thrust_tau).exp();
        self.t_r += a * (cmd.t_r - self.t_r);
        self.t_l += a * (cmd.t_l - self.t_l);
        self.t_t += a * (cmd.t_t - self.t_t);
        let slew = cfg.servo_rate * dt;
        self.zeta_r += (cmd.zeta_r() - self.zeta_r).clamp(-slew, slew);
        self.zeta_l += (cmd.zeta_l() - self.zeta_l).clamp(-slew, slew);
    }

    /// View of the actuator state in the command type consumed by the aero
    /// model.
    pub fn as_command(&self) -> ActuatorCommand {
        ActuatorCommand {
            t_r: self.t_r,
            t_l: self.t_l,
            t_t: self.t_t,
            chi: self.chi(),
            epsilon: self.epsilon(),
            saturation: Saturation::default(),
        }
    }
}

/// Propulsive wrench (body force, torque about the CoG) from the three
/// rotors. `tail_scale` models tail thrust loss under lateral inflow.
pub fn rotor_wrench(
    act: &ActuatorState,
    geometry: &VehicleGeometry,
    tail_scale: f64,
) -> (Vector3<f64>, Vector3<f64>) {
    let cog = geometry.cog();
    let (pos_r, pos_l) = geometry.rotor_positions();
    let f_r = thrust_dir(act.zeta_r) * act.t_r;
    let f_l = thrust_dir(act.zeta_l) * act.t_l;
    let f_t = Vector3::new(0.0, 0.0, -act.t_t * tail_scale);
    let force = f_r + f_l + f_t;
    let torque = (pos_r - cog).cross(&f_r)
        + (pos_l - cog).cross(&f_l)
        + (geometry.tail_position() - cog).cross(&f_t);
    (force, torque)
}

#[derive(Clone, Copy)]
struct StateDeriv {
    d_pos: Vector3<f64>,
    d_vel: Vector3<f64>,
    d_q: [f64; 4],
    d_omega: Vector3<f64>,
}

fn derivative<F>(state: &RigidBodyState, wrench: &F, geometry: &VehicleGeometry) -> StateDeriv
where
    F: Fn(&RigidBodyState) -> (Vector3<f64>, Vector3<f64>),
{
    let (force_body, torque_body) = wrench(state);
    let gravity = Vector3::new(0.0, 0.0, geometry.g);
    let accel = gravity + state.attitude.rotate(force_body) / geometry.m;
    let i_omega = state.inertia * state.body_rates;
    let d_omega = state
        .inertia
        .try_inverse()
        .expect("inertia validated positive definite")
        * (torque_body - state.body_rates.cross(&i_omega));
    StateDeriv {
        d_pos: state.velocity,
        d_vel: accel,
        d_q: state.attitude.derivative(state.body_rates),
        d_omega,
    }
}

fn apply(state: &RigidBodyState, d: &StateDeriv, dt: f64) -> RigidBodyState {
    let q = [
        state.attitude.w + d.d_q[0] * dt,
        state.attitude.x + d.d_q[1] * dt,
        state.attitude.y + d.d_q[2] * dt,
        state.attitude.z + d.d_q[3] * dt,
    ];
    RigidBodyState {
        position: state.position + d.d_pos * dt,
        velocity: state.velocity + d.d_vel * dt,
        attitude: Quat::new(q[0], q[1], q[2], q[3]),
        body_rates: state.body_rates + d.d_omega * dt,
        inertia: state.inertia,
    }
}

/// One physics step. `wrench` returns the body-frame force (gravity
/// excluded) and torque about the CoG as a function of state; RK4
/// re-evaluates it at the substeps. The attitude quaternion is
/// renormalized after the step.
pub fn step_physics<F>(
    state: &RigidBodyState,
    wrench: &F,
    geometry: &VehicleGeometry,
    dt: f64,
    integrator: Integrator,
) -> Result<RigidBodyState>
where
    F: Fn(&RigidBodyState) -> (Vector3<f64>, Vector3<f64>),
{
    let mut next = match integrator {
        Integrator::Rk4 => {
            let k1 = derivative(state, wrench, geometry);
            let k2 = derivative(&apply(state, &k1, dt / 2.0), wrench, geometry);
            let k3 = derivative(&apply(state, &k2, dt / 2.0), wrench, geometry);
            let k4 = derivative(&apply(state, &k3, dt), wrench, geometry);
            let combo = StateDeriv {
                d_pos: (k1.d_pos + 2.0 * k2.d_pos + 2.0 * k3.d_pos + k4.d_pos) / 6.0,
                d_vel: (k1.d_vel + 2.0 * k2.d_vel + 2.0 * k3.d_vel + k4.d_vel) / 6.0,
                d_q: [
                    (k1.d_q[0] + 2.0 * k2.d_q[0] + 2.0 * k3.d_q[0] + k4.d_q[0]) / 6.0,
                    (k1.d_q[1] + 2.0 * k2.d_q[1] + 2.0 * k3.d_q[1] + k4.d_q[1]) / 6.0,
                    (k1.d_q[2] + 2.0 * k2.d_q[2] + 2.0 * k3.d_q[2] + k4.d_q[2]) / 6.0,
                    (k1.d_q[3] + 2.0 * k2.d_q[3] + 2.0 * k3.d_q[3] + k4.d_q[3]) / 6.0,
                ],
                d_omega: (k1.d_omega + 2.0 * k2.d_omega + 2.0 * k3.d_omega + k4.d_omega) / 6.0,
            };
            apply(state, &combo, dt)
        }
        Integrator::SemiImplicitEuler => {
            // Velocity first, then position with the updated velocity.
            let d = derivative(state, wrench, geometry);
            let velocity = state.velocity + d.d_vel * dt;
            let body_rates = state.body_rates + d.d_omega * dt;
            let q = [
                state.attitude.w + d.d_q[0] * dt,
                state.attitude.x + d.d_q[1] * dt,
                state.attitude.y + d.d_q[2] * dt,
                state.attitude.z + d.d_q[3] * dt,
            ];
            RigidBodyState {
                position: state.position + velocity * dt,
                velocity,
                attitude: Quat::new(q[0], q[1], q[2], q[3]),
                body_rates,
                inertia: state.inertia,
            }
        }
    };
    next.attitude = next.attitude.normalized();
    let finite = next.position.iter().all(|v| v.is_finite())
        && next.velocity.iter().all(|v| v.is_finite())
        && next.body_rates.iter().all(|v| v.is_finite())
        && next.attitude.norm().is_finite();
    if !finite {
        return Err(TiltwingError::NonFinite("integrated state"));
    }
    Ok(next)
}

/// One knot of the pilot-replacement script.
#[derive(Debug, Clone, Copy)]
pub struct TimelineKnot {
    pub t: f64,
    /// Commanded overall wing tilt [rad].
    pub chi: f64,
    /// Commanded attitude (stored as ZYX Euler angles [rad] so the knots
    /// interpolate componentwise).
    pub euler: Vector3<f64>,
    /// Commanded vertical acceleration, positive down [m/s^2]. `None`
    /// hands the channel to the altitude-hold loop.
    pub a_z: Option<f64>,
    /// Heading-rate feed-forward [rad/s].
    pub yaw_rate_ff: f64,
}

impl TimelineKnot {
    pub fn level_chi(t: f64, chi: f64) -> Self {
        TimelineKnot {
            t,
            chi,
            euler: Vector3::zeros(),
            a_z: None,
            yaw_rate_ff: 0.0,
        }
    }
}

/// Interpolated command sample at one control tick.
#[derive(Debug, Clone, Copy)]
pub struct TimelineSample {
    pub chi: f64,
    pub attitude: Quat,
    pub a_z: Option<f64>,
    pub yaw_rate_ff: f64,
}

/// Piecewise-linear command script, clamped outside the knot range.
#[derive(Debug, Clone)]
pub struct Timeline {
    pub knots: Vec<TimelineKnot>,
}

impl Timeline {
    pub fn constant_chi(chi: f64) -> Self {
        Timeline {
            knots: vec![TimelineKnot::level_chi(0.0, chi)],
        }
    }

    pub fn from_chi_knots(knots: &[(f64, f64)]) -> Self {
        Timeline {
            knots: knots
                .iter()
                .map(|&(t, chi)| TimelineKnot::level_chi(t, chi))
                .collect(),
        }
    }

    pub fn validate(&self, chi_min: f64) -> Result<()> {
        if self.knots.is_empty() {
            return Err(TiltwingError::InvalidScenario("empty timeline".into()));
        }
        for pair in self.knots.windows(2) {
            if pair[1].t <= pair[0].t {
                return Err(TiltwingError::InvalidScenario(
                    "timeline times must be strictly increasing".into(),
                ));
            }
        }
        for k in &self.knots {
            if !(k.chi >= chi_min - 1e-9 && k.chi <= std::f64::consts::FRAC_PI_2 + 1e-9) {
                return Err(TiltwingError::InvalidScenario(format!(
                    "chi command {} rad outside [chi_min, pi/2]",
                    k.chi
                )));
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> TimelineSample {
        let k = &self.knots;
        let sample = |knot: &TimelineKnot| TimelineSample {
            chi: knot.chi,
            attitude: Quat::from_euler(knot.euler.x, knot.euler.y, knot.euler.z),
            a_z: knot.a_z,
            yaw_rate_ff: knot.yaw_rate_ff,
        };
        if t <= k[0].t {
            return sample(&k[0]);
        }
        for pair in k.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if t <= b.t {
                let s = (t - a.t) / (b.t - a.t);
                let lerp = |x: f64, y: f64| x + (y - x) * s;
                let euler = a.euler + (b.euler - a.euler) * s;
                // The acceleration channel only interpolates when both
                // ends script it; a gap on either side yields the hold.
                let a_z = match (a.a_z, b.a_z) {
                    (Some(x), Some(y)) => Some(lerp(x, y)),
                    _ => None,
                };
                return TimelineSample {
                    chi: lerp(a.chi, b.chi),
                    attitude: Quat::from_euler(euler.x, euler.y, euler.z),
                    a_z,
                    yaw_rate_ff: lerp(a.yaw_rate_ff, b.yaw_rate_ff),
                };
            }
        }
        sample(&k[k.len() - 1])
    }
}

/// Altitude-hold outer loop gains. The commanded vertical acceleration is
/// divided by sin^2(chi) (floored) to compensate the fading vertical
/// thrust authority at low tilt, then clamped.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct AltitudeGains {
    pub kp: f64,
    pub kd: f64,
    pub ki: f64,
    pub int_limit: f64,
    /// Floor on the sin^2(chi) authority schedule.
    pub authority_floor: f64,
    /// Clamp on the scheduled acceleration command, as a fraction of g.
    pub accel_limit_g: f64,
}

impl Default for AltitudeGains {
    fn default() -> Self {
        AltitudeGains {
            kp: 1.2,
            kd: 1.6,
            ki: 0.25,
            int_limit: 3.0,
            authority_floor: 0.06,
            accel_limit_g: 0.45,
        }
    }
}

/// Full closed-loop mission description (runtime form; the TOML layer in
/// `scenario` maps onto this).
#[derive(Debug, Clone)]
pub struct Mission {
    pub geometry: VehicleGeometry,
    pub inertia: Matrix3<f64>,
    pub params: AeroParams,
    pub gains: AttitudeGains,
    pub alt_gains: AltitudeGains,
    pub limits: AllocLimits,
    pub power: PowerModel,
    pub config: SimConfig,
    pub timeline: Timeline,
    pub duration: f64,
    /// Steady wind, NED [m/s].
    pub wind: Vector3<f64>,
    /// Standard deviation of the seeded gust process [m/s]; 0 disables.
    pub gust_std: f64,
    pub seed: u64,
    pub initial: RigidBodyState,
    /// Altitude reference [m, positive up]; `None` holds the initial one.
    pub altitude_ref: Option<f64>,
}

impl Mission {
    pub fn hover(duration: f64) -> Self {
        let geometry = VehicleGeometry::default();
        let inertia = Matrix3::from_diagonal(&Vector3::new(0.45, 0.40, 0.70));
        Mission {
            geometry,
            inertia,
            params: AeroParams::default(),
            gains: AttitudeGains::default(),
            alt_gains: AltitudeGains::default(),
            limits: AllocLimits::default(),
            power: PowerModel::default(),
            config: SimConfig::default(),
            timeline: Timeline::constant_chi(std::f64::consts::FRAC_PI_2),
            duration,
            wind: Vector3::zeros(),
            gust_std: 0.0,
            seed: 0,
            initial: RigidBodyState::at_rest(inertia),
            altitude_ref: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.initial.validate()?;
        self.timeline.validate(self.geometry.chi_min)?;
        self.params.validate()?;
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(TiltwingError::InvalidScenario(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        if self.config.dt <= 0.0 || self.config.control_decimation == 0 {
            return Err(TiltwingError::InvalidScenario(
                "dt must be positive and control_decimation nonzero".into(),
            ));
        }
        Ok(())
    }
}

/// One log sample of the closed-loop run.
#[derive(Debug, Clone, Copy)]
pub struct LogRow {
    pub t: f64,
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub attitude: Quat,
    pub body_rates: Vector3<f64>,
    pub chi: f64,
    pub epsilon: f64,
    pub t_r: f64,
    pub t_l: f64,
    pub t_t: f64,
    pub zeta_r: f64,
    pub zeta_l: f64,
    pub power_total: f64,
    pub airspeed: f64,
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub rows: Vec<LogRow>,
    pub final_state: RigidBodyState,
    /// Fraction of controller steps with any allocation saturation.
    pub saturation_fraction: f64,
}

impl SimResult {
    /// Mean electrical power over `[t0, t1]` [W].
    pub fn mean_power(&self, t0: f64, t1: f64) -> f64 {
        let sel: Vec<_> = self
            .rows
            .iter()
            .filter(|r| r.t >= t0 && r.t <= t1)
            .collect();
        if sel.is_empty() {
            return f64::NAN;
        }
        sel.iter().map(|r| r.power_total).sum::<f64>() / sel.len() as f64
    }
}

/// Runs the closed loop: 200 Hz attitude/allocation over 1 kHz physics
/// with actuator dynamics and the full aero model.
pub fn run_mission(mission: &Mission) -> Result<SimResult> {
    mission.validate()?;
    let m = mission;
    let segments: Vec<WingSegment> = aero::default_segments(&m.geometry);
    let mut state = m.initial;
    state.inertia = m.inertia;
    let mut ctrl_state = ControllerState::default();
    let mut act = ActuatorState::new(m.timeline.eval(0.0).chi);
    let mut cmd = act.as_command();
    let z_ref = m.altitude_ref.map(|h| -h).unwrap_or(state.position.z);
    let mut alt_int = 0.0;
    // First-order (AR(1)) gust process updated at the control rate.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(m.seed);
    let mut gust = Vector3::zeros();
    let mut wind = m.wind;
    let dt = m.config.dt;
    let ctrl_dt = dt * m.config.control_decimation as f64;
    let steps = (m.duration / dt).round() as usize;
    let mut rows = Vec::with_capacity(steps / m.config.log_decimation + 2);
    let mut ctrl_steps = 0usize;
    let mut sat_steps = 0usize;

    let mut limits = m.limits;
    limits.tau_aero_scale = m.params.tau_aero_scale;

    for i in 0..=steps {
        let t = i as f64 * dt;

        if i % m.config.control_decimation == 0 {
            let tl = m.timeline.eval(t);
            let chi_sp = tl
                .chi
                .clamp(m.geometry.chi_min, std::f64::consts::FRAC_PI_2);
            if m.gust_std > 0.0 {
                let tau_gust = 2.0;
                let rho = (-ctrl_dt / tau_gust).exp();
                let s = m.gust_std * (1.0 - rho * rho).sqrt();
                let mut normal = || -> f64 {
                    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                    let u2: f64 = rng.gen_range(0.0..1.0);
                    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
                };
                gust = gust * rho + Vector3::new(normal(), normal(), normal()) * s;
                wind = m.wind + gust;
            }
            // Altitude hold: PID on z (down positive), authority-scheduled.
            // A scripted a_z knot overrides it.
            let a_z = match tl.a_z {
                Some(a) => a,
                None => {
                    let ag = &m.alt_gains;
                    let e = z_ref - state.position.z;
                    alt_int =
                        (alt_int + ag.ki * e * ctrl_dt).clamp(-ag.int_limit, ag.int_limit);
                    let a_raw = ag.kp * e - ag.kd * state.velocity.z + alt_int;
                    let authority = chi_sp.sin().powi(2).max(ag.authority_floor);
                    let lim = ag.accel_limit_g * m.geometry.g;
                    (a_raw / authority).clamp(-lim, lim)
                }
            };

            let sp = AttitudeSetpoint {
                attitude: tl.attitude,
                yaw_rate_ff: tl.yaw_rate_ff,
                a_z,
                chi: chi_sp,
            };
            let demand = ctrl::control_step(
                state.attitude,
                state.body_rates,
                &sp,
                &m.params,
                &m.gains,
                &mut ctrl_state,
                m.geometry.g,
                ctrl_dt,
            )?;
            cmd = alloc::allocate_with(&demand, &m.geometry, &limits)?;
            ctrl_steps += 1;
            if cmd.saturation.any() {
                sat_steps += 1;
            }
        }

        if i % m.config.log_decimation == 0 {
            rows.push(LogRow {
                t,
                position: state.position,
                velocity: state.velocity,
                attitude: state.attitude,
                body_rates: state.body_rates,
                chi: act.chi(),
                epsilon: act.epsilon(),
                t_r: act.t_r,
                t_l: act.t_l,
                t_t: act.t_t,
                zeta_r: act.zeta_r,
                zeta_l: act.zeta_l,
                power_total: m.power.total_power(&act, &m.geometry),
                airspeed: state.air_velocity_body(wind).norm(),
            });
        }
        if i == steps {
            break;
        }

        act.update(&cmd, &m.config, dt);
        let act_cmd = act.as_command();
        let v_y_air = state.air_velocity_body(wind).y;
        let tail_scale = (1.0 - m.params.tail_inflow_sens * v_y_air.abs()).clamp(0.5, 1.0);
        let wrench = |s: &RigidBodyState| {
            let (f_rot, tau_rot) = rotor_wrench(&act, &m.geometry, tail_scale);
            let (f_aero, tau_aero) =
                aero::wing_wrench(s, &act_cmd, wind, &m.params, &m.geometry, &segments)
                    .unwrap_or((Vector3::zeros(), Vector3::zeros()));
            (f_rot + f_aero, tau_rot + tau_aero)
        };
        state = step_physics(&state, &wrench, &m.geometry, dt, m.config.integrator)
            .map_err(|_| TiltwingError::Diverged {
                t,
                reason: "non-finite state".into(),
            })?;
        if state.position.norm() > 1e5 || state.velocity.norm() > 1e3 {
            return Err(TiltwingError::Diverged {
                t,
                reason: "state out of bounds".into(),
            });
        }
    }

    Ok(SimResult {
        rows,
        final_state: state,
        saturation_fraction: sat_steps as f64 / ctrl_steps.max(1) as f64,
    })
}
