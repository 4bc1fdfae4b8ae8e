//! Cascaded attitude and rate control with tilt-scheduled feed-forward.
//!
//! Outer loop: quaternion attitude error to a body rate setpoint. Inner
//! loop: PID on body rates with a low-passed derivative on the measured
//! rate, an anti-windup clamped integrator, and a tilt-scheduled roll trim.
//! Collective thrust combines the vertical acceleration command with the
//! tilt-dependent thrust feed-forward polynomial.

use crate::aero::AeroParams;
use crate::alloc::ControlDemand;
use crate::error::{Result, TiltwingError};
use crate::math::Quat;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct AttitudeGains {
    /// Attitude loop gain on the quaternion error imaginary part [1/s].
    pub kp_att: Vector3<f64>,
    /// Rate loop proportional gain [N m s/rad].
    pub kp_rate: Vector3<f64>,
    /// Rate loop derivative gain on the measured acceleration [N m s^2/rad].
    pub kd_rate: Vector3<f64>,
    /// Rate loop integral gain [N m/rad].
    pub ki_rate: Vector3<f64>,
    /// Elementwise integrator clamp [N m].
    pub int_limit: Vector3<f64>,
    /// Hover-frame roll trim, applied as tau_trim * cos(chi) [N m].
    pub tau_trim_roll: f64,
    /// Derivative low-pass cutoff [Hz].
    pub deriv_cutoff_hz: f64,
    /// Body rate setpoint clamp [rad/s].
    pub rate_limit: f64,
}

impl Default for AttitudeGains {
    fn default() -> Self {
        AttitudeGains {
            kp_att: Vector3::new(7.0, 7.0, 4.0),
            kp_rate: Vector3::new(9.0, 8.0, 10.0),
            kd_rate: Vector3::new(0.02, 0.02, 0.02),
            ki_rate: Vector3::new(3.0, 3.0, 2.0),
            int_limit: Vector3::new(2.0, 2.0, 2.0),
            tau_trim_roll: 0.0,
            deriv_cutoff_hz: 30.0,
            rate_limit: 6.0,
        }
    }
}

/// Integrator, derivative filter, and previous-sample memory of the rate
/// loop. One instance per vehicle; reset between runs.
#[derive(Debug, Clone, Copy, Default)]
pub struct ControllerState {
    pub omega_int: Vector3<f64>,
    prev_omega: Option<Vector3<f64>>,
    omega_dot_filt: Vector3<f64>,
}

impl ControllerState {
    pub fn reset(&mut self) {
        *self = ControllerState::default();
    }

    /// Filtered body angular acceleration estimate [rad/s^2].
    pub fn omega_dot(&self) -> Vector3<f64> {
        self.omega_dot_filt
    }
}

/// Commanded attitude plus the scalar channels the attitude loop passes
/// through: yaw-rate feed-forward, vertical acceleration (positive down,
/// FRD), and the overall wing tilt.
#[derive(Debug, Clone, Copy)]
pub struct AttitudeSetpoint {
    pub attitude: Quat,
    /// Feed-forward heading rate [rad/s].
    pub yaw_rate_ff: f64,
    /// Commanded vertical acceleration, positive down [m/s^2].
    pub a_z: f64,
    /// Overall wing tilt [rad].
    pub chi: f64,
}

impl AttitudeSetpoint {
    pub fn hover(chi: f64) -> Self {
        AttitudeSetpoint {
            attitude: Quat::IDENTITY,
            yaw_rate_ff: 0.0,
            a_z: 0.0,
            chi,
        }
    }
}

/// Attitude error quaternion q_err = q^-1 q_sp, canonicalized to the
/// half-sphere with non-negative scalar part so the vector part always
/// points along the short way around.
pub fn attitude_error(q: Quat, q_sp: Quat) -> Quat {
    q.inverse().mul(q_sp).canonicalized()
}

/// Outer loop: body rate setpoint from the attitude error, with the
/// heading-rate feed-forward on the body z axis.
pub fn attitude_law(q: Quat, sp: &AttitudeSetpoint, gains: &AttitudeGains) -> Vector3<f64> {
    let err = attitude_error(q, sp.attitude);
    let mut omega_sp = gains.kp_att.component_mul(&err.imag());
    omega_sp.z += sp.yaw_rate_ff;
    omega_sp.map(|w| w.clamp(-gains.rate_limit, gains.rate_limit))
}

/// Inner loop: torque setpoint from the rate error. Advances the
/// integrator and the derivative filter by `dt`.
pub fn rate_law(
    omega_sp: Vector3<f64>,
    omega: Vector3<f64>,
    chi: f64,
    gains: &AttitudeGains,
    state: &mut ControllerState,
    dt: f64,
) -> Result<Vector3<f64>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(TiltwingError::OutOfRange {
            what: "controller dt",
            value: dt,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    // Backward-difference angular acceleration through a single-pole
    // low-pass; first sample has no history and leaves the filter at zero.
    if let Some(prev) = state.prev_omega {
        let raw = (omega - prev) / dt;
        let rc = 1.0 / (2.0 * std::f64::consts::PI * gains.deriv_cutoff_hz);
        let alpha = dt / (dt + rc);
        state.omega_dot_filt += alpha * (raw - state.omega_dot_filt);
    }
    state.prev_omega = Some(omega);

    let err = omega_sp - omega;
    state.omega_int += gains.ki_rate.component_mul(&err) * dt;
    state.omega_int = Vector3::new(
        state.omega_int.x.clamp(-gains.int_limit.x, gains.int_limit.x),
        state.omega_int.y.clamp(-gains.int_limit.y, gains.int_limit.y),
        state.omega_int.z.clamp(-gains.int_limit.z, gains.int_limit.z),
    );

    let mut tau = gains.kp_rate.component_mul(&err)
        - gains.kd_rate.component_mul(&state.omega_dot_filt)
        + state.omega_int;
    // Residual aero asymmetry trim, active in hover, fading out with tilt.
    tau.x += gains.tau_trim_roll * chi.cos();
    Ok(tau)
}

/// Collective thrust: T_col = T_ff(chi) (1 - a_z / g) with a_z positive
/// down, so a_z = g (free fall) commands zero thrust and a_z = 0 commands
/// the level-flight feed-forward.
pub fn collective_thrust(a_z: f64, chi: f64, params: &AeroParams, g: f64) -> f64 {
    let t_ff = params.t_ff_eval(chi);
    (t_ff * (1.0 - a_z / g)).max(0.0)
}

/// One 200 Hz controller step: attitude law, rate law, collective thrust.
pub fn control_step(
    q: Quat,
    omega: Vector3<f64>,
    sp: &AttitudeSetpoint,
    params: &AeroParams,
    gains: &AttitudeGains,
    state: &mut ControllerState,
    g: f64,
    dt: f64,
) -> Result<ControlDemand> {
    let omega_sp = attitude_law(q, sp, gains);
    let tau = rate_law(omega_sp, omega, sp.chi, gains, state, dt)?;
    let t_col = collective_thrust(sp.a_z, sp.chi, params, g);
    Ok(ControlDemand {
        tau,
        t_col,
        chi: sp.chi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    const DT: f64 = 0.005;

    #[test]
    fn zero_error_zero_rate_setpoint() {
        let gains = AttitudeGains::default();
        let q = Quat::from_euler(0.3, -0.2, 1.1);
        let sp = AttitudeSetpoint {
            attitude: q,
            yaw_rate_ff: 0.0,
            a_z: 0.0,
            chi: FRAC_PI_2,
        };
        let w = attitude_law(q, &sp, &gains);
        assert!(w.norm() < 1e-12);
    }

    #[test]
    fn error_sign_points_the_short_way() {
        let gains = AttitudeGains::default();
        // Vehicle level, setpoint rolled +30 deg: need positive roll rate.
        let sp = AttitudeSetpoint {
            attitude: Quat::from_euler(30.0_f64.to_radians(), 0.0, 0.0),
            yaw_rate_ff: 0.0,
            a_z: 0.0,
            chi: FRAC_PI_2,
        };
        let w = attitude_law(Quat::IDENTITY, &sp, &gains);
        assert!(w.x > 0.0);
        assert!(w.y.abs() < 1e-12 && w.z.abs() < 1e-12);
        // And the mirrored case.
        let w2 = attitude_law(sp.attitude, &AttitudeSetpoint::hover(FRAC_PI_2), &gains);
        assert!(w2.x < 0.0);
    }

    #[test]
    fn error_handles_double_cover() {
        // q and -q are the same rotation; the canonicalized error must not
        // command a full turn.
        let q = Quat::from_euler(0.0, 0.0, 0.1);
        let mut neg = q;
        neg = Quat::new(-neg.w, -neg.x, -neg.y, -neg.z);
        let e = attitude_error(neg, q);
        assert!(e.imag().norm() < 1e-12);
        assert!(e.w >= 0.0);
    }

    #[test]
    fn yaw_feed_forward_passes_through() {
        let gains = AttitudeGains::default();
        let sp = AttitudeSetpoint {
            attitude: Quat::IDENTITY,
            yaw_rate_ff: 0.4,
            a_z: 0.0,
            chi: FRAC_PI_2,
        };
        let w = attitude_law(Quat::IDENTITY, &sp, &gains);
        assert_relative_eq!(w.z, 0.4, epsilon = 1e-12);
    }

    #[test]
    fn free_fall_command_zeroes_thrust() {
        let p = AeroParams::default();
        assert_relative_eq!(collective_thrust(9.81, FRAC_PI_2, &p, 9.81), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn hover_command_equals_feed_forward() {
        let p = AeroParams::default();
        let t = collective_thrust(0.0, FRAC_PI_2, &p, 9.81);
        assert_relative_eq!(t, p.t_ff_eval(FRAC_PI_2), epsilon = 1e-12);
    }

    #[test]
    fn collective_is_affine_in_a_z() {
        let p = AeroParams::default();
        let chi = 0.9;
        let t0 = collective_thrust(0.0, chi, &p, 9.81);
        let t1 = collective_thrust(1.0, chi, &p, 9.81);
        let t2 = collective_thrust(2.0, chi, &p, 9.81);
        assert_relative_eq!(t2 - t1, t1 - t0, epsilon = 1e-9);
        // More thrust for upward (negative z) acceleration.
        assert!(t0 > t1 && t1 > t2);
    }

    #[test]
    fn integrator_matches_closed_form_sum() {
        // Constant rate error e held for n steps: the integrator must equal
        // ki * e * n * dt exactly (before the clamp engages).
        let gains = AttitudeGains::default();
        let mut st = ControllerState::default();
        let e = Vector3::new(0.1, -0.05, 0.02);
        let n = 40;
        for _ in 0..n {
            rate_law(e, Vector3::zeros(), FRAC_PI_2, &gains, &mut st, DT).unwrap();
        }
        let expect = gains.ki_rate.component_mul(&e) * (n as f64 * DT);
        assert_relative_eq!(st.omega_int, expect, epsilon = 1e-12);
    }

    #[test]
    fn derivative_filter_tracks_step() {
        // A rate ramp gives a constant backward difference; the low-pass
        // output converges to it from below.
        let gains = AttitudeGains::default();
        let mut st = ControllerState::default();
        let slope = 2.0;
        let mut prev_filt = 0.0;
        for k in 0..200 {
            let omega = Vector3::new(slope * k as f64 * DT, 0.0, 0.0);
            rate_law(Vector3::zeros(), omega, FRAC_PI_2, &gains, &mut st, DT).unwrap();
            let f = st.omega_dot().x;
            assert!(f >= prev_filt - 1e-12 && f <= slope + 1e-9);
            prev_filt = f;
        }
        assert_relative_eq!(st.omega_dot().x, slope, max_relative = 1e-3);
    }

    #[test]
    fn roll_trim_scheduled_by_tilt() {
        let gains = AttitudeGains {
            tau_trim_roll: 0.5,
            ..Default::default()
        };
        let mut st = ControllerState::default();
        let tau_hover = rate_law(Vector3::zeros(), Vector3::zeros(), FRAC_PI_2, &gains, &mut st, DT)
            .unwrap();
        st.reset();
        let tau_fwd =
            rate_law(Vector3::zeros(), Vector3::zeros(), 0.0, &gains, &mut st, DT).unwrap();
        assert_relative_eq!(tau_hover.x, 0.0, epsilon = 1e-9);
        assert_relative_eq!(tau_fwd.x, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn rejects_bad_dt() {
        let gains = AttitudeGains::default();
        let mut st = ControllerState::default();
        assert!(rate_law(Vector3::zeros(), Vector3::zeros(), 1.0, &gains, &mut st, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn integrator_never_exceeds_clamp(
            ex in -5.0f64..5.0,
            ey in -5.0f64..5.0,
            ez in -5.0f64..5.0,
            n in 1usize..2000,
        ) {
            let gains = AttitudeGains::default();
            let mut st = ControllerState::default();
            let e = Vector3::new(ex, ey, ez);
            for _ in 0..n {
                rate_law(e, Vector3::zeros(), 1.0, &gains, &mut st, DT).unwrap();
            }
            for i in 0..3 {
                prop_assert!(st.omega_int[i].abs() <= gains.int_limit[i] + 1e-12);
            }
        }

        #[test]
        fn rate_setpoint_respects_limit(
            roll in -3.0f64..3.0,
            pitch in -1.4f64..1.4,
            yaw in -3.0f64..3.0,
        ) {
            let gains = AttitudeGains::default();
            let q = Quat::from_euler(roll, pitch, yaw);
            let sp = AttitudeSetpoint::hover(FRAC_PI_2);
            let w = attitude_law(q, &sp, &gains);
            for i in 0..3 {
                prop_assert!(w[i].abs() <= gains.rate_limit + 1e-12);
            }
        }
    }
}
