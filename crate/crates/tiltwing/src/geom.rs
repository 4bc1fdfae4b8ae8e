//! Vehicle geometry and rigid-body state.
//!
//! The allocation origin `S` sits at the intersection of the wing tilt axis
//! and the fuselage centerline. The main rotors (and the wing tilt hinges)
//! are at (0, +-b, 0), the tail rotor at (-l, 0, 0). The center of gravity is
//! at (x_offset, y_offset, -z_offset) in the FRD body frame, i.e. a positive
//! `z_offset` places the CoG above `S`.

use crate::error::{Result, TiltwingError};
use crate::math::Quat;
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleGeometry {
    /// Rotor arm half-span [m]: main rotors at y = +-b.
    pub b: f64,
    /// Tail arm length [m]: tail rotor at x = -l.
    pub l: f64,
    /// CoG offset from S along body x [m].
    pub x_offset: f64,
    /// CoG offset from S along body y [m].
    pub y_offset: f64,
    /// CoG offset from S, positive above S [m].
    pub z_offset: f64,
    /// Mass [kg].
    pub m: f64,
    /// Gravity [m/s^2].
    pub g: f64,
    /// Propeller diameter [m].
    pub d_prop: f64,
    /// Air density [kg/m^3].
    pub rho: f64,
    /// Wingspan [m].
    pub wingspan: f64,
    /// Chord length [m].
    pub chord: f64,
    /// Minimal overall wing deflection [rad].
    pub chi_min: f64,
}

impl Default for VehicleGeometry {
    /// Desk-scale defaults. Only wingspan (1.5 m), chord (0.26 m) and the
    /// ~10 deg minimum tilt come from the vehicle characterization; the rest
    /// are plausible configuration values and are meant to be overridden
    /// from the scenario file.
    fn default() -> Self {
        VehicleGeometry {
            b: 0.75,
            l: 0.55,
            x_offset: 0.0,
            y_offset: 0.0,
            z_offset: 0.0,
            m: 5.0,
            g: 9.81,
            d_prop: 0.53,
            rho: 1.225,
            wingspan: 1.5,
            chord: 0.26,
            chi_min: 10.0_f64.to_radians(),
        }
    }
}

impl VehicleGeometry {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("b", self.b),
            ("l", self.l),
            ("m", self.m),
            ("D", self.d_prop),
            ("rho", self.rho),
            ("g", self.g),
            ("wingspan", self.wingspan),
            ("chord", self.chord),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(TiltwingError::InvalidGeometry(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.chi_min > 0.0 && self.chi_min < FRAC_PI_2) {
            return Err(TiltwingError::OutOfRange {
                what: "chi_min",
                value: self.chi_min,
                min: 0.0,
                max: FRAC_PI_2,
            });
        }
        Ok(())
    }

    /// CoG position in the body frame, relative to the allocation origin S.
    pub fn cog(&self) -> Vector3<f64> {
        Vector3::new(self.x_offset, self.y_offset, -self.z_offset)
    }

    /// Main rotor positions relative to S: (right, left).
    pub fn rotor_positions(&self) -> (Vector3<f64>, Vector3<f64>) {
        (
            Vector3::new(0.0, self.b, 0.0),
            Vector3::new(0.0, -self.b, 0.0),
        )
    }

    pub fn tail_position(&self) -> Vector3<f64> {
        Vector3::new(-self.l, 0.0, 0.0)
    }

    /// Propeller disc area [m^2].
    pub fn disc_area(&self) -> f64 {
        std::f64::consts::PI * self.d_prop * self.d_prop / 4.0
    }
}

/// Thrust axis direction in the body frame for wing tilt `zeta`:
/// straight up (-z) at zeta = pi/2, forward (+x) at zeta = 0.
pub fn thrust_dir(zeta: f64) -> Vector3<f64> {
    Vector3::new(zeta.cos(), 0.0, -zeta.sin())
}

#[derive(Debug, Clone, Copy)]
pub struct RigidBodyState {
    /// Inertial (NED) position [m].
    pub position: Vector3<f64>,
    /// Inertial velocity [m/s].
    pub velocity: Vector3<f64>,
    /// Attitude q_ib (body to inertial).
    pub attitude: Quat,
    /// Body rates [rad/s].
    pub body_rates: Vector3<f64>,
    /// Body inertia tensor [kg m^2].
    pub inertia: Matrix3<f64>,
}

impl RigidBodyState {
    pub fn at_rest(inertia: Matrix3<f64>) -> Self {
        RigidBodyState {
            position: Vector3::zeros(),
            velocity: Vector3::zeros(),
            attitude: Quat::IDENTITY,
            body_rates: Vector3::zeros(),
            inertia,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.position.iter().all(|v| v.is_finite())
            || !self.velocity.iter().all(|v| v.is_finite())
            || !self.body_rates.iter().all(|v| v.is_finite())
            || !self.attitude.norm().is_finite()
        {
            return Err(TiltwingError::NonFinite("rigid body state"));
        }
        if (self.attitude.norm() - 1.0).abs() > 1e-6 {
            return Err(TiltwingError::NonFinite("attitude norm"));
        }
        // Symmetric positive definite inertia.
        if (self.inertia - self.inertia.transpose()).norm() > 1e-9 {
            return Err(TiltwingError::InvalidGeometry(
                "inertia must be symmetric".into(),
            ));
        }
        if self.inertia.symmetric_eigenvalues().iter().any(|&e| e <= 0.0) {
            return Err(TiltwingError::InvalidGeometry(
                "inertia must be positive definite".into(),
            ));
        }
        Ok(())
    }

    /// Airspeed vector in the body frame given an inertial wind field.
    pub fn air_velocity_body(&self, wind_inertial: Vector3<f64>) -> Vector3<f64> {
        self.attitude.rotate_inv(self.velocity - wind_inertial)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_geometry_is_valid() {
        VehicleGeometry::default().validate().unwrap();
    }

    #[test]
    fn rejects_nonpositive_mass() {
        let g = VehicleGeometry {
            m: 0.0,
            ..Default::default()
        };
        assert!(g.validate().is_err());
    }

    #[test]
    fn thrust_dir_endpoints() {
        assert_relative_eq!(
            thrust_dir(FRAC_PI_2),
            Vector3::new(0.0, 0.0, -1.0),
            epsilon = 1e-12
        );
        assert_relative_eq!(thrust_dir(0.0), Vector3::new(1.0, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn rejects_asymmetric_inertia() {
        let mut s = RigidBodyState::at_rest(Matrix3::from_diagonal(&Vector3::new(0.4, 0.4, 0.7)));
        s.inertia[(0, 1)] = 0.2;
        assert!(s.validate().is_err());
    }
}
