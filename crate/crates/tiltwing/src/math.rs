//! Quaternion algebra and frame conventions shared by the whole stack.
//!
//! Frame conventions used everywhere in this crate:
//!
//! * Body frame: x forward, y right, z down (FRD, right-handed).
//! * Inertial frame: NED (north, east, down). Altitude is `-z`.
//! * `Quat` is a Hamilton-convention unit quaternion. The vehicle attitude
//!   `q_ib` rotates body-frame vectors into the inertial frame.
//! * Angles are radians everywhere inside the library; degrees appear only
//!   at CLI/config boundaries.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

/// Unit rotation quaternion, Hamilton convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub const IDENTITY: Quat = Quat {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Quat {
        Quat { w, x, y, z }.normalized()
    }

    /// Rotation of `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Quat {
        let n = axis.norm();
        if n < 1e-12 {
            return Quat::IDENTITY;
        }
        let half = 0.5 * angle;
        let s = half.sin() / n;
        Quat {
            w: half.cos(),
            x: axis.x * s,
            y: axis.y * s,
            z: axis.z * s,
        }
    }

    /// ZYX Euler angles (yaw about z, then pitch about y, then roll about x).
    pub fn from_euler(roll: f64, pitch: f64, yaw: f64) -> Quat {
        let qz = Quat::from_axis_angle(Vector3::z(), yaw);
        let qy = Quat::from_axis_angle(Vector3::y(), pitch);
        let qx = Quat::from_axis_angle(Vector3::x(), roll);
        qz.mul(qy).mul(qx)
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(&self) -> Quat {
        let n = self.norm();
        assert!(n > 1e-12, "cannot normalize a zero quaternion");
        Quat {
            w: self.w / n,
            x: self.x / n,
            y: self.y / n,
            z: self.z / n,
        }
    }

    /// Same rotation with w >= 0 (q and -q are the same rotation).
    pub fn canonicalized(&self) -> Quat {
        if self.w < 0.0 {
            Quat {
                w: -self.w,
                x: -self.x,
                y: -self.y,
                z: -self.z,
            }
        } else {
            *self
        }
    }

    pub fn conjugate(&self) -> Quat {
        Quat {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Inverse; equals the conjugate for unit quaternions.
    pub fn inverse(&self) -> Quat {
        self.conjugate()
    }

    /// Hamilton product `self (x) rhs`, renormalized.
    pub fn mul(&self, rhs: Quat) -> Quat {
        let (aw, ax, ay, az) = (self.w, self.x, self.y, self.z);
        let (bw, bx, by, bz) = (rhs.w, rhs.x, rhs.y, rhs.z);
        Quat {
            w: aw * bw - ax * bx - ay * by - az * bz,
            x: aw * bx + ax * bw + ay * bz - az * by,
            y: aw * by - ax * bz + ay * bw + az * bx,
            z: aw * bz + ax * by - ay * bx + az * bw,
        }
        .normalized()
    }

    /// Imaginary (vector) part.
    pub fn imag(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    /// Rotates `v` by this quaternion: for the attitude `q_ib` this takes
    /// body-frame vectors into the inertial frame.
    pub fn rotate(&self, v: Vector3<f64>) -> Vector3<f64> {
        // q v q^-1 expanded; cheaper than two Hamilton products.
        let u = self.imag();
        let s = self.w;
        u * 2.0 * u.dot(&v) + v * (s * s - u.dot(&u)) + u.cross(&v) * 2.0 * s
    }

    /// Rotates `v` by the inverse rotation (inertial into body for `q_ib`).
    pub fn rotate_inv(&self, v: Vector3<f64>) -> Vector3<f64> {
        self.conjugate().rotate(v)
    }

    /// Equivalent rotation matrix (body-to-inertial for the attitude).
    pub fn to_matrix(&self) -> Matrix3<f64> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// Recovers a quaternion from a rotation matrix (Shepperd's method).
    pub fn from_matrix(m: &Matrix3<f64>) -> Quat {
        let tr = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        let q = if tr > 0.0 {
            let s = (tr + 1.0).sqrt() * 2.0;
            Quat {
                w: 0.25 * s,
                x: (m[(2, 1)] - m[(1, 2)]) / s,
                y: (m[(0, 2)] - m[(2, 0)]) / s,
                z: (m[(1, 0)] - m[(0, 1)]) / s,
            }
        } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
            let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
            Quat {
                w: (m[(2, 1)] - m[(1, 2)]) / s,
                x: 0.25 * s,
                y: (m[(0, 1)] + m[(1, 0)]) / s,
                z: (m[(0, 2)] + m[(2, 0)]) / s,
            }
        } else if m[(1, 1)] > m[(2, 2)] {
            let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
            Quat {
                w: (m[(0, 2)] - m[(2, 0)]) / s,
                x: (m[(0, 1)] + m[(1, 0)]) / s,
                y: 0.25 * s,
                z: (m[(1, 2)] + m[(2, 1)]) / s,
            }
        } else {
            let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
            Quat {
                w: (m[(1, 0)] - m[(0, 1)]) / s,
                x: (m[(0, 2)] + m[(2, 0)]) / s,
                y: (m[(1, 2)] + m[(2, 1)]) / s,
                z: 0.25 * s,
            }
        };
        q.normalized()
    }

    /// Quaternion kinematics: dq/dt for body rates `omega` [rad/s].
    pub fn derivative(&self, omega: Vector3<f64>) -> [f64; 4] {
        let o = Quat {
            w: 0.0,
            x: omega.x,
            y: omega.y,
            z: omega.z,
        };
        // 0.5 * q (x) (0, omega), unnormalized Hamilton product.
        let (aw, ax, ay, az) = (self.w, self.x, self.y, self.z);
        let (bw, bx, by, bz) = (o.w, o.x, o.y, o.z);
        [
            0.5 * (aw * bw - ax * bx - ay * by - az * bz),
            0.5 * (aw * bx + ax * bw + ay * bz - az * by),
            0.5 * (aw * by - ax * bz + ay * bw + az * bx),
            0.5 * (aw * bz + ax * by - ay * bx + az * bw),
        ]
    }
}

/// Hamilton product of two unit quaternions.
pub fn quat_multiply(a: Quat, b: Quat) -> Quat {
    a.mul(b)
}

/// Rotate a vector by a unit quaternion.
pub fn rotate_vector(q: Quat, v: Vector3<f64>) -> Vector3<f64> {
    q.rotate(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn arb_quat() -> impl Strategy<Value = Quat> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
            .prop_filter("non-degenerate", |(w, x, y, z)| {
                (w * w + x * x + y * y + z * z).sqrt() > 1e-3
            })
            .prop_map(|(w, x, y, z)| Quat::new(w, x, y, z))
    }

    fn arb_vec() -> impl Strategy<Value = Vector3<f64>> {
        (-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0).prop_map(|(x, y, z)| Vector3::new(x, y, z))
    }

    #[test]
    fn identity_times_q_is_q() {
        let q = Quat::from_axis_angle(Vector3::new(1.0, 2.0, -0.5), 0.7);
        let r = quat_multiply(Quat::IDENTITY, q);
        assert_relative_eq!(r.w, q.w, epsilon = 1e-12);
        assert_relative_eq!(r.x, q.x, epsilon = 1e-12);
    }

    #[test]
    fn q_times_inverse_is_identity() {
        let q = Quat::from_axis_angle(Vector3::new(0.3, -1.0, 2.0), 1.9);
        let r = quat_multiply(q, q.inverse()).canonicalized();
        assert_relative_eq!(r.w, 1.0, epsilon = 1e-12);
        assert!(r.imag().norm() < 1e-12);
    }

    #[test]
    fn two_quarter_z_turns_make_half_turn() {
        let q90 = Quat::from_axis_angle(Vector3::z(), FRAC_PI_2);
        let q = quat_multiply(q90, q90);
        // Oracle: compose the equivalent rotation matrices instead.
        let m = q90.to_matrix() * q90.to_matrix();
        let q_oracle = Quat::from_matrix(&m).canonicalized();
        let q = q.canonicalized();
        assert_relative_eq!(q.w, q_oracle.w, epsilon = 1e-12);
        assert_relative_eq!(q.z, q_oracle.z, epsilon = 1e-12);
        assert_relative_eq!(q.z, (PI / 2.0).sin(), epsilon = 1e-12);
    }

    #[test]
    fn rotate_identity_is_noop() {
        let v = Vector3::new(1.0, 2.0, 3.0);
        assert_relative_eq!(rotate_vector(Quat::IDENTITY, v), v, epsilon = 1e-14);
    }

    #[test]
    fn quarter_turn_about_z_maps_x_to_y() {
        // Right-handed: +90 deg about z takes +x to +y.
        let q = Quat::from_axis_angle(Vector3::z(), FRAC_PI_2);
        let v = rotate_vector(q, Vector3::x());
        assert_relative_eq!(v, Vector3::y(), epsilon = 1e-12);
    }

    #[test]
    fn frame_convention_fixture() {
        // FRD body, NED world. A +90 deg yaw (about z, down) turns the nose
        // from north to east.
        let q_ib = Quat::from_euler(0.0, 0.0, FRAC_PI_2);
        let nose_inertial = q_ib.rotate(Vector3::x());
        assert_relative_eq!(nose_inertial, Vector3::y(), epsilon = 1e-12);
        // A +roll drops the right wing: body +y maps below the horizon (+z down).
        let q_roll = Quat::from_euler(0.3, 0.0, 0.0);
        assert!(q_roll.rotate(Vector3::y()).z > 0.0);
    }

    proptest! {
        #[test]
        fn rotation_preserves_norm(q in arb_quat(), v in arb_vec()) {
            let r = rotate_vector(q, v);
            prop_assert!((r.norm() - v.norm()).abs() <= 1e-12 * v.norm().max(1.0));
        }

        #[test]
        fn rotation_matches_matrix_form(q in arb_quat(), v in arb_vec()) {
            let r = rotate_vector(q, v);
            let m = q.to_matrix() * v;
            prop_assert!((r - m).norm() < 1e-10);
        }

        #[test]
        fn multiply_is_associative(a in arb_quat(), b in arb_quat(), c in arb_quat()) {
            let lhs = quat_multiply(quat_multiply(a, b), c);
            let rhs = quat_multiply(a, quat_multiply(b, c));
            let d = quat_multiply(lhs, rhs.inverse()).canonicalized();
            prop_assert!((d.w - 1.0).abs() < 1e-9 && d.imag().norm() < 1e-9);
        }

        #[test]
        fn matrix_round_trip_up_to_sign(q in arb_quat()) {
            let q2 = Quat::from_matrix(&q.to_matrix()).canonicalized();
            let q1 = q.canonicalized();
            prop_assert!((q1.w - q2.w).abs() < 1e-9);
            prop_assert!((q1.imag() - q2.imag()).norm() < 1e-9);
        }

        #[test]
        fn normalize_invariant(q in arb_quat()) {
            prop_assert!((q.norm() - 1.0).abs() < 1e-9);
        }
    }
}
