//! Flight dynamics, control, and system identification for a desk-scale
//! hybrid tilt-wing tricopter.
//!
//! Conventions used throughout: FRD body frame (x forward, y right, z down)
//! and NED inertial frame. The overall wing tilt `chi` is pi/2 in hover
//! (thrust up) and decreases toward `chi_min` in forward flight; `epsilon`
//! is the differential tilt between the two half-wings.

pub mod aero;
pub mod alloc;
pub mod ctrl;
pub mod error;
pub mod geom;
pub mod logio;
pub mod math;
pub mod plot;
pub mod scenario;
pub mod sim;
pub mod sysid;

pub use error::{Result, TiltwingError};
