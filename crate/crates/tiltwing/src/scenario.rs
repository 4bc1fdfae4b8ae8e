//! Scenario files: human-editable TOML describing one closed-loop run.
//!
//! Angles in scenario files are degrees, marked by `_deg` key suffixes;
//! everything becomes radians at this boundary. A minimal hover scenario:
//!
//! ```toml
//! name = "hover"
//! duration_s = 10.0
//!
//! [[timeline]]
//! t_s = 0.0
//! chi_deg = 90.0
//! ```

use crate::aero::AeroParams;
use crate::ctrl::AttitudeGains;
use crate::error::{Result, TiltwingError};
use crate::geom::{RigidBodyState, VehicleGeometry};
use crate::math::Quat;
use crate::sim::{
    AltitudeGains, Integrator, Mission, PowerModel, SimConfig, Timeline, TimelineKnot,
};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "default_name")]
    pub name: String,
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
    /// Relative path to a fitted aero parameter file; defaults built in.
    #[serde(default)]
    pub params_file: Option<String>,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub wind: WindSection,
    #[serde(default)]
    pub gains: Option<AttitudeGains>,
    #[serde(default)]
    pub altitude: AltitudeSection,
    pub timeline: Vec<TimelineEntry>,
}

fn default_name() -> String {
    "scenario".into()
}

/// Geometry overrides; unset fields keep the vehicle defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub b_m: Option<f64>,
    pub l_m: Option<f64>,
    pub x_offset_m: Option<f64>,
    pub y_offset_m: Option<f64>,
    pub z_offset_m: Option<f64>,
    pub mass_kg: Option<f64>,
    pub prop_diameter_m: Option<f64>,
    pub rho_kg_m3: Option<f64>,
    pub wingspan_m: Option<f64>,
    pub chord_m: Option<f64>,
    pub chi_min_deg: Option<f64>,
    /// Principal inertia [kg m^2].
    pub inertia_diag: Option<[f64; 3]>,
}

impl GeometrySection {
    fn apply(&self, g: &mut VehicleGeometry) {
        let set = |dst: &mut f64, src: Option<f64>| {
            if let Some(v) = src {
                *dst = v;
            }
        };
        set(&mut g.b, self.b_m);
        set(&mut g.l, self.l_m);
        set(&mut g.x_offset, self.x_offset_m);
        set(&mut g.y_offset, self.y_offset_m);
        set(&mut g.z_offset, self.z_offset_m);
        set(&mut g.m, self.mass_kg);
        set(&mut g.d_prop, self.prop_diameter_m);
        set(&mut g.rho, self.rho_kg_m3);
        set(&mut g.wingspan, self.wingspan_m);
        set(&mut g.chord, self.chord_m);
        set(&mut g.chi_min, self.chi_min_deg.map(f64::to_radians));
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub dt_s: Option<f64>,
    pub control_decimation: Option<usize>,
    pub log_decimation: Option<usize>,
    pub integrator: Option<Integrator>,
    pub thrust_tau_s: Option<f64>,
    pub servo_rate_deg_s: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// NED position [m].
    pub position_m: Option<[f64; 3]>,
    /// NED velocity [m/s].
    pub velocity_m_s: Option<[f64; 3]>,
    /// Roll, pitch, yaw [deg].
    pub attitude_deg: Option<[f64; 3]>,
    pub body_rates_deg_s: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindSection {
    /// Steady NED wind [m/s].
    pub steady_m_s: Option<[f64; 3]>,
    /// Gust standard deviation [m/s].
    pub gust_std_m_s: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AltitudeSection {
    /// Altitude reference [m, positive up]; unset holds the initial one.
    pub reference_m: Option<f64>,
    pub kp: Option<f64>,
    pub kd: Option<f64>,
    pub ki: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineEntry {
    pub t_s: f64,
    pub chi_deg: f64,
    #[serde(default)]
    pub roll_deg: f64,
    #[serde(default)]
    pub pitch_deg: f64,
    #[serde(default)]
    pub yaw_deg: f64,
    /// Scripted vertical acceleration [m/s^2, positive down]; unset hands
    /// the channel to the altitude hold.
    #[serde(default)]
    pub a_z_m_s2: Option<f64>,
    #[serde(default)]
    pub yaw_rate_ff_deg_s: f64,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<ScenarioFile> {
        toml::from_str(text).map_err(|e| TiltwingError::InvalidScenario(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<ScenarioFile> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Resolves the scenario to a runnable mission. `base_dir` anchors the
    /// relative `params_file` path.
    pub fn to_mission(&self, base_dir: &Path) -> Result<Mission> {
        let mut geometry = VehicleGeometry::default();
        self.geometry.apply(&mut geometry);
        geometry.validate()?;

        let params = match &self.params_file {
            Some(rel) => {
                let text = std::fs::read_to_string(base_dir.join(rel))?;
                AeroParams::from_param_file(&text)?
            }
            None => AeroParams::default(),
        };

        let mut config = SimConfig::default();
        if let Some(v) = self.sim.dt_s {
            config.dt = v;
        }
        if let Some(v) = self.sim.control_decimation {
            config.control_decimation = v;
        }
        if let Some(v) = self.sim.log_decimation {
            config.log_decimation = v;
        }
        if let Some(v) = self.sim.integrator {
            config.integrator = v;
        }
        if let Some(v) = self.sim.thrust_tau_s {
            config.thrust_tau = v;
        }
        if let Some(v) = self.sim.servo_rate_deg_s {
            config.servo_rate = v.to_radians();
        }

        let inertia_diag = self
            .geometry
            .inertia_diag
            .unwrap_or([0.45, 0.40, 0.70]);
        let inertia = Matrix3::from_diagonal(&Vector3::from(inertia_diag));

        let mut initial = RigidBodyState::at_rest(inertia);
        if let Some(p) = self.initial.position_m {
            initial.position = Vector3::from(p);
        }
        if let Some(v) = self.initial.velocity_m_s {
            initial.velocity = Vector3::from(v);
        }
        if let Some(e) = self.initial.attitude_deg {
            initial.attitude = Quat::from_euler(
                e[0].to_radians(),
                e[1].to_radians(),
                e[2].to_radians(),
            );
        }
        if let Some(w) = self.initial.body_rates_deg_s {
            initial.body_rates =
                Vector3::new(w[0].to_radians(), w[1].to_radians(), w[2].to_radians());
        }

        let knots: Vec<TimelineKnot> = self
            .timeline
            .iter()
            .map(|e| TimelineKnot {
                t: e.t_s,
                chi: e.chi_deg.to_radians(),
                euler: Vector3::new(
                    e.roll_deg.to_radians(),
                    e.pitch_deg.to_radians(),
                    e.yaw_deg.to_radians(),
                ),
                a_z: e.a_z_m_s2,
                yaw_rate_ff: e.yaw_rate_ff_deg_s.to_radians(),
            })
            .collect();

        let mut alt_gains = AltitudeGains::default();
        if let Some(v) = self.altitude.kp {
            alt_gains.kp = v;
        }
        if let Some(v) = self.altitude.kd {
            alt_gains.kd = v;
        }
        if let Some(v) = self.altitude.ki {
            alt_gains.ki = v;
        }

        let mission = Mission {
            geometry,
            inertia,
            params,
            gains: self.gains.unwrap_or_default(),
            alt_gains,
            limits: Default::default(),
            power: PowerModel::default(),
            config,
            timeline: Timeline { knots },
            duration: self.duration_s,
            wind: self
                .wind
                .steady_m_s
                .map(Vector3::from)
                .unwrap_or_else(Vector3::zeros),
            gust_std: self.wind.gust_std_m_s.unwrap_or(0.0),
            seed: self.seed,
            initial,
            altitude_ref: self.altitude.reference_m,
        };
        mission.validate()?;
        Ok(mission)
    }
}
