//! CSV serialization of simulation logs and sweep datasets.
//!
//! Values are written as `{:.5e}` (6 significant digits), which keeps the
//! files compact and makes byte-identical reproduction checks meaningful.

use crate::error::{Result, TiltwingError};
use crate::math::Quat;
use crate::sim::LogRow;
use crate::sysid::SweepSample;
use nalgebra::Vector3;
use std::io::{BufRead, Write};

/// Column order of simulation logs. Position/velocity are NED, angles are
/// radians, power in watts.
pub const LOG_COLUMNS: [&str; 23] = [
    "t",
    "pos_n",
    "pos_e",
    "pos_d",
    "vel_n",
    "vel_e",
    "vel_d",
    "q_w",
    "q_x",
    "q_y",
    "q_z",
    "omega_x",
    "omega_y",
    "omega_z",
    "chi",
    "epsilon",
    "t_r",
    "t_l",
    "t_t",
    "zeta_r",
    "zeta_l",
    "power_total",
    "airspeed",
];

/// Column order of sweep datasets (SI units, radians).
pub const SWEEP_COLUMNS: [&str; 12] = [
    "airspeed",
    "flow_angle",
    "chi",
    "epsilon",
    "t_r",
    "t_l",
    "f_x",
    "f_y",
    "f_z",
    "tau_x",
    "tau_y",
    "tau_z",
];

fn fmt(v: f64) -> String {
    format!("{v:.5e}")
}

pub fn write_log<W: Write>(rows: &[LogRow], mut w: W) -> Result<()> {
    writeln!(w, "{}", LOG_COLUMNS.join(","))?;
    for r in rows {
        let fields = [
            r.t,
            r.position.x,
            r.position.y,
            r.position.z,
            r.velocity.x,
            r.velocity.y,
            r.velocity.z,
            r.attitude.w,
            r.attitude.x,
            r.attitude.y,
            r.attitude.z,
            r.body_rates.x,
            r.body_rates.y,
            r.body_rates.z,
            r.chi,
            r.epsilon,
            r.t_r,
            r.t_l,
            r.t_t,
            r.zeta_r,
            r.zeta_l,
            r.power_total,
            r.airspeed,
        ];
        let line: Vec<String> = fields.iter().map(|&v| fmt(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

fn parse_line(line: &str, expect: usize, lineno: usize) -> Result<Vec<f64>> {
    let vals: std::result::Result<Vec<f64>, _> =
        line.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let vals =
        vals.map_err(|e| TiltwingError::Parse(format!("line {lineno}: {e} in {line:?}")))?;
    if vals.len() != expect {
        return Err(TiltwingError::Parse(format!(
            "line {lineno}: expected {expect} columns, got {}",
            vals.len()
        )));
    }
    Ok(vals)
}

pub fn read_log<R: BufRead>(r: R) -> Result<Vec<LogRow>> {
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != LOG_COLUMNS.join(",") {
                return Err(TiltwingError::Parse(
                    "log header does not match the documented column order".into(),
                ));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let v = parse_line(&line, LOG_COLUMNS.len(), i + 1)?;
        rows.push(LogRow {
            t: v[0],
            position: Vector3::new(v[1], v[2], v[3]),
            velocity: Vector3::new(v[4], v[5], v[6]),
            attitude: Quat::new(v[7], v[8], v[9], v[10]),
            body_rates: Vector3::new(v[11], v[12], v[13]),
            chi: v[14],
            epsilon: v[15],
            t_r: v[16],
            t_l: v[17],
            t_t: v[18],
            zeta_r: v[19],
            zeta_l: v[20],
            power_total: v[21],
            airspeed: v[22],
        });
    }
    Ok(rows)
}

pub fn write_sweep<W: Write>(samples: &[SweepSample], mut w: W) -> Result<()> {
    writeln!(w, "{}", SWEEP_COLUMNS.join(","))?;
    for s in samples {
        let fields = [
            s.airspeed,
            s.flow_angle,
            s.chi,
            s.epsilon,
            s.t_r,
            s.t_l,
            s.force.x,
            s.force.y,
            s.force.z,
            s.torque.x,
            s.torque.y,
            s.torque.z,
        ];
        let line: Vec<String> = fields.iter().map(|&v| fmt(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_sweep<R: BufRead>(r: R) -> Result<Vec<SweepSample>> {
    let mut samples = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != SWEEP_COLUMNS.join(",") {
                return Err(TiltwingError::Parse(
                    "sweep header does not match the documented column order".into(),
                ));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let v = parse_line(&line, SWEEP_COLUMNS.len(), i + 1)?;
        samples.push(SweepSample {
            airspeed: v[0],
            flow_angle: v[1],
            chi: v[2],
            epsilon: v[3],
            t_r: v[4],
            t_l: v[5],
            force: Vector3::new(v[6], v[7], v[8]),
            torque: Vector3::new(v[9], v[10], v[11]),
        });
    }
    Ok(samples)
}

/// (chi, value) pairs, e.g. trim collective data for the polynomial fit.
pub fn write_pairs<W: Write>(header: &str, pairs: &[(f64, f64)], mut w: W) -> Result<()> {
    writeln!(w, "{header}")?;
    for &(a, b) in pairs {
        writeln!(w, "{},{}", fmt(a), fmt(b))?;
    }
    Ok(())
}

pub fn read_pairs<R: BufRead>(r: R) -> Result<Vec<(f64, f64)>> {
    let mut pairs = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let v = parse_line(&line, 2, i + 1)?;
        pairs.push((v[0], v[1]));
    }
    Ok(pairs)
}
