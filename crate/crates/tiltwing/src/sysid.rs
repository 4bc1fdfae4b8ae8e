//! Grey-box system identification against wind-tunnel style sweep data.
//!
//! A sweep sample fixes the tunnel flow (speed and flow angle in the body
//! xz-plane), the wing configuration (chi, epsilon) and the rotor thrusts,
//! and records the measured aerodynamic wrench. The fitter runs damped
//! least squares (Levenberg-Marquardt) over the 26-parameter model with a
//! forward-difference Jacobian. Parameters the dataset cannot see are
//! detected from their Jacobian column norms, and parameters whose
//! predicted scatter at realistic noise is too large are screened out via
//! the Gauss-Newton covariance; both groups are frozen at their initial
//! values and reported.

use crate::aero::{self, AeroParams, WingSegment, PARAM_COUNT, PARAM_NAMES};
use crate::alloc::{ActuatorCommand, Saturation};
use crate::error::{Result, TiltwingError};
use crate::geom::{RigidBodyState, VehicleGeometry};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One wind-tunnel operating point with its measured aerodynamic wrench.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SweepSample {
    /// Tunnel speed [m/s].
    pub airspeed: f64,
    /// Flow angle in the body xz-plane [rad]; positive tilts the relative
    /// wind downward onto the vehicle (climb-like inflow).
    pub flow_angle: f64,
    pub chi: f64,
    pub epsilon: f64,
    pub t_r: f64,
    pub t_l: f64,
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl SweepSample {
    /// Body-frame air-relative velocity of the vehicle implied by the
    /// tunnel condition.
    pub fn velocity_body(&self) -> Vector3<f64> {
        Vector3::new(
            self.airspeed * self.flow_angle.cos(),
            0.0,
            self.airspeed * self.flow_angle.sin(),
        )
    }
}

fn sample_state(s: &SweepSample) -> RigidBodyState {
    let mut st = RigidBodyState::at_rest(Matrix3::identity());
    st.velocity = s.velocity_body();
    st
}

fn sample_command(s: &SweepSample) -> ActuatorCommand {
    ActuatorCommand {
        t_r: s.t_r,
        t_l: s.t_l,
        t_t: 0.0,
        chi: s.chi,
        epsilon: s.epsilon,
        saturation: Saturation::default(),
    }
}

/// Predicted wrench for one sample under a candidate parameter set.
pub fn predict_wrench(
    sample: &SweepSample,
    params: &AeroParams,
    geometry: &VehicleGeometry,
    segments: &[WingSegment],
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    aero::wing_wrench(
        &sample_state(sample),
        &sample_command(sample),
        Vector3::zeros(),
        params,
        geometry,
        segments,
    )
}

/// Per-channel weights: inverse RMS of each measured wrench channel over
/// the dataset, floored so quiet channels do not explode.
fn channel_weights(samples: &[SweepSample]) -> [f64; 6] {
    let mut acc = [0.0f64; 6];
    for s in samples {
        for i in 0..3 {
            acc[i] += s.force[i] * s.force[i];
            acc[3 + i] += s.torque[i] * s.torque[i];
        }
    }
    let n = samples.len().max(1) as f64;
    let mut w = [0.0; 6];
    for i in 0..6 {
        w[i] = 1.0 / (acc[i] / n).sqrt().max(0.05);
    }
    w
}

fn params_plausible(v: &[f64]) -> bool {
    if !v.iter().all(|x| x.is_finite()) {
        return false;
    }
    // Stall geometry must stay usable for the sigmoid blend.
    for off in [0, 7] {
        let onset = v[off + 3];
        let width = v[off + 4];
        if !(onset > 1e-3 && onset < 0.9 && width > 1e-3 && width < 0.8) {
            return false;
        }
    }
    true
}

/// Weighted residual vector (6 entries per sample) for a candidate
/// parameter vector. Returns `None` when the candidate leaves the
/// plausible region.
fn residuals(
    v: &[f64],
    samples: &[SweepSample],
    weights: &[f64; 6],
    geometry: &VehicleGeometry,
    segments: &[WingSegment],
) -> Option<DVector<f64>> {
    if !params_plausible(v) {
        return None;
    }
    let params = AeroParams::from_vec(v).ok()?;
    let mut r = DVector::zeros(6 * samples.len());
    for (k, s) in samples.iter().enumerate() {
        let (f, tau) = predict_wrench(s, &params, geometry, segments).ok()?;
        for i in 0..3 {
            r[6 * k + i] = weights[i] * (f[i] - s.force[i]);
            r[6 * k + 3 + i] = weights[3 + i] * (tau[i] - s.torque[i]);
        }
    }
    Some(r)
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Stop when the scaled gradient infinity norm drops below this.
    pub gradient_tol: f64,
    /// Stop when the accepted step norm drops below this.
    pub step_tol: f64,
    pub lambda_init: f64,
    /// Relative Jacobian column norm below which a parameter is frozen.
    pub freeze_rel_tol: f64,
    /// Measurement noise (relative to per-channel RMS) assumed by the
    /// covariance identifiability screen. Zero disables the screen.
    pub assumed_noise: f64,
    /// Predicted relative 1-sigma above which a parameter counts as
    /// unidentifiable at the assumed noise and is frozen.
    pub sigma_rel_tol: f64,
    /// Indices (into the 26-vector) to hold fixed regardless.
    pub frozen: Vec<usize>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 500,
            gradient_tol: 1e-8,
            step_tol: 1e-10,
            lambda_init: 1e-3,
            freeze_rel_tol: 1e-7,
            assumed_noise: 0.01,
            sigma_rel_tol: 0.02,
            frozen: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: AeroParams,
    pub initial_cost: f64,
    pub cost: f64,
    pub iterations: usize,
    /// Parameters held fixed (declared plus detected unidentifiable).
    pub frozen: Vec<usize>,
    pub converged: bool,
}

impl FitResult {
    pub fn frozen_names(&self) -> Vec<&'static str> {
        self.frozen.iter().map(|&i| PARAM_NAMES[i]).collect()
    }

    pub fn is_frozen(&self, index: usize) -> bool {
        self.frozen.contains(&index)
    }
}

/// Damped least squares over the sweep dataset.
pub fn fit(
    samples: &[SweepSample],
    initial: &AeroParams,
    geometry: &VehicleGeometry,
    options: &FitOptions,
) -> Result<FitResult> {
    if samples.is_empty() {
        return Err(TiltwingError::FitFailed("no sweep samples".into()));
    }
    let segments = aero::default_segments(geometry);
    let weights = channel_weights(samples);
    let eval = |v: &[f64]| residuals(v, samples, &weights, geometry, &segments);

    let mut p = initial.to_vec();
    let mut r = eval(&p)
        .ok_or_else(|| TiltwingError::FitFailed("initial parameters implausible".into()))?;
    let initial_cost = 0.5 * r.dot(&r);
    let mut cost = initial_cost;
    let mut lambda = options.lambda_init;
    let mut frozen = options.frozen.clone();
    let mut free: Vec<usize> = Vec::new();
    let mut converged = false;
    let mut any_accepted = false;
    let mut iterations = 0;

    for iter in 0..options.max_iterations {
        iterations = iter + 1;
        // Forward-difference Jacobian over the currently free parameters.
        let candidates: Vec<usize> = (0..PARAM_COUNT)
            .filter(|i| !frozen.contains(i))
            .collect();
        let mut jac = DMatrix::zeros(r.len(), candidates.len());
        for (c, &j) in candidates.iter().enumerate() {
            let h = 1e-6 * p[j].abs().max(1e-3);
            let mut q = p.clone();
            q[j] += h;
            let rq = eval(&q).ok_or_else(|| {
                TiltwingError::FitFailed(format!("Jacobian step left plausible region at {}", PARAM_NAMES[j]))
            })?;
            jac.set_column(c, &((rq - &r) / h));
        }
        if iter == 0 {
            // Identifiability: freeze columns the data cannot see.
            let norms: Vec<f64> = (0..candidates.len())
                .map(|c| jac.column(c).norm())
                .collect();
            let max_norm = norms.iter().cloned().fold(0.0, f64::max);
            for (c, &j) in candidates.iter().enumerate() {
                if norms[c] < options.freeze_rel_tol * max_norm {
                    frozen.push(j);
                }
            }
            // Covariance screen. With 1/RMS channel weights, measurement
            // noise at `assumed_noise` of the channel RMS becomes a unit
            // residual sigma of `assumed_noise`, so (J^T J)^-1 predicts the
            // parameter scatter directly. A parameter whose predicted
            // relative 1-sigma exceeds the tolerance is practically
            // unidentifiable at realistic noise. Freeze greedily, worst
            // first: dropping one of a correlated pair can rescue the other.
            if options.assumed_noise > 0.0 {
                let mut active: Vec<usize> = (0..candidates.len())
                    .filter(|c| !frozen.contains(&candidates[*c]))
                    .collect();
                while active.len() > 1 {
                    let mut jtj = DMatrix::zeros(active.len(), active.len());
                    for (a, &ca) in active.iter().enumerate() {
                        for (b, &cb) in active.iter().enumerate() {
                            jtj[(a, b)] = jac.column(ca).dot(&jac.column(cb).into_owned());
                        }
                    }
                    let worst = match jtj.cholesky() {
                        Some(ch) => {
                            let inv = ch.inverse();
                            let (mut worst, mut worst_sigma) = (0usize, 0.0);
                            for (a, &ca) in active.iter().enumerate() {
                                let pj = p[candidates[ca]].abs().max(1e-9);
                                let sigma =
                                    options.assumed_noise * inv[(a, a)].max(0.0).sqrt() / pj;
                                if sigma > worst_sigma {
                                    worst_sigma = sigma;
                                    worst = a;
                                }
                            }
                            if worst_sigma <= options.sigma_rel_tol {
                                break;
                            }
                            worst
                        }
                        // Singular despite the norm screen: drop the weakest
                        // column and retry.
                        None => {
                            let (mut worst, mut min_norm) = (0usize, f64::INFINITY);
                            for (a, &ca) in active.iter().enumerate() {
                                if norms[ca] < min_norm {
                                    min_norm = norms[ca];
                                    worst = a;
                                }
                            }
                            worst
                        }
                    };
                    frozen.push(candidates[active[worst]]);
                    active.remove(worst);
                }
            }
            frozen.sort_unstable();
            frozen.dedup();
            free = (0..PARAM_COUNT).filter(|i| !frozen.contains(i)).collect();
            if free.is_empty() {
                return Err(TiltwingError::IllConditioned(
                    "all parameters unidentifiable".into(),
                ));
            }
            if free.len() != candidates.len() {
                // Rebuild the Jacobian without the dropped columns.
                let keep: Vec<usize> = candidates
                    .iter()
                    .enumerate()
                    .filter(|(_, j)| free.contains(j))
                    .map(|(c, _)| c)
                    .collect();
                let mut j2 = DMatrix::zeros(r.len(), keep.len());
                for (c2, &c) in keep.iter().enumerate() {
                    j2.set_column(c2, &jac.column(c).into_owned());
                }
                jac = j2;
            }
        }

        let grad = jac.transpose() * &r;
        if grad.amax() < options.gradient_tol {
            converged = true;
            break;
        }
        let jtj = jac.transpose() * &jac;

        let mut accepted = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for d in 0..a.nrows() {
                a[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
            }
            let delta = match a.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => {
                    lambda *= 4.0;
                    continue;
                }
            };
            let mut q = p.clone();
            for (c, &j) in free.iter().enumerate() {
                q[j] += delta[c];
            }
            match eval(&q) {
                Some(rq) => {
                    let cq = 0.5 * rq.dot(&rq);
                    if cq < cost {
                        let step = delta.norm();
                        p = q;
                        r = rq;
                        cost = cq;
                        lambda = (lambda / 3.0).max(1e-12);
                        accepted = true;
                        any_accepted = true;
                        if step < options.step_tol {
                            converged = true;
                        }
                        break;
                    }
                    lambda *= 4.0;
                }
                None => lambda *= 4.0,
            }
            if lambda > 1e12 {
                break;
            }
        }
        if converged {
            break;
        }
        if !accepted {
            // No damping level yields an improving step: a (local) minimum
            // at working precision. Call it converged as long as the fit
            // made progress at all; a stall straight out of the initial
            // guess stays a failure.
            converged = any_accepted || cost < 1e-16;
            break;
        }
    }

    Ok(FitResult {
        params: AeroParams::from_vec(&p)?,
        initial_cost,
        cost,
        iterations,
        frozen,
        converged,
    })
}

/// Deterministic synthetic wind-tunnel sweep generated from a reference
/// parameter set, with optional Gaussian noise (`noise_level` is relative
/// to the per-channel RMS).
pub fn generate_synthetic_sweep(
    truth: &AeroParams,
    geometry: &VehicleGeometry,
    noise_level: f64,
    seed: u64,
) -> Result<Vec<SweepSample>> {
    let segments = aero::default_segments(geometry);
    let speeds = [0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0];
    // Dense through the stall band (roughly 12..28 deg effective alpha for
    // both profiles), coarse toward flat plate.
    let flow_deg: [f64; 17] = [
        -10.0, -5.0, 0.0, 3.0, 6.0, 9.0, 12.0, 15.0, 18.0, 21.0, 24.0, 27.0, 30.0, 40.0, 55.0,
        70.0, 90.0,
    ];
    let chi_deg = [90.0, 70.0, 50.0, 30.0, 15.0];
    let eps_deg = [-3.0, 0.0, 3.0];
    let mut samples = Vec::new();
    let push = |samples: &mut Vec<SweepSample>,
                    v: f64,
                    th: f64,
                    chi_r: f64,
                    eps: f64,
                    t: f64|
     -> Result<()> {
        let mut s = SweepSample {
            airspeed: v,
            flow_angle: th.to_radians(),
            chi: chi_r,
            epsilon: f64::to_radians(eps),
            t_r: t,
            t_l: t,
            force: Vector3::zeros(),
            torque: Vector3::zeros(),
        };
        let (f, tau) = predict_wrench(&s, truth, geometry, &segments)?;
        s.force = f;
        s.torque = tau;
        samples.push(s);
        Ok(())
    };
    for &v in &speeds {
        for &th in &flow_deg {
            for &chi in &chi_deg {
                let chi_r: f64 = f64::to_radians(chi);
                // Plausible thrust trend: high in hover, tapering with
                // speed and tilt.
                let t = 2.0 + 20.0 * chi_r.sin() / (1.0 + v / 8.0);
                for &eps in &eps_deg {
                    push(&mut samples, v, th, chi_r, eps, t)?;
                }
                // Props-off point: the geometric alpha reaches the wing
                // without slipstream correction, separating the profile
                // polars from the prop-wash model.
                push(&mut samples, v, th, chi_r, 0.0, 0.0)?;
            }
        }
    }
    if noise_level > 0.0 {
        let mut scale = [0.0f64; 6];
        for s in &samples {
            for i in 0..3 {
                scale[i] += s.force[i] * s.force[i];
                scale[3 + i] += s.torque[i] * s.torque[i];
            }
        }
        for v in &mut scale {
            *v = (*v / samples.len() as f64).sqrt();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gauss = move || -> f64 {
            // Box-Muller.
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        for s in &mut samples {
            for i in 0..3 {
                s.force[i] += noise_level * scale[i] * gauss();
                s.torque[i] += noise_level * scale[3 + i] * gauss();
            }
        }
    }
    Ok(samples)
}

/// Best-of-n fit. The stall blend gives the cost surface occasional local
/// minima well above the noise floor; a handful of restarts from jittered
/// copies of the initial guess makes landing in one harmless. Returns the
/// lowest-cost result, preferring converged ones.
pub fn fit_multi_start(
    samples: &[SweepSample],
    initial: &AeroParams,
    geometry: &VehicleGeometry,
    options: &FitOptions,
    n_starts: usize,
    jitter: f64,
    seed: u64,
) -> Result<FitResult> {
    let v0 = initial.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<FitResult> = None;
    let mut last_err = None;
    for k in 0..n_starts.max(1) {
        let start = if k == 0 {
            initial.clone()
        } else {
            let mut v = v0.clone();
            for x in v.iter_mut() {
                *x *= 1.0 + rng.gen_range(-jitter..jitter);
            }
            match AeroParams::from_vec(&v) {
                Ok(s) => s,
                Err(_) => continue,
            }
        };
        match fit(samples, &start, geometry, options) {
            Ok(r) => {
                let better = match &best {
                    None => true,
                    Some(b) => (r.converged, -r.cost) > (b.converged, -b.cost),
                };
                if better {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| {
        last_err.unwrap_or_else(|| TiltwingError::FitFailed("no start produced a fit".into()))
    })
}

/// Level-flight trim at a given overall tilt: speed, collective and tail
/// thrust that zero the body forces and pitch torque at level attitude.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrimPoint {
    pub chi: f64,
    pub airspeed: f64,
    pub t_col: f64,
    pub t_t: f64,
}

/// Net x/z force and the tail thrust balancing pitch, for level flight at
/// (v, t_col). The closed-form split t_r = t_l = t_col sin(chi) / 2 from
/// the allocation is assumed.
fn trim_balance(
    chi: f64,
    v: f64,
    t_col: f64,
    params: &AeroParams,
    geometry: &VehicleGeometry,
    segments: &[WingSegment],
) -> Result<(f64, f64, f64)> {
    let half = 0.5 * t_col * chi.sin();
    let cmd = ActuatorCommand {
        t_r: half.max(0.0),
        t_l: half.max(0.0),
        t_t: 0.0,
        chi,
        epsilon: 0.0,
        saturation: Saturation::default(),
    };
    let mut st = RigidBodyState::at_rest(Matrix3::identity());
    st.velocity = Vector3::new(v, 0.0, 0.0);
    let (f_aero, tau_aero) =
        aero::wing_wrench(&st, &cmd, Vector3::zeros(), params, geometry, segments)?;
    let thrust = crate::geom::thrust_dir(chi) * (2.0 * half.max(0.0));
    // Pitch balance: tail force -t_t z at (-l,0,0) gives tau_y = -l t_t.
    let t_t = tau_aero.y / geometry.l;
    let fx = thrust.x + f_aero.x;
    let fz = thrust.z + f_aero.z - t_t + geometry.m * geometry.g;
    Ok((fx, fz, t_t))
}

/// Solves level-flight trim at tilt `chi`. Hover-like tilts where no
/// forward force balance exists return airspeed 0.
pub fn trim_level(
    chi: f64,
    params: &AeroParams,
    geometry: &VehicleGeometry,
) -> Result<TrimPoint> {
    let segments = aero::default_segments(geometry);
    // Inner solve: collective that zeros the vertical balance at speed v.
    let solve_tcol = |v: f64| -> Result<(f64, f64, f64)> {
        let mut lo = 0.0;
        let mut hi = 8.0 * geometry.m * geometry.g / chi.sin().max(0.2);
        let (_, fz_hi, _) = trim_balance(chi, v, hi, params, geometry, &segments)?;
        if fz_hi > 0.0 {
            return Err(TiltwingError::FitFailed(format!(
                "no vertical trim at chi {chi:.3}, v {v:.2}"
            )));
        }
        let mut t = 0.0;
        for _ in 0..80 {
            t = 0.5 * (lo + hi);
            let (_, fz, _) = trim_balance(chi, v, t, params, geometry, &segments)?;
            if fz > 0.0 {
                lo = t;
            } else {
                hi = t;
            }
        }
        let (fx, _, t_t) = trim_balance(chi, v, t, params, geometry, &segments)?;
        Ok((t, fx, t_t))
    };

    // Outer solve: speed where the forward balance crosses zero. Thrust
    // tilted forward accelerates from rest, drag wins at high speed.
    let (t0, fx0, tt0) = solve_tcol(0.0)?;
    if fx0 <= 1e-9 {
        return Ok(TrimPoint {
            chi,
            airspeed: 0.0,
            t_col: t0,
            t_t: tt0,
        });
    }
    let mut lo = 0.0;
    let mut hi = 30.0;
    let (_, fx_hi, _) = solve_tcol(hi)?;
    if fx_hi > 0.0 {
        return Err(TiltwingError::FitFailed(format!(
            "no forward trim below 30 m/s at chi {chi:.3}"
        )));
    }
    let mut v = 0.0;
    for _ in 0..80 {
        v = 0.5 * (lo + hi);
        let (_, fx, _) = solve_tcol(v)?;
        if fx > 0.0 {
            lo = v;
        } else {
            hi = v;
        }
    }
    let (t_col, _, t_t) = solve_tcol(v)?;
    Ok(TrimPoint {
        chi,
        airspeed: v,
        t_col,
        t_t,
    })
}

/// Least-squares fit of the degree-7 thrust feed-forward polynomial to
/// trim collective data. Columns are scaled before the solve to keep the
/// Vandermonde system tame.
pub fn fit_thrust_ff(points: &[(f64, f64)]) -> Result<[f64; 8]> {
    if points.len() < 8 {
        return Err(TiltwingError::FitFailed(format!(
            "need at least 8 trim points for a degree-7 fit, got {}",
            points.len()
        )));
    }
    let n = points.len();
    let mut a = DMatrix::zeros(n, 8);
    let mut b = DVector::zeros(n);
    let mut col_scale = [0.0f64; 8];
    for (i, &(chi, _)) in points.iter().enumerate() {
        let mut pw = 1.0_f64;
        for j in 0..8 {
            a[(i, j)] = pw;
            col_scale[j] = col_scale[j].max(pw.abs());
            pw *= chi;
        }
        b[i] = points[i].1;
    }
    for j in 0..8 {
        let s = col_scale[j].max(1e-12);
        for i in 0..n {
            a[(i, j)] /= s;
        }
    }
    let svd = a.svd(true, true);
    let x = svd
        .solve(&b, 1e-12)
        .map_err(|e| TiltwingError::IllConditioned(e.to_string()))?;
    let mut c = [0.0; 8];
    for j in 0..8 {
        c[j] = x[j] / col_scale[j].max(1e-12);
    }
    if !c.iter().all(|v| v.is_finite()) {
        return Err(TiltwingError::IllConditioned(
            "non-finite polynomial coefficients".into(),
        ));
    }
    Ok(c)
}

/// Scales the main-wing lift authority so the cruise roll-torque response
/// to differential tilt matches `target_slope` (N m per radian of
/// zeta_r - zeta_l, magnitude). Returns the adjusted parameters.
pub fn calibrate_tilt_authority(
    params: &AeroParams,
    geometry: &VehicleGeometry,
    airspeed: f64,
    chi: f64,
    per_rotor_thrust: f64,
    target_slope: f64,
) -> Result<AeroParams> {
    let segments = aero::default_segments(geometry);
    let slope_for = |scale: f64| -> Result<f64> {
        let mut p = *params;
        p.naca0012.lift_slope *= scale;
        p.naca0029.lift_slope *= scale;
        let s = aero::differential_tilt_slope(
            airspeed,
            chi,
            per_rotor_thrust,
            &p,
            geometry,
            &segments,
        )?;
        Ok(s.abs())
    };
    let mut s0 = 1.0;
    let mut f0 = slope_for(s0)? - target_slope;
    let mut s1 = 1.2;
    let mut f1 = slope_for(s1)? - target_slope;
    for _ in 0..60 {
        if (f1 - f0).abs() < 1e-12 {
            break;
        }
        let s2 = (s1 - f1 * (s1 - s0) / (f1 - f0)).clamp(0.05, 20.0);
        s0 = s1;
        f0 = f1;
        s1 = s2;
        f1 = slope_for(s1)? - target_slope;
        if f1.abs() < 1e-9 * target_slope {
            break;
        }
    }
    if f1.abs() > 0.01 * target_slope {
        return Err(TiltwingError::FitFailed(format!(
            "authority calibration stalled at scale {s1:.4}, residual {f1:.4} N m/rad"
        )));
    }
    let mut p = *params;
    p.naca0012.lift_slope *= s1;
    p.naca0029.lift_slope *= s1;
    Ok(p)
}
