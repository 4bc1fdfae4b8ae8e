//! Command-line harness: scenario execution, identification runs, and
//! report/plot generation.
//!
//! Exit codes: 0 success, 1 usage/input error, 2 simulation divergence,
//! 3 fit non-convergence.

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use tiltwing::aero::{self, AeroParams, PARAM_NAMES};
use tiltwing::alloc::{self, AllocLimits, ControlDemand};
use tiltwing::error::TiltwingError;
use tiltwing::geom::VehicleGeometry;
use tiltwing::scenario::ScenarioFile;
use tiltwing::sim::{run_mission, SimResult};
use tiltwing::sysid::{self, FitOptions};
use tiltwing::{logio, plot};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Differential-tilt roll authority target: 0.45 N m per degree of
/// zeta_r - zeta_l, expressed per radian.
const SLOPE_TARGET: f64 = 0.45 * 180.0 / std::f64::consts::PI;

#[derive(Parser)]
#[command(name = "tiltwing", version, about = "Tilt-wing tricopter simulation and identification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a closed-loop scenario and write a CSV log plus JSON summary.
    Sim(SimArgs),
    /// System identification against sweep data.
    #[command(subcommand)]
    Sysid(SysidCommand),
    /// Thrust feed-forward polynomial tools.
    #[command(subcommand)]
    Ffpoly(FfpolyCommand),
    /// Summarize a simulation log and emit SVG plots.
    Report(ReportArgs),
    /// Allocation self-checks.
    #[command(subcommand)]
    Alloc(AllocCommand),
}

#[derive(Args)]
struct SimArgs {
    /// Scenario TOML file.
    scenario: PathBuf,
    /// Output CSV log (default: <scenario stem>.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output JSON summary (default: <csv stem>.json).
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SysidCommand {
    /// Generate a synthetic wind-tunnel sweep from the built-in model.
    Synth(SynthArgs),
    /// Fit the 26-parameter model to a sweep CSV.
    Fit(FitArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output sweep CSV.
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
    /// Relative Gaussian noise level per wrench channel.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Parameter file defining the ground truth (defaults built in).
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Sweep CSV with measured wrenches.
    data: PathBuf,
    /// Initial parameter file (defaults built in).
    #[arg(long)]
    initial: Option<PathBuf>,
    /// Where to write the fitted parameter file.
    #[arg(long, default_value = "params_fit.toml")]
    out: PathBuf,
    /// After the fit, rescale lift authority so the cruise roll torque
    /// slope matches 0.45 N m/deg of differential tilt.
    #[arg(long)]
    calibrate_slope: bool,
    /// Extra fits from jittered starts; the best result wins. Guards
    /// against local minima of the stall blend.
    #[arg(long, default_value_t = 3)]
    restarts: usize,
}

#[derive(Subcommand)]
enum FfpolyCommand {
    /// Fit the degree-7 feed-forward polynomial to (chi, t_col) data.
    Fit(FfFitArgs),
    /// Generate level-flight trim data from the model.
    Trim(FfTrimArgs),
}

#[derive(Args)]
struct FfFitArgs {
    /// Trim CSV: header line, then chi [rad], t_col [N].
    data: PathBuf,
    /// Parameter file to update with the fitted coefficients.
    #[arg(long)]
    params_out: Option<PathBuf>,
}

#[derive(Args)]
struct FfTrimArgs {
    #[arg(long, default_value = "trim.csv")]
    out: PathBuf,
    /// chi grid start [deg].
    #[arg(long, default_value_t = 10.0)]
    chi_start_deg: f64,
    #[arg(long, default_value_t = 90.0)]
    chi_end_deg: f64,
    #[arg(long, default_value_t = 2.5)]
    chi_step_deg: f64,
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Simulation log CSV.
    log: PathBuf,
    /// Directory for SVG plots (default: alongside the log).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AllocCommand {
    /// Random round-trip check of the allocation closed form.
    Check(AllocCheckArgs),
}

#[derive(Args)]
struct AllocCheckArgs {
    #[arg(long, default_value_t = 100_000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn load_params(path: &Option<PathBuf>) -> Result<AeroParams, TiltwingError> {
    match path {
        Some(p) => AeroParams::from_param_file(&std::fs::read_to_string(p)?),
        None => Ok(AeroParams::default()),
    }
}

fn cmd_sim(args: &SimArgs) -> Result<ExitCode, TiltwingError> {
    let scenario = ScenarioFile::load(&args.scenario)?;
    let base = args
        .scenario
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let mission = scenario.to_mission(&base)?;
    let start = Instant::now();
    let result = run_mission(&mission)?;
    let wall = start.elapsed().as_secs_f64();

    let csv_path = args
        .out
        .clone()
        .unwrap_or_else(|| args.scenario.with_extension("csv"));
    logio::write_log(&result.rows, BufWriter::new(File::create(&csv_path)?))?;

    let mut summary = summarize(&result, wall);
    summary["scenario"] = json!(scenario.name);
    let json_path = args
        .json
        .clone()
        .unwrap_or_else(|| csv_path.with_extension("json"));
    std::fs::write(&json_path, serde_json::to_string_pretty(&summary).unwrap())?;

    println!("scenario   {}", scenario.name);
    println!("log        {}", csv_path.display());
    println!("summary    {}", json_path.display());
    println!(
        "sim time   {:.1} s in {:.2} s wall",
        mission.duration, wall
    );
    println!(
        "altitude drift {:.3} m (range [{:.3}, {:.3}] m)",
        summary["altitude_drift_m"].as_f64().unwrap(),
        summary["altitude_min_m"].as_f64().unwrap(),
        summary["altitude_max_m"].as_f64().unwrap(),
    );
    println!(
        "max airspeed {:.2} m/s, mean power {:.1} W, saturation {:.1}%",
        summary["airspeed_max_m_s"].as_f64().unwrap(),
        summary["power_mean_w"].as_f64().unwrap(),
        100.0 * result.saturation_fraction,
    );
    Ok(ExitCode::SUCCESS)
}

fn summarize(result: &SimResult, wall: f64) -> serde_json::Value {
    let alt0 = -result.rows.first().map(|r| r.position.z).unwrap_or(0.0);
    let mut alt_min = f64::INFINITY;
    let mut alt_max = f64::NEG_INFINITY;
    let mut v_max: f64 = 0.0;
    let mut p_sum = 0.0;
    for r in &result.rows {
        let alt = -r.position.z;
        alt_min = alt_min.min(alt);
        alt_max = alt_max.max(alt);
        v_max = v_max.max(r.airspeed);
        p_sum += r.power_total;
    }
    let drift = (alt_max - alt0).abs().max((alt_min - alt0).abs());
    json!({
        "wall_time_s": wall,
        "samples": result.rows.len(),
        "altitude_drift_m": drift,
        "altitude_min_m": alt_min,
        "altitude_max_m": alt_max,
        "airspeed_max_m_s": v_max,
        "power_mean_w": p_sum / result.rows.len().max(1) as f64,
        "saturation_fraction": result.saturation_fraction,
    })
}

fn cmd_synth(args: &SynthArgs) -> Result<ExitCode, TiltwingError> {
    let params = load_params(&args.params)?;
    let geometry = VehicleGeometry::default();
    let samples = sysid::generate_synthetic_sweep(&params, &geometry, args.noise, args.seed)?;
    logio::write_sweep(&samples, BufWriter::new(File::create(&args.out)?))?;
    println!(
        "wrote {} sweep samples to {} (noise {}, seed {})",
        samples.len(),
        args.out.display(),
        args.noise,
        args.seed
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_fit(args: &FitArgs) -> Result<ExitCode, TiltwingError> {
    let samples = logio::read_sweep(BufReader::new(File::open(&args.data)?))?;
    let initial = load_params(&args.initial)?;
    let geometry = VehicleGeometry::default();
    let result = sysid::fit_multi_start(
        &samples,
        &initial,
        &geometry,
        &FitOptions::default(),
        args.restarts.max(1),
        0.15,
        1,
    )?;
    println!(
        "fit: {} samples, cost {:.3e} -> {:.3e} in {} iterations",
        samples.len(),
        result.initial_cost,
        result.cost,
        result.iterations
    );
    if !result.frozen.is_empty() {
        println!(
            "warning: unidentifiable/frozen parameters: {}",
            result.frozen_names().join(", ")
        );
    }
    if !result.converged {
        eprintln!("fit did not converge");
        return Ok(ExitCode::from(3));
    }
    let mut params = result.params;
    if args.calibrate_slope {
        params = sysid::calibrate_tilt_authority(
            &params,
            &geometry,
            10.0,
            15.0_f64.to_radians(),
            4.0,
            SLOPE_TARGET,
        )?;
        let segments = aero::default_segments(&geometry);
        let slope = aero::differential_tilt_slope(
            10.0,
            15.0_f64.to_radians(),
            4.0,
            &params,
            &geometry,
            &segments,
        )?;
        println!(
            "calibrated cruise slope {:.3} N m/rad ({:.4} N m/deg)",
            slope.abs(),
            slope.abs().to_radians()
        );
    }
    std::fs::write(&args.out, params.to_param_file())?;
    println!("parameters -> {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_ff_fit(args: &FfFitArgs) -> Result<ExitCode, TiltwingError> {
    let points = logio::read_pairs(BufReader::new(File::open(&args.data)?))?;
    let coeffs = sysid::fit_thrust_ff(&points)?;
    println!("t_ff coefficients (c0..c7):");
    for (i, c) in coeffs.iter().enumerate() {
        println!("  c{i} = {c:?}");
    }
    let eval = |x: f64| coeffs.iter().rev().fold(0.0, |a, k| a * x + k);
    let rms = (points
        .iter()
        .map(|&(chi, t)| (eval(chi) - t).powi(2))
        .sum::<f64>()
        / points.len() as f64)
        .sqrt();
    println!("fit rms {rms:.4} N over {} points", points.len());
    if let Some(out) = &args.params_out {
        let mut params = if out.exists() {
            AeroParams::from_param_file(&std::fs::read_to_string(out)?)?
        } else {
            AeroParams::default()
        };
        params.t_ff = coeffs;
        std::fs::write(out, params.to_param_file())?;
        println!("parameters -> {}", out.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_ff_trim(args: &FfTrimArgs) -> Result<ExitCode, TiltwingError> {
    let params = load_params(&args.params)?;
    let geometry = VehicleGeometry::default();
    let mut points = Vec::new();
    let mut chi_deg = args.chi_start_deg;
    while chi_deg <= args.chi_end_deg + 1e-9 {
        let chi = chi_deg.to_radians();
        let trim = sysid::trim_level(chi, &params, &geometry)?;
        println!(
            "chi {:5.1} deg: v {:6.3} m/s, t_col {:7.3} N",
            chi_deg, trim.airspeed, trim.t_col
        );
        points.push((chi, trim.t_col));
        chi_deg += args.chi_step_deg;
    }
    logio::write_pairs("chi,t_col", &points, BufWriter::new(File::create(&args.out)?))?;
    println!("wrote {} trim points to {}", points.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(args: &ReportArgs) -> Result<ExitCode, TiltwingError> {
    let rows = logio::read_log(BufReader::new(File::open(&args.log)?))?;
    if rows.is_empty() {
        return Err(TiltwingError::Parse("log contains no rows".into()));
    }
    let out_dir = args
        .out_dir
        .clone()
        .unwrap_or_else(|| args.log.parent().unwrap_or(Path::new(".")).to_path_buf());
    std::fs::create_dir_all(&out_dir)?;
    let stem = args
        .log
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("log");

    let altitude: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, -r.position.z)).collect();
    let airspeed: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.airspeed)).collect();
    let chi_deg: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.chi.to_degrees())).collect();
    let profile = plot::line_plot(
        "Transition profile",
        "t [s]",
        "altitude [m] / airspeed [m/s] / chi [deg]",
        &[
            plot::Series { label: "altitude [m]", points: &altitude },
            plot::Series { label: "airspeed [m/s]", points: &airspeed },
            plot::Series { label: "chi [deg]", points: &chi_deg },
        ],
    )?;
    let profile_path = out_dir.join(format!("{stem}_profile.svg"));
    std::fs::write(&profile_path, profile)?;

    // Power vs airspeed cloud, plus the hover and fastest points.
    let cloud: Vec<(f64, f64)> = rows.iter().map(|r| (r.airspeed, r.power_total)).collect();
    let hover = rows
        .iter()
        .filter(|r| r.airspeed < 0.5)
        .map(|r| r.power_total)
        .fold(f64::NAN, |a: f64, p| if a.is_nan() { p } else { a.max(p) });
    let fastest = rows
        .iter()
        .cloned()
        .fold(rows[0], |a, r| if r.airspeed > a.airspeed { r } else { a });
    let hover_pt = [(0.0, hover)];
    let fast_pt = [(fastest.airspeed, fastest.power_total)];
    let mut series = vec![plot::Series { label: "log samples", points: &cloud }];
    if hover.is_finite() {
        series.push(plot::Series { label: "hover", points: &hover_pt });
    }
    series.push(plot::Series { label: "fastest", points: &fast_pt });
    let power = plot::line_plot("Power vs airspeed", "airspeed [m/s]", "power [W]", &series)?;
    let power_path = out_dir.join(format!("{stem}_power.svg"));
    std::fs::write(&power_path, power)?;

    let alt0 = -rows[0].position.z;
    let drift = altitude
        .iter()
        .map(|&(_, a)| (a - alt0).abs())
        .fold(0.0, f64::max);
    println!("samples        {}", rows.len());
    println!("duration       {:.1} s", rows.last().unwrap().t);
    println!("altitude drift {drift:.3} m");
    println!(
        "max airspeed   {:.2} m/s at power {:.1} W",
        fastest.airspeed, fastest.power_total
    );
    if hover.is_finite() && fastest.airspeed > 1.0 {
        println!(
            "power vs hover {:.1} W -> {:.1} W ({:+.1}%)",
            hover,
            fastest.power_total,
            100.0 * (fastest.power_total - hover) / hover
        );
    }
    println!("plots          {} , {}", profile_path.display(), power_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_alloc_check(args: &AllocCheckArgs) -> Result<ExitCode, TiltwingError> {
    let geometry = VehicleGeometry::default();
    let limits = AllocLimits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let start = Instant::now();
    let mut used = 0usize;
    let mut max_tau_err: f64 = 0.0;
    let mut max_tcol_err: f64 = 0.0;
    let eps_limit = 3.0_f64.to_radians();
    for _ in 0..args.count {
        let demand = ControlDemand {
            tau: nalgebra::Vector3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ),
            t_col: rng.gen_range(5.0..30.0),
            chi: rng.gen_range(geometry.chi_min..std::f64::consts::FRAC_PI_2),
        };
        let cmd = alloc::allocate_with(&demand, &geometry, &limits)?;
        if cmd.saturation.any() || cmd.epsilon.abs() > eps_limit {
            continue;
        }
        used += 1;
        let (tau, t_col) = alloc::reconstruct_wrench_with(&cmd, &geometry, cmd.chi, &limits)?;
        for axis in 0..3 {
            let tol_base = demand.tau[axis].abs().max(0.01 / 0.02);
            let rel = (tau[axis] - demand.tau[axis]).abs() / tol_base;
            max_tau_err = max_tau_err.max(rel);
        }
        max_tcol_err = max_tcol_err.max((t_col - demand.t_col).abs() / demand.t_col);
    }
    let wall = start.elapsed().as_secs_f64();
    println!(
        "{} demands, {} non-saturated with |epsilon| <= 3 deg, {:.2} s",
        args.count, used, wall
    );
    println!("max torque error {:.4}% of tolerance base (limit 2%)", 100.0 * max_tau_err);
    println!("max T_col error  {:.4}% (limit 1%)", 100.0 * max_tcol_err);
    let pass = max_tau_err <= 0.02 && max_tcol_err <= 0.01 && used > args.count / 10;
    println!("round-trip check: {}", if pass { "PASS" } else { "FAIL" });
    if pass {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn run() -> Result<ExitCode, TiltwingError> {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Usage problems exit 1 (clap's default would be 2).
            let _ = e.print();
            let code = if e.use_stderr() { 1 } else { 0 };
            return Ok(ExitCode::from(code));
        }
    };
    match &cli.command {
        Command::Sim(a) => cmd_sim(a),
        Command::Sysid(SysidCommand::Synth(a)) => cmd_synth(a),
        Command::Sysid(SysidCommand::Fit(a)) => cmd_fit(a),
        Command::Ffpoly(FfpolyCommand::Fit(a)) => cmd_ff_fit(a),
        Command::Ffpoly(FfpolyCommand::Trim(a)) => cmd_ff_trim(a),
        Command::Report(a) => cmd_report(a),
        Command::Alloc(AllocCommand::Check(a)) => cmd_alloc_check(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match &e {
                TiltwingError::Diverged { .. } => 2,
                TiltwingError::FitFailed(_) | TiltwingError::IllConditioned(_) => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

// Keep the parameter-name table referenced from the binary so schema
// drift in the docs shows up in review.
#[allow(dead_code)]
const _: [&str; aero::PARAM_COUNT] = PARAM_NAMES;
