//! Command-line surface: argument parsing, sweep orchestration and CSV/JSON
//! emission.
//!
//! Exit-code contract: 0 on success, 1 on a computational error (the module
//! error is printed on stderr), 2 on a usage error. Output is deterministic:
//! identical argument vectors produce byte-identical output. The environment
//! variable CRANK_SEED is reserved and currently unused; randomized checks
//! live in the test suite, not in the CLI.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bogoliubov::{
    build_transform, check_bosonic, commutator_matrix, left_from_right, verify_normalization,
};
use crate::dynamics::{evolve_detailed, evolve_rk4, growth_rate, PhaseState};
use crate::ep_analysis::{
    diabolic_check, encircle_ep, locate_eps, scaling_exponent, EpError, LoopDirection,
    ScalingFit, ScalingQuantity,
};
use crate::linalg::ComplexMatrix4;
use crate::model::{
    build_dynamical_matrix, build_quadratic_form, eigenmodes, instability_interval,
    map_couplings, quadratic_form_from_couplings, routhian_energy, ModelParams,
};

/// Numerical study of the rotating two-dimensional oscillator and its
/// instability points.
#[derive(Debug, Parser)]
#[command(name = "crankep", version, about)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Output format (reports always use json)
    #[arg(long, value_enum, global = true, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Write to this path instead of stdout
    #[arg(long, global = true)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    Ccw,
    Cw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    ComponentNorm,
    Overlap,
    Both,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err("positive frequency required".into())
    }
}

fn finite_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err("finite value required".into())
    }
}

/// Trap frequencies shared by every command; defaults are the reference
/// configuration w_x = 3, w_y = 2.
#[derive(Debug, Clone, Copy, Args)]
pub struct TrapArgs {
    /// Oscillator frequency along x
    #[arg(long = "omega-x", value_parser = positive_f64, default_value = "3.0", allow_negative_numbers = true)]
    pub omega_x: f64,
    /// Oscillator frequency along y
    #[arg(long = "omega-y", value_parser = positive_f64, default_value = "2.0", allow_negative_numbers = true)]
    pub omega_y: f64,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Sweep the rotational frequency and tabulate both eigenmode energies
    Spectrum {
        #[command(flatten)]
        trap: TrapArgs,
        #[arg(long = "omega-min", value_parser = finite_f64, default_value = "0.0", allow_negative_numbers = true)]
        omega_min: f64,
        #[arg(long = "omega-max", value_parser = finite_f64, default_value = "4.0", allow_negative_numbers = true)]
        omega_max: f64,
        /// Number of grid points (inclusive endpoints)
        #[arg(long, default_value_t = 400)]
        steps: usize,
    },
    /// Map trap frequencies and rotation onto the bilinear coupling strengths
    Couplings {
        /// First boson frequency
        #[arg(long = "omega-1", value_parser = positive_f64, default_value = "3.0", allow_negative_numbers = true)]
        omega_1: f64,
        /// Second boson frequency
        #[arg(long = "omega-2", value_parser = positive_f64, default_value = "2.0", allow_negative_numbers = true)]
        omega_2: f64,
        /// Rotational frequency
        #[arg(long, value_parser = finite_f64, allow_negative_numbers = true)]
        omega: f64,
    },
    /// Build the normalized transform and report its identity residuals
    Bogoliubov {
        #[command(flatten)]
        trap: TrapArgs,
        /// Rotational frequency
        #[arg(long, value_parser = finite_f64, allow_negative_numbers = true)]
        omega: f64,
    },
    /// Quasi-boson commutators at one parameter point
    Commutators {
        #[command(flatten)]
        trap: TrapArgs,
        /// Rotational frequency
        #[arg(long, value_parser = finite_f64, allow_negative_numbers = true)]
        omega: f64,
    },
    /// Locate both critical rotational frequencies by bisection
    EpLocate {
        #[command(flatten)]
        trap: TrapArgs,
    },
    /// Fit the power laws of the transform divergence and the eigenvector
    /// overlap near a critical point
    EpScaling {
        #[command(flatten)]
        trap: TrapArgs,
        /// Critical rotational frequency to approach
        #[arg(long, value_parser = positive_f64, allow_negative_numbers = true)]
        center: f64,
        #[arg(long, value_enum, default_value_t = Quantity::Both)]
        quantity: Quantity,
        /// Comma-separated offsets; default log-spaced 1e-3 .. 1e-6
        #[arg(long, value_delimiter = ',', value_parser = positive_f64, allow_negative_numbers = true)]
        radii: Vec<f64>,
    },
    /// Walk a closed circle in the complex rotational-frequency plane and
    /// report the branch permutation and eigenvector phase factor
    EpEncircle {
        #[command(flatten)]
        trap: TrapArgs,
        /// Circle center on the real axis
        #[arg(long, value_parser = finite_f64, allow_negative_numbers = true)]
        center: f64,
        /// Circle radius; default 0.05 |omega_x - omega_y|
        #[arg(long, value_parser = positive_f64, allow_negative_numbers = true)]
        radius: Option<f64>,
        /// Steps per loop
        #[arg(long, default_value_t = 256)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = Direction::Ccw)]
        direction: Direction,
        #[arg(long, default_value_t = 1)]
        loops: usize,
    },
    /// Distinguish the diabolic merger at equal trap frequencies from an
    /// exceptional point
    Diabolic {
        /// Degenerate frequency: trap and rotation at once
        #[arg(long, value_parser = positive_f64, allow_negative_numbers = true)]
        omega: f64,
        /// Override the x trap frequency (defaults to --omega)
        #[arg(long = "omega-x", value_parser = positive_f64, allow_negative_numbers = true)]
        omega_x: Option<f64>,
        /// Override the y trap frequency (defaults to --omega)
        #[arg(long = "omega-y", value_parser = positive_f64, allow_negative_numbers = true)]
        omega_y: Option<f64>,
    },
    /// Evolve a phase-space state and report energy conservation
    Evolve {
        #[command(flatten)]
        trap: TrapArgs,
        /// Rotational frequency
        #[arg(long, value_parser = finite_f64, allow_negative_numbers = true)]
        omega: f64,
        #[arg(long, value_parser = finite_f64, default_value = "1.0", allow_negative_numbers = true)]
        px: f64,
        #[arg(long, value_parser = finite_f64, default_value = "0.0", allow_negative_numbers = true)]
        py: f64,
        #[arg(long, value_parser = finite_f64, default_value = "0.0", allow_negative_numbers = true)]
        x: f64,
        #[arg(long, value_parser = finite_f64, default_value = "0.0", allow_negative_numbers = true)]
        y: f64,
        /// Evolution time
        #[arg(long, value_parser = finite_f64, allow_negative_numbers = true)]
        t: f64,
        /// Cross-check against the Runge-Kutta integrator with this step
        #[arg(long, value_parser = positive_f64, allow_negative_numbers = true)]
        dt: Option<f64>,
    },
    /// Measure the exponential runaway rate inside the instability window
    Growth {
        #[command(flatten)]
        trap: TrapArgs,
        /// Rotational frequency
        #[arg(long, value_parser = finite_f64, allow_negative_numbers = true)]
        omega: f64,
        /// Fit window; default 20 / |Im w-| inside the window, 50 outside
        #[arg(long = "t-max", value_parser = positive_f64, allow_negative_numbers = true)]
        t_max: Option<f64>,
    },
}

/// One row of a spectrum sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct SweepRow {
    #[serde(rename = "Omega")]
    pub omega: f64,
    pub wplus_re: f64,
    pub wplus_im: f64,
    pub wminus_re: f64,
    pub wminus_im: f64,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Computation(String),
    Io(io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Computation(m) => write!(f, "{m}"),
            CliError::Io(e) => write!(f, "IOError: {e}"),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Tag computational failures with the module error name so scripts can
/// branch on the diagnostic stream.
macro_rules! computation {
    ($result:expr) => {
        $result.map_err(|e| CliError::Computation(format!("{:?}", e)))
    };
}

/// Parse an argument vector into a validated run configuration.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    RunConfig::try_parse_from(argv)
}

fn format_float(v: f64) -> String {
    // 17 significant decimal digits: lossless for binary64
    format!("{v:.16e}")
}

/// Emit sweep rows as CSV (fixed header, 17 significant digits, line-feed
/// terminated) or as a JSON array with the same field names.
pub fn write_table(
    rows: &[SweepRow],
    format: OutputFormat,
    sink: &mut dyn Write,
) -> io::Result<()> {
    assert!(!rows.is_empty(), "refusing to write an empty table");
    match format {
        OutputFormat::Csv => {
            let mut buf = String::new();
            buf.push_str("Omega,wplus_re,wplus_im,wminus_re,wminus_im\n");
            for r in rows {
                let _ = writeln!(
                    buf,
                    "{},{},{},{},{}",
                    format_float(r.omega),
                    format_float(r.wplus_re),
                    format_float(r.wplus_im),
                    format_float(r.wminus_re),
                    format_float(r.wminus_im),
                );
            }
            sink.write_all(buf.as_bytes())
        }
        OutputFormat::Json => {
            let body = serde_json::to_string_pretty(rows).expect("plain numeric rows");
            sink.write_all(body.as_bytes())?;
            sink.write_all(b"\n")
        }
    }
}

fn write_report<S: Serialize>(report: &S, sink: &mut dyn Write) -> Result<(), CliError> {
    let body = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Computation(format!("serialization: {e}")))?;
    sink.write_all(body.as_bytes())?;
    sink.write_all(b"\n")?;
    Ok(())
}

fn params_for(trap: &TrapArgs, omega: f64) -> Result<ModelParams, CliError> {
    computation!(ModelParams::real(trap.omega_x, trap.omega_y, omega))
}

/// Compute the sweep table for the spectrum command.
pub fn spectrum_rows(
    trap: &TrapArgs,
    omega_min: f64,
    omega_max: f64,
    steps: usize,
) -> Result<Vec<SweepRow>, CliError> {
    if steps < 2 {
        return Err(CliError::Usage("--steps must be at least 2".into()));
    }
    if omega_min >= omega_max {
        return Err(CliError::Usage(
            "--omega-min must be below --omega-max".into(),
        ));
    }
    let mut rows = Vec::with_capacity(steps);
    for k in 0..steps {
        let w = omega_min + (omega_max - omega_min) * k as f64 / (steps - 1) as f64;
        let p = params_for(trap, w)?;
        let modes = eigenmodes(&p);
        rows.push(SweepRow {
            omega: w,
            wplus_re: modes.omega_plus.re,
            wplus_im: modes.omega_plus.im,
            wminus_re: modes.omega_minus.re,
            wminus_im: modes.omega_minus.im,
        });
    }
    Ok(rows)
}

#[derive(Serialize)]
struct CouplingsReport {
    omega_1: f64,
    omega_2: f64,
    omega: f64,
    g_1: f64,
    g_2: f64,
    /// max-norm gap between the coupling-built and directly built forms
    equivalence_residual: f64,
}

#[derive(Serialize)]
struct TransformReport {
    omega_x: f64,
    omega_y: f64,
    omega: f64,
    case: crate::bogoliubov::ContinuationCase,
    wplus_re: f64,
    wplus_im: f64,
    wminus_re: f64,
    wminus_im: f64,
    inverse_residual: f64,
    eigen_relation_residual: f64,
    normalization_residual: f64,
    left_identity_deviation: f64,
}

#[derive(Serialize)]
struct CommutatorReport {
    omega_x: f64,
    omega_y: f64,
    omega: f64,
    is_bosonic: bool,
    c23_re: f64,
    c23_im: f64,
    c14_re: f64,
    c14_im: f64,
    max_off_pair: f64,
}

#[derive(Serialize)]
struct ScalingReport {
    omega_x: f64,
    omega_y: f64,
    center: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    component_norm: Option<ScalingFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    overlap: Option<ScalingFit>,
}

#[derive(Serialize)]
struct EvolveReport {
    omega_x: f64,
    omega_y: f64,
    omega: f64,
    t: f64,
    initial: PhaseState,
    final_state: PhaseState,
    energy_initial: f64,
    energy_final: f64,
    rk4_fallback: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    rk4_max_deviation: Option<f64>,
}

#[derive(Serialize)]
struct GrowthCliReport {
    omega_x: f64,
    omega_y: f64,
    omega: f64,
    t_max: f64,
    slope: f64,
    in_window: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    expected_rate: Option<f64>,
}

fn default_radii() -> Vec<f64> {
    (0..7).map(|k| 1e-3 * 10f64.powf(-0.5 * k as f64)).collect()
}

/// Execute a parsed configuration, writing the table or report to `sink`
/// (used when no --out path is given).
pub fn run(config: &RunConfig, sink: &mut dyn Write) -> Result<(), CliError> {
    let mut file_sink;
    let out: &mut dyn Write = match &config.out {
        Some(path) => {
            file_sink = fs::File::create(path)?;
            &mut file_sink
        }
        None => sink,
    };
    if config.format == OutputFormat::Csv && !matches!(config.command, Command::Spectrum { .. }) {
        return Err(CliError::Usage(
            "--format csv is only available for spectrum sweeps; reports are json".into(),
        ));
    }

    match &config.command {
        Command::Spectrum {
            trap,
            omega_min,
            omega_max,
            steps,
        } => {
            let rows = spectrum_rows(trap, *omega_min, *omega_max, *steps)?;
            write_table(&rows, config.format, out)?;
        }
        Command::Couplings {
            omega_1,
            omega_2,
            omega,
        } => {
            let set = map_couplings(*omega_1, *omega_2, *omega);
            let built = quadratic_form_from_couplings(&set);
            let p = computation!(ModelParams::real(*omega_1, *omega_2, *omega))?;
            let direct = build_quadratic_form(&p);
            write_report(
                &CouplingsReport {
                    omega_1: *omega_1,
                    omega_2: *omega_2,
                    omega: *omega,
                    g_1: set.g_1,
                    g_2: set.g_2,
                    equivalence_residual: built.h.sub(&direct.h).max_norm(),
                },
                out,
            )?;
        }
        Command::Bogoliubov { trap, omega } => {
            let p = params_for(trap, *omega)?;
            let t = computation!(build_transform(&p))?;
            let d = ComplexMatrix4::diagonal(t.modes.dynamical_eigenvalues());
            let m = build_dynamical_matrix(&p).m;
            write_report(
                &TransformReport {
                    omega_x: trap.omega_x,
                    omega_y: trap.omega_y,
                    omega: *omega,
                    case: t.case,
                    wplus_re: t.modes.omega_plus.re,
                    wplus_im: t.modes.omega_plus.im,
                    wminus_re: t.modes.omega_minus.re,
                    wminus_im: t.modes.omega_minus.im,
                    inverse_residual: t
                        .v
                        .mul(&t.u)
                        .sub(&ComplexMatrix4::identity())
                        .max_norm(),
                    eigen_relation_residual: m.mul(&t.u).sub(&t.u.mul(&d)).max_norm(),
                    normalization_residual: verify_normalization(&t),
                    left_identity_deviation: left_from_right(&t.u).sub(&t.v).max_norm(),
                },
                out,
            )?;
        }
        Command::Commutators { trap, omega } => {
            let p = params_for(trap, *omega)?;
            let check = computation!(check_bosonic(&p))?;
            let t = computation!(build_transform(&p))?;
            let c = commutator_matrix(&t).c;
            let max_off_pair = [(0, 1), (0, 2), (1, 3), (2, 3)]
                .into_iter()
                .map(|(j, k)| c.0[j][k].norm())
                .fold(0.0, f64::max);
            write_report(
                &CommutatorReport {
                    omega_x: trap.omega_x,
                    omega_y: trap.omega_y,
                    omega: *omega,
                    is_bosonic: check.is_bosonic,
                    c23_re: check.c23_re,
                    c23_im: check.c23_im,
                    c14_re: check.c14_re,
                    c14_im: check.c14_im,
                    max_off_pair,
                },
                out,
            )?;
        }
        Command::EpLocate { trap } => {
            let eps = computation!(locate_eps(trap.omega_x, trap.omega_y))?;
            write_report(&eps.to_vec(), out)?;
        }
        Command::EpScaling {
            trap,
            center,
            quantity,
            radii,
        } => {
            let radii = if radii.is_empty() {
                default_radii()
            } else {
                radii.clone()
            };
            let fit = |q: ScalingQuantity| -> Result<ScalingFit, CliError> {
                computation!(scaling_exponent(
                    trap.omega_x,
                    trap.omega_y,
                    *center,
                    q,
                    &radii
                ))
            };
            let report = ScalingReport {
                omega_x: trap.omega_x,
                omega_y: trap.omega_y,
                center: *center,
                component_norm: match quantity {
                    Quantity::Overlap => None,
                    _ => Some(fit(ScalingQuantity::ComponentNorm)?),
                },
                overlap: match quantity {
                    Quantity::ComponentNorm => None,
                    _ => Some(fit(ScalingQuantity::Overlap)?),
                },
            };
            write_report(&report, out)?;
        }
        Command::EpEncircle {
            trap,
            center,
            radius,
            steps,
            direction,
            loops,
        } => {
            let radius = radius.unwrap_or(0.05 * (trap.omega_x - trap.omega_y).abs());
            let dir = match direction {
                Direction::Ccw => LoopDirection::Ccw,
                Direction::Cw => LoopDirection::Cw,
            };
            // step-doubling refinement on tracking ambiguity
            let mut attempt_steps = *steps;
            let report = loop {
                match encircle_ep(
                    trap.omega_x,
                    trap.omega_y,
                    *center,
                    radius,
                    attempt_steps,
                    dir,
                    *loops,
                ) {
                    Ok(r) => break r,
                    Err(EpError::TrackingAmbiguity { .. }) if attempt_steps < 4 * steps => {
                        attempt_steps *= 2;
                    }
                    Err(e) => return Err(CliError::Computation(format!("{e:?}"))),
                }
            };
            write_report(&report, out)?;
        }
        Command::Diabolic {
            omega,
            omega_x,
            omega_y,
        } => {
            let wx = omega_x.unwrap_or(*omega);
            let wy = omega_y.unwrap_or(*omega);
            let report = computation!(diabolic_check(wx, wy, *omega))?;
            write_report(&report, out)?;
        }
        Command::Evolve {
            trap,
            omega,
            px,
            py,
            x,
            y,
            t,
            dt,
        } => {
            let p = params_for(trap, *omega)?;
            let s0 = PhaseState::new(*px, *py, *x, *y);
            let (s1, fell_back) = computation!(evolve_detailed(&p, &s0, *t))?;
            let h = build_quadratic_form(&p);
            let rk4_max_deviation = match dt {
                Some(dt) => {
                    let oracle = computation!(evolve_rk4(&p, &s0, *t, *dt))?;
                    Some(
                        s1.to_array()
                            .iter()
                            .zip(oracle.to_array())
                            .map(|(a, b)| (a - b).abs())
                            .fold(0.0, f64::max),
                    )
                }
                None => None,
            };
            write_report(
                &EvolveReport {
                    omega_x: trap.omega_x,
                    omega_y: trap.omega_y,
                    omega: *omega,
                    t: *t,
                    initial: s0,
                    final_state: s1,
                    energy_initial: routhian_energy(&s0.to_array(), &h),
                    energy_final: routhian_energy(&s1.to_array(), &h),
                    rk4_fallback: fell_back,
                    rk4_max_deviation,
                },
                out,
            )?;
        }
        Command::Growth { trap, omega, t_max } => {
            let p = params_for(trap, *omega)?;
            let modes = eigenmodes(&p);
            let (lo, hi) = instability_interval(trap.omega_x, trap.omega_y);
            let inside = *omega > lo && *omega < hi;
            let t_max = t_max.unwrap_or(if inside {
                20.0 / modes.omega_minus.im.max(1e-6)
            } else {
                50.0
            });
            let report = computation!(growth_rate(
                &p,
                &PhaseState::new(1.0, 1.0, 1.0, 1.0),
                t_max
            ))?;
            write_report(
                &GrowthCliReport {
                    omega_x: trap.omega_x,
                    omega_y: trap.omega_y,
                    omega: *omega,
                    t_max,
                    slope: report.slope,
                    in_window: report.in_window,
                    expected_rate: inside.then_some(modes.omega_minus.im),
                },
                out,
            )?;
        }
    }
    Ok(())
}

/// Entry point used by the binary: parse, run, map errors to the exit-code
/// contract.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match parse_args(argv) {
        Ok(c) => c,
        Err(e) => {
            // clap prints help/version on stdout with exit 0 by convention
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = io::stdout();
    let mut sink = stdout.lock();
    match run(&config, &mut sink) {
        Ok(()) => 0,
        Err(CliError::Usage(m)) => {
            eprintln!("usage error: {m}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Helper for tests: run a command line and capture stdout.
pub fn run_to_string(argv: &[&str]) -> Result<String, CliError> {
    let config =
        parse_args(argv).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut buf = Vec::new();
    run(&config, &mut buf)?;
    Ok(String::from_utf8(buf).expect("utf-8 output"))
}
