//! Command-line front end for `phasemeas`.
//!
//! Every command writes `KEY=value` lines to stdout; a short human summary
//! goes to stderr. Exit status is 0 on success, 1 when a check fails or a
//! computation cannot be completed, and 2 for unusable input.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use phasemeas::husimi::{husimi_closed_grid, husimi_convolution, husimi_overlap_grid, HusimiResult};
use phasemeas::sampler::{sample_fock, sample_gaussian, OutcomeBatch};
use phasemeas::sl2r::{are_equivalent, pointer_transform};
use phasemeas::states::{gaussian_to_fock, wigner_fock, wigner_gaussian};
use phasemeas::{CanonicalParams, Error, GridSpec};

pub mod spec;
pub mod verify;

use spec::{parse_grid, parse_measurement, parse_state, StateInput};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Check(String),
    #[error(transparent)]
    Compute(#[from] Error),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub(crate) fn usage(e: Error) -> Self {
        CliError::Usage(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(e) => match e {
                Error::NotUnimodular { .. }
                | Error::InvalidParameter { .. }
                | Error::InvalidMetric { .. }
                | Error::InvalidState(_)
                | Error::InvalidGrid(_)
                | Error::Parse(_) => 2,
                _ => 1,
            },
            CliError::Check(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "phasemeas", version, about = "Outcome laws of joint quadrature measurements")]
pub struct Cli {
    /// Read and print angles in degrees instead of radians.
    #[arg(long, global = true)]
    pub degrees: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Convolution,
    Overlap,
    Closed,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Zero-obliquity representative and accuracy figures of (theta, phi, lambda).
    #[command(allow_negative_numbers = true)]
    Canonicalize { theta: f64, phi: f64, lambda: f64 },
    /// Exit 0 when two measurements are informationally equivalent, 1 otherwise.
    Equiv {
        first: String,
        second: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Metric tensor and canonical parameters of a measurement.
    Metric { measurement: String },
    /// Outcome density on a grid, written as CSV plus a JSON sidecar.
    Husimi {
        #[arg(long, default_value = "vacuum")]
        state: String,
        #[arg(long, default_value = "identity")]
        measurement: String,
        #[arg(long, default_value = "-8:8:161,-8:8:161", allow_hyphen_values = true)]
        grid: String,
        #[arg(long, value_enum, default_value_t = MethodArg::Convolution)]
        method: MethodArg,
        /// Fock truncation for `fock:n` states and the overlap method.
        #[arg(long, default_value_t = 64)]
        dim: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw measurement outcomes; CSV goes to `--out` or stdout.
    Sample {
        #[arg(long, default_value = "vacuum")]
        state: String,
        #[arg(long, default_value = "identity")]
        measurement: String,
        #[arg(short, long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        dim: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the cross-checks and report one line per check.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// `KEY=value` report lines.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Report {
    pub lines: Vec<(String, String)>,
}

impl Report {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.to_owned(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write_to(&self, out: &mut dyn Write) -> std::io::Result<()> {
        for (k, v) in &self.lines {
            writeln!(out, "{k}={v}")?;
        }
        Ok(())
    }
}

fn show_angle(radians: f64, degrees: bool) -> f64 {
    if degrees {
        radians.to_degrees()
    } else {
        radians
    }
}

pub fn cmd_canonicalize(theta: f64, phi: f64, lambda: f64, degrees: bool) -> Result<Report, CliError> {
    let p = CanonicalParams::new(spec::angle(theta, degrees), spec::angle(phi, degrees), lambda)
        .map_err(CliError::usage)?;
    let g = p.matrix().metric();
    let p0 = g.canonical_orthogonal()?;
    let (acc_x, acc_p) = p.accuracies();
    let mut r = Report::default();
    r.push("ANGLE_UNIT", if degrees { "deg" } else { "rad" });
    r.push("METRIC_A", g.a());
    r.push("METRIC_B", g.b());
    r.push("METRIC_C", g.c());
    r.push("THETA0", show_angle(p0.theta(), degrees));
    r.push("LAMBDA0", p0.lambda());
    r.push("ACCURACY_X", acc_x);
    r.push("ACCURACY_P", acc_p);
    r.push("ACCURACY0_X", p0.lambda() / 2f64.sqrt());
    r.push("ACCURACY0_P", 1.0 / (2f64.sqrt() * p0.lambda()));
    Ok(r)
}

pub fn cmd_equiv(first: &str, second: &str, tol: f64, degrees: bool) -> Result<Report, CliError> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::Usage(format!("tolerance must be positive, got {tol}")));
    }
    let m1 = parse_measurement(first, degrees)?;
    let m2 = parse_measurement(second, degrees)?;
    let equivalent = are_equivalent(&m1, &m2, tol);
    let mut r = Report::default();
    r.push("EQUIVALENT", equivalent);
    r.push("METRIC_DIFF", m1.metric().max_abs_diff(&m2.metric()));
    r.push("POINTER_IS_ROTATION", pointer_transform(&m1, &m2).is_rotation(tol));
    r.push("TOL", tol);
    Ok(r)
}

pub fn cmd_metric(measurement: &str, degrees: bool) -> Result<Report, CliError> {
    let m = parse_measurement(measurement, degrees)?;
    let p = m.params()?;
    let g = m.metric();
    let p0 = g.canonical_orthogonal()?;
    let mut r = Report::default();
    r.push("METRIC_A", g.a());
    r.push("METRIC_B", g.b());
    r.push("METRIC_C", g.c());
    r.push("THETA", show_angle(p.theta(), degrees));
    r.push("PHI", show_angle(p.phi(), degrees));
    r.push("LAMBDA", p.lambda());
    r.push("THETA0", show_angle(p0.theta(), degrees));
    r.push("LAMBDA0", p0.lambda());
    Ok(r)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Usage(format!("cannot write `{}`: {e}", path.display())))
}

/// `q.csv` gets the sidecar `q.json`; a path already ending in `.json` gets `.sidecar.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let candidate = out.with_extension("json");
    if candidate == out {
        out.with_extension("sidecar.json")
    } else {
        candidate
    }
}

pub fn husimi_for(
    state: &StateInput,
    m: &phasemeas::Sl2Matrix,
    grid: &GridSpec,
    method: MethodArg,
    dim: usize,
) -> Result<HusimiResult, CliError> {
    let g = m.metric();
    Ok(match (method, state) {
        (MethodArg::Convolution, StateInput::Gaussian(s)) => husimi_convolution(&wigner_gaussian(s, grid), &g)?,
        (MethodArg::Convolution, StateInput::Fock(rho)) => husimi_convolution(&wigner_fock(rho, grid), &g)?,
        (MethodArg::Overlap, StateInput::Gaussian(s)) => husimi_overlap_grid(&gaussian_to_fock(s, dim)?, m, grid)?,
        (MethodArg::Overlap, StateInput::Fock(rho)) => husimi_overlap_grid(rho, m, grid)?,
        (MethodArg::Closed, StateInput::Gaussian(s)) => husimi_closed_grid(s, &g, grid),
        (MethodArg::Closed, StateInput::Fock(_)) => {
            return Err(CliError::Usage("the closed form needs a Gaussian state".into()))
        }
    })
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_husimi(
    state: &str,
    measurement: &str,
    grid: &str,
    method: MethodArg,
    dim: usize,
    out: &Path,
    degrees: bool,
) -> Result<Report, CliError> {
    let state = parse_state(state, dim, degrees)?;
    let m = parse_measurement(measurement, degrees)?;
    let grid = parse_grid(grid)?;
    let side_path = sidecar_path(out);
    let mut csv = create(out)?;
    let mut side = create(&side_path)?;

    let q = husimi_for(&state, &m, &grid, method, dim)?;
    q.grid.write_csv(&mut csv)?;
    csv.flush()?;
    let sidecar = q.sidecar();
    serde_json::to_writer_pretty(&mut side, &sidecar).map_err(|e| CliError::Io(e.into()))?;
    writeln!(side)?;
    side.flush()?;

    let mut r = Report::default();
    r.push("METHOD", q.method.as_str());
    r.push("INTEGRAL", sidecar.integral);
    r.push("MIN_VALUE", sidecar.min_value);
    r.push("NX", grid.nx);
    r.push("NP", grid.np);
    r.push("OUT", out.display());
    r.push("SIDECAR", side_path.display());
    Ok(r)
}

pub fn sample_for(state: &StateInput, m: &phasemeas::Sl2Matrix, n: usize, seed: u64) -> Result<OutcomeBatch, CliError> {
    Ok(match state {
        StateInput::Gaussian(s) => sample_gaussian(s, &m.metric(), n, seed)?,
        StateInput::Fock(rho) => sample_fock(rho, m, n, seed)?,
    })
}

/// Returns the report and, when no output path is given, the CSV text.
#[allow(clippy::too_many_arguments)]
pub fn cmd_sample(
    state: &str,
    measurement: &str,
    n: usize,
    seed: u64,
    dim: usize,
    out: Option<&Path>,
    degrees: bool,
) -> Result<(Report, Option<String>), CliError> {
    let state = parse_state(state, dim, degrees)?;
    let m = parse_measurement(measurement, degrees)?;
    if n == 0 {
        return Err(CliError::Usage("sample count must be positive".into()));
    }
    let mut file = out.map(create).transpose()?;
    let batch = sample_for(&state, &m, n, seed)?;
    let csv = batch.to_csv_string();
    let mut r = Report::default();
    r.push("N", batch.count());
    r.push("SEED", seed);
    match (&mut file, out) {
        (Some(f), Some(path)) => {
            f.write_all(csv.as_bytes())?;
            f.flush()?;
            r.push("OUT", path.display());
            Ok((r, None))
        }
        _ => Ok((r, Some(csv))),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let deg = cli.degrees;
    match &cli.command {
        Command::Canonicalize { theta, phi, lambda } => {
            let r = cmd_canonicalize(*theta, *phi, *lambda, deg)?;
            r.write_to(out)?;
            writeln!(
                err,
                "equivalent zero-obliquity measurement: theta0 = {}, lambda0 = {}",
                r.get("THETA0").unwrap_or("?"),
                r.get("LAMBDA0").unwrap_or("?")
            )?;
        }
        Command::Equiv { first, second, tol } => {
            let r = cmd_equiv(first, second, *tol, deg)?;
            r.write_to(out)?;
            if r.get("EQUIVALENT") != Some("true") {
                writeln!(err, "not equivalent")?;
                return Err(CliError::Check("measurements are not equivalent".into()));
            }
            writeln!(err, "equivalent")?;
        }
        Command::Metric { measurement } => cmd_metric(measurement, deg)?.write_to(out)?,
        Command::Husimi {
            state,
            measurement,
            grid,
            method,
            dim,
            out: path,
        } => {
            let r = cmd_husimi(state, measurement, grid, *method, *dim, path, deg)?;
            r.write_to(out)?;
            writeln!(err, "wrote {}", path.display())?;
        }
        Command::Sample {
            state,
            measurement,
            n,
            seed,
            dim,
            out: path,
        } => {
            let (r, csv) = cmd_sample(state, measurement, *n, *seed, *dim, path.as_deref(), deg)?;
            match csv {
                Some(text) => out.write_all(text.as_bytes())?,
                None => r.write_to(out)?,
            }
        }
        Command::Verify { seed } => {
            let outcome = verify::run_checks(*seed);
            outcome.report().write_to(out)?;
            let failed = outcome.failed();
            writeln!(err, "{} checks, {} failed", outcome.checks.len(), failed.len())?;
            if !failed.is_empty() {
                return Err(CliError::Check(format!("failed: {}", failed.join(", "))));
            }
        }
    }
    Ok(())
}
