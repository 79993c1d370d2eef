//! `sigma2`: CHY solves, quasi-local mass profiles, Penrose verification and σ₂ scans.
//!
//! Exit codes: 0 success, 2 usage or invalid parameters, 3 numeric failure,
//! 4 Penrose gap below −tol while the sampled σ₂ ≥ 3/2 − tol.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use sigma2_core::chy::{k_of_beta, solve_chy, DEFAULT_S_END, DEFAULT_S_START};
use sigma2_core::levelset::mass_profile;
use sigma2_core::metrics::{ConformalMetric, MetricSpec};
use sigma2_core::penrose::{verify, verify_levels, VerifyOptions};
use sigma2_core::quadrature::SphericalQuadrature;
use sigma2_core::sampling::sigma2_scan;
use sigma2_core::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_CONTRADICTION: u8 = 4;

/// Tolerance on σ₂ ≥ 3/2 reported by `sigma2-scan`.
const SCAN_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(
    name = "sigma2",
    version,
    about = "Quasi-local mass and Penrose inequality checks for conformal AH 4-discs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the CHY model and write s, r, v, v_s, first_integral, radial_mass as CSV.
    Chy {
        /// Cone parameter β ≥ 0 (k = β(β + 2)).
        #[arg(
            long,
            conflicts_with = "k",
            required_unless_present = "k",
            allow_hyphen_values = true
        )]
        beta: Option<f64>,
        /// First-integral constant k ≥ 0.
        #[arg(long, allow_hyphen_values = true)]
        k: Option<f64>,
        /// Integration range in s = log(1/r), as START,END.
        #[arg(long, value_parser = parse_range, default_value_t = SRange(DEFAULT_S_START, DEFAULT_S_END), allow_hyphen_values = true)]
        s_range: SRange,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quasi-local mass m(t) on level sets, as CSV with gap comments.
    Profile {
        /// Metric: a JSON file, inline JSON, or a preset name.
        #[arg(long)]
        metric: String,
        /// Lowest level; with --t-max, levels are evenly spaced. Without both,
        /// the boundary/singular plan of `verify` is used.
        #[arg(long, requires = "t_max", allow_hyphen_values = true)]
        t_min: Option<f64>,
        #[arg(long, requires = "t_min", allow_hyphen_values = true)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = 40)]
        levels: usize,
        /// Spherical quadrature degree.
        #[arg(long, default_value_t = 11)]
        degree: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full pipeline: σ₂ scan, m(t) at both ends, limits, m₂ and the Penrose verdict as JSON.
    Verify {
        #[arg(long)]
        metric: String,
        #[arg(long, default_value_t = 40)]
        levels: usize,
        #[arg(long, default_value_t = 11)]
        degree: usize,
        /// Tolerance on the Penrose gap, profile flatness and σ₂ ≥ 3/2.
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// σ₂ and σ₁ at quasi-random interior points, as JSON.
    #[command(name = "sigma2-scan")]
    Sigma2Scan {
        #[arg(long)]
        metric: String,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// An s-interval given as `START,END`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct SRange(f64, f64);

impl std::fmt::Display for SRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{}", self.0, self.1)
    }
}

fn parse_range(text: &str) -> Result<SRange, String> {
    let (a, b) = text
        .split_once(',')
        .ok_or_else(|| format!("expected START,END, got {text:?}"))?;
    let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok(SRange(parse(a)?, parse(b)?))
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) | Error::Domain(_) => EXIT_USAGE,
            _ => EXIT_NUMERIC,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self {
            code: EXIT_NUMERIC,
            message: format!("i/o error: {e}"),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("SIGMA2_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::usage(format!(
            "SIGMA2_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::usage(format!("cannot configure worker pool: {e}")))
}

/// Resolves `--metric`: an existing file, inline JSON, or a preset name.
fn load_metric(arg: &str) -> CliResult<ConformalMetric> {
    let spec = if Path::new(arg).is_file() {
        let text = fs::read_to_string(arg)
            .map_err(|e| Failure::usage(format!("cannot read {arg}: {e}")))?;
        MetricSpec::from_json(&text)?
    } else if arg.trim_start().starts_with('{') {
        MetricSpec::from_json(arg)?
    } else {
        MetricSpec::preset(arg).ok_or_else(|| {
            Failure::usage(format!(
                "unknown metric {arg:?}: expected a JSON file, inline JSON, or one of {}",
                MetricSpec::PRESETS.join(", ")
            ))
        })?
    };
    let metric = spec.build()?;
    for w in &metric.warnings {
        eprintln!("warning: {w}");
    }
    Ok(metric)
}

fn write_output(
    out: Option<&Path>,
    body: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> CliResult<()> {
    match out {
        Some(path) => {
            let mut buf = Vec::new();
            body(&mut buf)?;
            fs::write(path, buf)?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure {
        code: EXIT_NUMERIC,
        message: format!("cannot serialize output: {e}"),
    })?;
    write_output(out, |w| writeln!(w, "{text}"))
}

fn check_degree(degree: usize) -> CliResult<()> {
    if degree < 3 {
        return Err(Failure::usage(format!(
            "--degree must be at least 3, got {degree}"
        )));
    }
    Ok(())
}

fn check_levels(levels: usize) -> CliResult<()> {
    if levels < 2 {
        return Err(Failure::usage(format!(
            "--levels must be at least 2, got {levels}"
        )));
    }
    Ok(())
}

fn cmd_chy(
    beta: Option<f64>,
    k: Option<f64>,
    s_range: SRange,
    tol: f64,
    out: Option<&Path>,
) -> CliResult<u8> {
    let k = match (beta, k) {
        (Some(b), _) => k_of_beta(b)?,
        (None, Some(k)) => k,
        (None, None) => return Err(Failure::usage("one of --beta or --k is required")),
    };
    if !(k >= 0.0) {
        return Err(Failure::usage(format!("--k must be >= 0, got {k}")));
    }
    if !(tol > 0.0) {
        return Err(Failure::usage(format!("--tol must be positive, got {tol}")));
    }
    let sol = solve_chy(k, s_range.0, s_range.1, tol)?;
    write_output(out, |w| sol.radial.write_csv(w))?;
    Ok(0)
}

fn cmd_profile(
    metric: &str,
    t_range: Option<(f64, f64)>,
    levels: usize,
    degree: usize,
    out: Option<&Path>,
) -> CliResult<u8> {
    check_levels(levels)?;
    check_degree(degree)?;
    let metric = load_metric(metric)?;
    let ts: Vec<f64> = match t_range {
        Some((lo, hi)) => {
            if !(lo < hi) {
                return Err(Failure::usage(format!(
                    "need --t-min < --t-max, got {lo} >= {hi}"
                )));
            }
            (0..levels)
                .map(|i| lo + (hi - lo) * i as f64 / (levels - 1) as f64)
                .collect()
        }
        None => verify_levels(&metric, levels)?,
    };
    let quad = SphericalQuadrature::product(degree)?;
    let profile = mass_profile(&metric, &ts, &quad)?;
    write_output(out, |w| profile.write_csv(w))?;
    if profile.rows.is_empty() {
        return Err(Failure {
            code: EXIT_NUMERIC,
            message: "every level failed; see the gap comments".into(),
        });
    }
    Ok(0)
}

fn cmd_verify(
    metric: &str,
    levels: usize,
    degree: usize,
    tol: f64,
    out: Option<&Path>,
) -> CliResult<u8> {
    check_levels(levels)?;
    check_degree(degree)?;
    if !(tol > 0.0) {
        return Err(Failure::usage(format!("--tol must be positive, got {tol}")));
    }
    let metric = load_metric(metric)?;
    let opts = VerifyOptions {
        levels,
        degree,
        tol,
        ..VerifyOptions::default()
    };
    let (report, _) = verify(&metric, &opts)?;
    write_json(out, &report)?;
    if report.contradicts_theorem() {
        eprintln!(
            "Penrose gap {:.6e} < -{tol:e} although sampled min sigma2 = {:.9} >= 3/2 - tol",
            report.penrose_gap, report.min_sigma2
        );
        return Ok(EXIT_CONTRADICTION);
    }
    Ok(0)
}

fn cmd_sigma2_scan(metric: &str, samples: usize, out: Option<&Path>) -> CliResult<u8> {
    if samples == 0 {
        return Err(Failure::usage("--samples must be positive"));
    }
    let metric = load_metric(metric)?;
    let scan = sigma2_scan(&metric, samples, SCAN_TOL).map_err(|e| Failure {
        code: EXIT_NUMERIC,
        message: e.to_string(),
    })?;
    write_json(out, &scan)?;
    Ok(0)
}

fn run(cli: Cli) -> CliResult<u8> {
    configure_threads()?;
    match cli.command {
        Command::Chy {
            beta,
            k,
            s_range,
            tol,
            out,
        } => cmd_chy(beta, k, s_range, tol, out.as_deref()),
        Command::Profile {
            metric,
            t_min,
            t_max,
            levels,
            degree,
            out,
        } => cmd_profile(&metric, t_min.zip(t_max), levels, degree, out.as_deref()),
        Command::Verify {
            metric,
            levels,
            degree,
            tol,
            out,
        } => cmd_verify(&metric, levels, degree, tol, out.as_deref()),
        Command::Sigma2Scan {
            metric,
            samples,
            out,
        } => cmd_sigma2_scan(&metric, samples, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
