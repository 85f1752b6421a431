//! The `polyform` command line: `analyze`, `simulate`, `sweep` and `verify`.
//!
//! Every command is a thin layer over the library; [`run`] parses arguments,
//! dispatches and returns the process exit code, writing to the supplied
//! streams so it can be driven from tests.

pub mod output;
pub mod scenario;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::control::ControlLaw;
use crate::geometry::ShapeSpec;
use crate::simulator::{random_positions, run, Initial, Integrator, Method, Scenario};
use crate::stability::{classify, regular_polygon_angle, Verdict, MARGINAL_TOLERANCE};
use crate::acceptance::{self, Fixtures};

use output::{write_csv, write_svg, RunReport};
use scenario::{load_scenario, LoadError};

/// Process exit codes, following the sysexits conventions where they apply.
pub mod exit {
    pub const OK: i32 = 0;
    /// `simulate`: the run did not reach tolerance. `verify`: a criterion failed.
    pub const FAILURE: i32 = 1;
    /// `analyze`: the smallest real part is within the marginal band.
    pub const MARGINAL: i32 = 2;
    /// `analyze`: unstable. `simulate`: the state diverged.
    pub const UNSTABLE: i32 = 3;
    pub const USAGE: i32 = 64;
    pub const DATA_ERR: i32 = 65;
    pub const NO_INPUT: i32 = 66;
    pub const IO_ERR: i32 = 74;
}

const EXIT_CODES: &str = "\
Exit codes:
  0   success (analyze: stable; simulate: converged; verify: all criteria pass)
  1   simulate: not converged; verify: a criterion failed
  2   analyze: marginal
  3   analyze: unstable; simulate: diverged
  64  usage error (bad flags or malformed values)
  65  scenario file is invalid
  66  scenario or fixture file cannot be read
  74  output cannot be written";

#[derive(Debug, Parser)]
#[command(name = "polyform", version, about = "Polygonal formation control over daisy chains", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectrum and stability verdict of the rotational error dynamics.
    Analyze(AnalyzeArgs),
    /// Run a scenario file; writes <out>.csv, <out>.report.json and <out>.svg.
    Simulate(SimulateArgs),
    /// Spectral verdict and a short simulation over a grid of (n, θ*).
    Sweep(SweepArgs),
    /// Run the acceptance criteria with per-criterion timing.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Number of agents.
    #[arg(long)]
    n: usize,
    /// Turn angles: `regular`, one value for every angle, or n−2 comma-separated values.
    #[arg(long, allow_hyphen_values = true)]
    theta: String,
    /// n−1 comma-separated side ratios (default: all ones).
    #[arg(long)]
    ratios: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Scenario file (JSON).
    scenario: PathBuf,
    /// Output prefix (default: the scenario path without its extension).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the integrator step.
    #[arg(long)]
    dt: Option<f64>,
    /// Override the final time.
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Override the seed of a random initial placement.
    #[arg(long)]
    seed: Option<u64>,
    /// Convergence tolerance on ‖e_θ‖ and |e_d|.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Agent counts: a range `a-b` or a comma-separated list.
    #[arg(long, default_value = "3-12")]
    n: String,
    /// Turn angles (comma-separated); default is 25 angles 4πk/51, k = −12..=12.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// CSV destination (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.02)]
    dt: f64,
    #[arg(long = "t-end", default_value_t = 40.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// A cell counts as converged if ‖e_θ‖ falls below tol·‖e_θ(0)‖ or is
    /// still decaying at the end of the run.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Directory holding `hexagon.json` (default: the bundled copy).
    #[arg(long)]
    fixtures: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    exit::OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    exit::USAGE
                }
            };
        }
    };
    match cli.command {
        Command::Analyze(a) => analyze(a, out, err),
        Command::Simulate(a) => simulate(a, out, err),
        Command::Sweep(a) => sweep(a, out, err),
        Command::Verify(a) => verify(a, out, err),
    }
}

/// `regular`, a single value, or a comma-separated list of `n − 2` values.
pub fn parse_theta(s: &str, n: usize) -> Result<Vec<f64>, String> {
    if n < 3 {
        return Err(format!("at least 3 agents required, got {n}"));
    }
    let s = s.trim();
    if s == "regular" {
        return Ok(vec![regular_polygon_angle(n); n - 2]);
    }
    let values = parse_list(s)?;
    match values.len() {
        1 => Ok(vec![values[0]; n - 2]),
        m if m == n - 2 => Ok(values),
        m => Err(format!("expected 1 or {} turn angles, got {m}", n - 2)),
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|v| {
            let v = v.trim();
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("`{v}` is not a finite number"))
        })
        .collect()
}

/// `a-b` (inclusive) or a comma-separated list of agent counts.
pub fn parse_range(s: &str) -> Result<Vec<usize>, String> {
    let bad = |v: &str| format!("`{v}` is not an agent count");
    let values: Vec<usize> = if let Some((a, b)) = s.split_once('-') {
        let a: usize = a.trim().parse().map_err(|_| bad(a))?;
        let b: usize = b.trim().parse().map_err(|_| bad(b))?;
        if a > b {
            return Err(format!("empty range {a}-{b}"));
        }
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|v| v.trim().parse().map_err(|_| bad(v)))
            .collect::<Result<_, _>>()?
    };
    if let Some(&n) = values.iter().find(|&&n| n < 3) {
        return Err(format!("at least 3 agents required, got {n}"));
    }
    Ok(values)
}

/// `θ_k = 4πk/51`, `k = −12..=12`: 25 angles symmetric about and including
/// 0. The spacing keeps every grid point off the bounds `2π/(n−1)`, since
/// `25.5/(n−1)` is never an integer.
pub fn default_sweep_angles() -> Vec<f64> {
    (-12..=12).map(|k| 4.0 * std::f64::consts::PI * k as f64 / 51.0).collect()
}

fn analyze(a: AnalyzeArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let usage = |err: &mut dyn Write, msg: String| {
        let _ = writeln!(err, "error: {msg}");
        exit::USAGE
    };
    let theta = match parse_theta(&a.theta, a.n) {
        Ok(t) => t,
        Err(m) => return usage(err, format!("--theta: {m}")),
    };
    let ratios = match &a.ratios {
        Some(r) => match parse_list(r) {
            Ok(r) => r,
            Err(m) => return usage(err, format!("--ratios: {m}")),
        },
        None => vec![1.0; a.n - 1],
    };
    let report = match ShapeSpec::new(theta, ratios, None).and_then(|s| classify(&s)) {
        Ok(r) => r,
        Err(e) => return usage(err, e.to_string()),
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    if writeln!(out, "{json}").is_err() {
        return exit::IO_ERR;
    }
    match report.verdict {
        Verdict::Stable => exit::OK,
        Verdict::Marginal => exit::MARGINAL,
        Verdict::Unstable => exit::UNSTABLE,
    }
}

fn default_prefix(path: &Path) -> PathBuf {
    path.with_extension("")
}

fn write_file(path: &Path, f: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> std::io::Result<()>) -> std::io::Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    f(&mut w)?;
    w.flush()
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn simulate(a: SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut scenario = match load_scenario(&a.scenario) {
        Ok(s) => s,
        Err(e @ LoadError::Read { .. }) => {
            let _ = writeln!(err, "error: {e}");
            return exit::NO_INPUT;
        }
        Err(e @ LoadError::Invalid { .. }) => {
            let _ = writeln!(err, "error: {e}");
            return exit::DATA_ERR;
        }
    };
    if !(a.tol.is_finite() && a.tol > 0.0) {
        let _ = writeln!(err, "error: --tol must be positive");
        return exit::USAGE;
    }
    if a.dt.is_some() || a.t_end.is_some() {
        let base = scenario.integrator();
        let integrator = Integrator {
            dt: a.dt.unwrap_or(base.dt),
            t_end: a.t_end.unwrap_or(base.t_end),
            method: base.method,
        };
        scenario = match scenario.with_integrator(integrator) {
            Ok(s) => s,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return exit::USAGE;
            }
        };
    }
    if let Some(seed) = a.seed {
        scenario = scenario.with_seed(seed);
    }

    let traj = match run(&scenario) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit::DATA_ERR;
        }
    };
    let report = RunReport::new(&traj, &scenario.final_law(), a.tol);

    let prefix = a.out.unwrap_or_else(|| default_prefix(&a.scenario));
    let csv = with_suffix(&prefix, ".csv");
    let json = with_suffix(&prefix, ".report.json");
    let svg = with_suffix(&prefix, ".svg");
    let written = write_file(&csv, |w| write_csv(&traj, w))
        .and_then(|_| write_file(&json, |w| writeln!(w, "{}", report.to_json())))
        .and_then(|_| write_file(&svg, |w| write_svg(&traj, w)));
    if let Err(e) = written {
        let _ = writeln!(err, "error: cannot write output under {}: {e}", prefix.display());
        return exit::IO_ERR;
    }

    let status = if report.diverged {
        format!("diverged at t = {}", report.diverged_at.unwrap_or(f64::NAN))
    } else if let Some(t) = report.convergence_time {
        format!("converged at t = {t}")
    } else {
        format!("not converged (‖e_θ‖ = {:.3e} at t = {})", report.e_theta_final, report.final_time)
    };
    let _ = writeln!(out, "{status}; wrote {}, {}, {}", csv.display(), json.display(), svg.display());
    if report.diverged {
        exit::UNSTABLE
    } else if report.converged {
        exit::OK
    } else {
        exit::FAILURE
    }
}

/// One cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub theta: f64,
    pub min_real: f64,
    pub verdict: Verdict,
    pub empirical_converged: bool,
}

/// Settings for the short simulation behind `empirical_converged`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    pub tol: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            dt: 0.02,
            t_end: 40.0,
            seed: 1,
            tol: 1e-6,
        }
    }
}

/// Spectral verdict plus a polygon-mode run from random positions.
///
/// The run counts as converged when it stays finite and `‖e_θ‖` either
/// drops below `tol·‖e_θ(0)‖` or is still shrinking over the last quarter
/// of the run; the second test covers slowly decaying cells near the
/// bound, the first covers fast cells whose error has reached round-off.
pub fn sweep_cell(n: usize, theta: f64, settings: &SweepSettings) -> crate::Result<SweepRow> {
    let spec = ShapeSpec::uniform(n, theta)?;
    let report = classify(&spec)?;
    let law = ControlLaw::polygon(spec)?;
    let seed = settings.seed ^ ((n as u64) << 32) ^ theta.to_bits().rotate_left(17);
    let s = Scenario::new(
        Initial::Positions(random_positions(n, seed, [-1.0, -1.0, 1.0, 1.0])),
        law,
        Integrator {
            dt: settings.dt,
            t_end: settings.t_end,
            method: Method::Rk4,
        },
        vec![],
        1,
    )?;
    let traj = run(&s)?;
    let e = &traj.e_theta_norm;
    let last = e.len() - 1;
    let q = traj.index_at(0.75 * settings.t_end).unwrap_or(0);
    let empirical = traj.diverged.is_none()
        && e[last].is_finite()
        && (e[last] <= settings.tol * e[0] || e[last] < e[q]);
    Ok(SweepRow {
        n,
        theta,
        min_real: report.min_real,
        verdict: report.verdict,
        empirical_converged: empirical,
    })
}

/// Evaluates every `(n, θ)` cell, in parallel unless `threads == Some(0)`,
/// and returns the rows sorted by `(n, θ)`.
pub fn sweep_grid(ns: &[usize], thetas: &[f64], settings: &SweepSettings, threads: Option<usize>) -> crate::Result<Vec<SweepRow>> {
    let cells: Vec<(usize, f64)> = ns.iter().flat_map(|&n| thetas.iter().map(move |&t| (n, t))).collect();
    let mut rows: Vec<SweepRow> = match threads {
        Some(0) => cells.iter().map(|&(n, t)| sweep_cell(n, t, settings)).collect::<crate::Result<_>>()?,
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| crate::FormationError::invalid("POLYFORM_THREADS", e.to_string()))?;
            pool.install(|| cells.par_iter().map(|&(n, t)| sweep_cell(n, t, settings)).collect::<crate::Result<_>>())?
        }
        None => cells.par_iter().map(|&(n, t)| sweep_cell(n, t, settings)).collect::<crate::Result<_>>()?,
    };
    rows.sort_by(|a, b| a.n.cmp(&b.n).then(a.theta.total_cmp(&b.theta)));
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "n,theta,min_real,verdict,empirical_converged")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{},{}",
            r.n,
            r.theta,
            r.min_real,
            r.verdict.as_str(),
            r.empirical_converged
        )?;
    }
    w.flush()
}

fn threads_from_env() -> Result<Option<usize>, String> {
    match std::env::var("POLYFORM_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| format!("POLYFORM_THREADS=`{v}` is not a thread count")),
        Err(_) => Ok(None),
    }
}

fn sweep(a: SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let usage = |err: &mut dyn Write, msg: String| {
        let _ = writeln!(err, "error: {msg}");
        exit::USAGE
    };
    let ns = match parse_range(&a.n) {
        Ok(v) => v,
        Err(m) => return usage(err, format!("--n: {m}")),
    };
    let thetas = match &a.theta {
        Some(t) => match parse_list(t) {
            Ok(v) => v,
            Err(m) => return usage(err, format!("--theta: {m}")),
        },
        None => default_sweep_angles(),
    };
    let settings = SweepSettings {
        dt: a.dt,
        t_end: a.t_end,
        seed: a.seed,
        tol: a.tol,
    };
    let threads = match threads_from_env() {
        Ok(t) => t,
        Err(m) => return usage(err, m),
    };
    let rows = match sweep_grid(&ns, &thetas, &settings, threads) {
        Ok(r) => r,
        Err(e) => return usage(err, e.to_string()),
    };
    let written = match &a.out {
        Some(path) => write_file(path, |w| write_sweep_csv(&rows, w)),
        None => write_sweep_csv(&rows, &mut *out),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: cannot write sweep output: {e}");
        return exit::IO_ERR;
    }
    let disagree = rows
        .iter()
        .filter(|r| r.min_real.abs() > MARGINAL_TOLERANCE && (r.verdict == Verdict::Stable) != r.empirical_converged)
        .count();
    if disagree > 0 {
        let _ = writeln!(err, "warning: {disagree} cells where simulation and spectrum disagree");
    }
    exit::OK
}

fn verify(a: VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let fixtures = match &a.fixtures {
        Some(dir) => match Fixtures::from_dir(dir) {
            Ok(f) => f,
            Err(e @ LoadError::Read { .. }) => {
                let _ = writeln!(err, "error: {e}");
                return exit::NO_INPUT;
            }
            Err(e @ LoadError::Invalid { .. }) => {
                let _ = writeln!(err, "error: {e}");
                return exit::DATA_ERR;
            }
        },
        None => Fixtures::bundled(),
    };
    let mut failed = 0;
    let total = std::time::Instant::now();
    for c in &acceptance::CRITERIA {
        let outcome = acceptance::run_criterion(c.id, &fixtures);
        if !outcome.passed {
            failed += 1;
        }
        let _ = writeln!(out, "{outcome}");
    }
    let _ = writeln!(
        out,
        "{} of {} criteria passed in {:.2} s",
        acceptance::CRITERIA.len() - failed,
        acceptance::CRITERIA.len(),
        total.elapsed().as_secs_f64()
    );
    if failed == 0 {
        exit::OK
    } else {
        exit::FAILURE
    }
}
