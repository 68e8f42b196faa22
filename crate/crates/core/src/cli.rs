//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a verification check fails or a solver
//! does not converge, 2 on malformed input.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};
use log::{error, info};

use crate::alpha::{
    alpha_geodesic_samples, e_geodesic, m_geodesic, shoot_alpha_geodesic, AlphaGeodesicState,
};
use crate::barycenter::{barycenter, poisson_kernel_measure, HyperbolicModel};
use crate::error::{Error, Result};
use crate::fisher::{connect, ell_distance};
use crate::hyperbolic::BallPoint;
use crate::io::{
    read_isometry, read_measure, read_pair, to_json, trajectory_csv, write_text, BarycenterFile,
    MeasureFile, OdeReport,
};
use crate::measure::{make_grid, pushforward, set_parallel_quadrature, Measure};
use crate::verify::{run_suite, SuiteName};

/// Environment variable selecting the worker count for data-parallel quadrature.
pub const THREADS_ENV: &str = "INFOGEOM_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Connection {
    LeviCivita,
    Exponential,
    Mixture,
    Alpha(f64),
}

impl FromStr for Connection {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "lc" => Ok(Connection::LeviCivita),
            "e" => Ok(Connection::Exponential),
            "m" => Ok(Connection::Mixture),
            _ => {
                let v = s
                    .strip_prefix("alpha:")
                    .ok_or_else(|| format!("unknown connection '{s}' (expected lc, e, m or alpha:<v>)"))?;
                let a: f64 = v.parse().map_err(|_| format!("invalid alpha value '{v}'"))?;
                if !(-2.0..=2.0).contains(&a) {
                    return Err(format!("alpha must lie in [-2, 2], got {a}"));
                }
                Ok(Connection::Alpha(a))
            }
        }
    }
}

fn parse_tolerance(s: &str) -> std::result::Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected name=value, got '{s}'"))?;
    let v: f64 = value.parse().map_err(|_| format!("invalid tolerance value '{value}'"))?;
    Ok((name.to_string(), v))
}

fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("invalid coordinate '{c}'")))
        })
        .collect()
}

#[derive(Debug, Parser)]
#[command(name = "infogeom", version, about = "Fisher geometry of boundary measures and barycenters in hyperbolic space")]
pub struct Cli {
    /// Override a verification tolerance, e.g. `--tol fisher.arc_length=1e-7`.
    #[arg(long = "tol", value_parser = parse_tolerance, global = true)]
    pub tolerances: Vec<(String, f64)>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fisher distance between the two measures of a pair file.
    Distance { pair: PathBuf },
    /// Sample a geodesic between the two measures of a pair file.
    Geodesic {
        pair: PathBuf,
        #[arg(long, default_value = "lc")]
        connection: Connection,
        #[arg(long, default_value_t = 11)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
        /// Parameter length of the e-geodesic.
        #[arg(long, default_value_t = 1.0)]
        ell: f64,
        /// RK4 steps on [0, 1] for `alpha:<v>` connections.
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// ODE report path for `alpha:<v>`; defaults to the CSV path with a `.json` extension.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Barycenter of a measure.
    Barycenter {
        measure: PathBuf,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Busemann–Poisson measure of a point.
    Poisson {
        /// Comma-separated coordinates, e.g. `0.3,-0.1`.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        resolution: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Push a measure forward by the boundary map of an isometry.
    Pushforward {
        measure: PathBuf,
        isometry: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A parsed invocation.
#[derive(Debug)]
pub struct RunConfig {
    pub command: Command,
    pub tolerances: BTreeMap<String, f64>,
}

impl From<Cli> for RunConfig {
    fn from(cli: Cli) -> Self {
        Self {
            command: cli.command,
            tolerances: cli.tolerances.into_iter().collect(),
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_FAILURE
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn geodesic_rows(
    mu: &Measure,
    mu1: &Measure,
    connection: Connection,
    samples: usize,
    ell: f64,
    steps: usize,
) -> Result<(Vec<(f64, Measure)>, Option<OdeReport>)> {
    if samples < 2 {
        return Err(Error::InvalidArgument("--samples must be at least 2".into()));
    }
    let times = |end: f64| (0..samples).map(move |k| end * k as f64 / (samples - 1) as f64);
    match connection {
        Connection::LeviCivita => {
            let seg = connect(mu, mu1)?;
            let l = seg.length();
            let rows = times(l)
                .map(|t| Ok((t, seg.point(t.min(l))?)))
                .collect::<Result<_>>()?;
            Ok((rows, None))
        }
        Connection::Exponential => {
            if !(ell > 0.0) {
                return Err(Error::InvalidArgument("--ell must be positive".into()));
            }
            let rows = times(ell)
                .map(|t| Ok((t, e_geodesic(mu, mu1, t, ell)?)))
                .collect::<Result<_>>()?;
            Ok((rows, None))
        }
        Connection::Mixture => {
            let rows = times(1.0)
                .map(|t| Ok((t, m_geodesic(mu, mu1, t)?)))
                .collect::<Result<_>>()?;
            Ok((rows, None))
        }
        Connection::Alpha(alpha) => {
            let shot = shoot_alpha_geodesic(mu, mu1, alpha, steps)?;
            let state = AlphaGeodesicState::new(mu, &shot.initial_velocity, alpha)?;
            let states = alpha_geodesic_samples(&state, 1.0, shot.dt, samples)?;
            let rows = states
                .iter()
                .map(|s| Ok((s.t, s.measure()?)))
                .collect::<Result<_>>()?;
            let report = OdeReport {
                alpha,
                dt: shot.dt,
                steps: shot.steps,
                residual_sup: shot.endpoint_error,
            };
            Ok((rows, Some(report)))
        }
    }
}

/// Executes a parsed configuration and returns the process exit code.
pub fn run(config: RunConfig) -> i32 {
    match execute(config) {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(config: RunConfig) -> Result<i32> {
    let tolerances = config.tolerances;
    if !tolerances.is_empty() && !matches!(config.command, Command::Verify { .. }) {
        return Err(Error::InvalidArgument("--tol only applies to verify".into()));
    }
    match config.command {
        Command::Distance { pair } => {
            let (mu, mu1) = read_pair(&pair)?;
            println!("{}", ell_distance(&mu, &mu1)?);
        }
        Command::Geodesic {
            pair,
            connection,
            samples,
            out,
            ell,
            steps,
            report,
        } => {
            let (mu, mu1) = read_pair(&pair)?;
            let (rows, ode) = geodesic_rows(&mu, &mu1, connection, samples, ell, steps)?;
            let borrowed: Vec<(f64, &[f64])> = rows.iter().map(|(t, m)| (*t, m.density())).collect();
            write_text(&out, &trajectory_csv(&borrowed))?;
            if let Some(ode) = ode {
                let path = report.unwrap_or_else(|| out.with_extension("json"));
                write_text(&path, &to_json(&ode))?;
            }
        }
        Command::Barycenter { measure, dim, out } => {
            let mu = read_measure(&measure)?;
            if mu.grid().dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: mu.grid().dim(),
                });
            }
            let model = HyperbolicModel::real_hyperbolic(dim)?;
            let result = barycenter(&mu, &model)?;
            emit(out.as_deref(), &to_json(&BarycenterFile::from(&result)))?;
        }
        Command::Poisson {
            point,
            dim,
            resolution,
            out,
        } => {
            let point = parse_point(&point)?;
            if point.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: point.len(),
                });
            }
            let model = HyperbolicModel::real_hyperbolic(dim)?;
            let grid = make_grid(dim, resolution)?;
            let x = BallPoint::from_slice(&point)?;
            let mu = poisson_kernel_measure(&x, &model, &grid)?;
            write_text(&out, &to_json(&MeasureFile::from_measure(&mu)))?;
        }
        Command::Pushforward { measure, isometry, out } => {
            let mu = read_measure(&measure)?;
            let phi = read_isometry(&isometry)?;
            let pushed = pushforward(&phi, &mu)?;
            write_text(&out, &to_json(&MeasureFile::from_measure(&pushed)))?;
        }
        Command::Verify { suite, out } => {
            let name: SuiteName = suite.parse()?;
            let report = run_suite(name, &tolerances)?;
            emit(out.as_deref(), &to_json(&report))?;
            for c in report.checks.iter().filter(|c| c.passed == Some(false)) {
                error!("check {} failed: measured {} vs tolerance {}", c.id, c.measured, c.tolerance);
            }
            info!("suite {} passed: {}", report.suite, report.passed);
            return Ok(if report.passed { EXIT_OK } else { EXIT_FAILURE });
        }
    }
    Ok(EXIT_OK)
}

/// Applies the worker-count environment variable.
pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got '{value}'")))?;
    if n == 0 {
        return Err(Error::InvalidArgument(format!("{THREADS_ENV} must be positive")));
    }
    if n > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        set_parallel_quadrature(true);
    }
    Ok(())
}

/// Parses process arguments and runs. Clap reports its own usage errors
/// with exit code 2.
pub fn main_entry() -> i32 {
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_INPUT;
    }
    run(Cli::parse().into())
}
