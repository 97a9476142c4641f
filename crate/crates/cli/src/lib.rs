//! `geoflow`: solve, verify and report on radial asymptotically flat
//! profiles.
//!
//! Exit status: 0 on success, 1 when a bound, hypothesis or verdict fails,
//! 2 when the input cannot be parsed or read.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::io;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use geoflow_core::capacity::{level_set_grid, solve_harmonic_with, HarmonicSolution};
use geoflow_core::monotone::{verify, VerifyReport};
use geoflow_core::profile::{CurvatureSample, ProfileSpec, WarpedProfile};
use geoflow_core::yamabe::{integrand_table, model_test_function, yamabe_quotient, QuotientReport, T_MAX};
use geoflow_core::Error;

use crate::config::{read_config, Command, Format, Overrides, RunConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_INPUT: u8 = 2;

#[derive(Debug)]
pub enum Failure {
    /// Unparseable or unreadable input.
    Input(String),
    /// The computation ran and something does not hold.
    Violation(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => EXIT_INPUT,
            Failure::Violation(_) => EXIT_VIOLATION,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "input error: {m}"),
            Failure::Violation(m) => write!(f, "violation: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Hypothesis(_) | Error::DivergentTail(_) => Failure::Violation(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "geoflow",
    version,
    about = "Harmonic level-set energies on radial asymptotically flat 3-manifolds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Per-level table `t,s,area,grad_w,W,B,C,H`.
    Solve(RunArgs),
    /// Monotonicity bounds, rigidity and B-monotonicity as JSON.
    Verify(RunArgs),
    /// Transported Yamabe quotient of the model test function.
    Yamabe(RunArgs),
    /// Everything above plus curvature and profile tables, into a directory.
    Report(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Profile spec, e.g. "schwarzschild m=2 r=1" or "table path.csv".
    #[arg(long)]
    pub profile: Option<String>,
    /// Config file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub t_samples: Option<usize>,
    /// Relative tolerance of the potential quadrature.
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Absolute slack below which a bound counts as violated.
    #[arg(long)]
    pub atol: Option<f64>,
    /// Slack band read as equality.
    #[arg(long)]
    pub rigidity_tol: Option<f64>,
    /// Output file (directory for `report`); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Fail when the scalar curvature is negative somewhere.
    #[arg(long)]
    pub require_nonneg_scalar: bool,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            profile: self.profile.clone(),
            require_nonneg_scalar: self.require_nonneg_scalar.then_some(true),
            t_max: self.t_max,
            t_samples: self.t_samples,
            rtol: self.rtol,
            atol: self.atol,
            rigidity_tol: self.rigidity_tol,
            out: self.out.clone(),
            format: self.format,
        }
    }

    pub fn resolve(&self, command: Command) -> Result<RunConfig, Failure> {
        let file = match &self.config {
            Some(path) => read_config(path)?,
            None => Overrides::default(),
        };
        self.overrides().over(file).into_config(command)
    }
}

impl Cli {
    pub fn config(&self) -> Result<RunConfig, Failure> {
        let (command, args) = match &self.command {
            Sub::Solve(a) => (Command::Solve, a),
            Sub::Verify(a) => (Command::Verify, a),
            Sub::Yamabe(a) => (Command::Yamabe, a),
            Sub::Report(a) => (Command::Report, a),
        };
        args.resolve(command)
    }
}

fn load(config: &RunConfig) -> Result<HarmonicSolution, Failure> {
    let spec: ProfileSpec = config.profile_spec.parse()?;
    let w = spec.build()?.requiring_nonneg_scalar(config.require_nonneg_scalar);
    Ok(solve_harmonic_with(&w, &config.solve_options())?)
}

fn verify_outcome(report: &VerifyReport) -> Result<(), Failure> {
    if report.passed {
        return Ok(());
    }
    let mut reasons: Vec<String> = Vec::new();
    let failed = report.failures().count();
    if let Some(b) = report.failures().next() {
        reasons.push(format!(
            "{failed} bound checks fail, first {:?} at t = {} (slack {:e})",
            b.kind, b.t, b.slack
        ));
    }
    if !report.b_monotone {
        reasons.push(format!("B decreases by {:e}", -report.min_b_increment));
    }
    let scalar = &report.profile.nonneg_scalar;
    if scalar.required && !scalar.passed {
        reasons.push(format!("R ρ² reaches {:e} at s = {}", scalar.min_scaled, scalar.at_s));
    }
    Err(Failure::Violation(reasons.join("; ")))
}

fn yamabe_outcome(report: &QuotientReport, atol: f64) -> Result<(), Failure> {
    if report.quotient_upper <= report.sigma2 + atol {
        Ok(())
    } else {
        Err(Failure::Violation(format!(
            "quotient upper bound {} exceeds sigma2 = {}",
            report.quotient_upper, report.sigma2
        )))
    }
}

fn solve_command(config: &RunConfig, h: &HarmonicSolution) -> Result<(), Failure> {
    let rows = level_set_grid(h, &config.grid())?;
    output::emit(config.out.as_deref(), |out| {
        match config.format.unwrap_or(Format::Csv) {
            Format::Csv => output::levels_csv(out, &rows),
            Format::Json => output::json(out, &rows),
        }
    })?;
    Ok(())
}

fn verify_command(config: &RunConfig, h: &HarmonicSolution) -> Result<(), Failure> {
    let report = verify(h, &config.grid(), &config.bound_tolerances())?;
    output::emit(config.out.as_deref(), |out| {
        match config.format.unwrap_or(Format::Json) {
            Format::Csv => output::bounds_csv(out, &report.bounds),
            Format::Json => output::json(out, &report),
        }
    })?;
    verify_outcome(&report)
}

fn yamabe_command(config: &RunConfig, h: &HarmonicSolution) -> Result<(), Failure> {
    let f = model_test_function()?;
    let report = yamabe_quotient(h, Some(&f))?;
    match config.format.unwrap_or(Format::Json) {
        Format::Json => output::emit(config.out.as_deref(), |out| output::json(out, &report))?,
        Format::Csv => {
            let rows = integrand_table(&f, h, T_MAX, config.t_samples)?;
            output::emit(config.out.as_deref(), |out| output::integrands_csv(out, &rows))?
        }
    }
    yamabe_outcome(&report, config.tolerances.atol)
}

/// Chart points for the reloadable `profile.csv`: dense near the boundary and
/// out to `1e8` length scales.
fn profile_table_grid(w: &WarpedProfile) -> Vec<f64> {
    w.chart_grid(400, 4000, 1e8)
}

fn report_command(config: &RunConfig, h: &HarmonicSolution) -> Result<(), Failure> {
    let dir = config.out.clone().unwrap_or_else(|| PathBuf::from("geoflow-report"));
    std::fs::create_dir_all(&dir)?;
    let file = |name: &str| dir.join(name);
    let w = h.profile();
    let grid = config.grid();

    let rows = level_set_grid(h, &grid)?;
    output::emit(Some(&file("levels.csv")), |out| output::levels_csv(out, &rows))?;

    let report = verify(h, &grid, &config.bound_tolerances())?;
    output::emit(Some(&file("verify.json")), |out| output::json(out, &report))?;

    let curvature: Vec<CurvatureSample> = w
        .chart_grid(64, 256, 1e4)
        .into_iter()
        .map(|x| w.curvature_at_chart(x))
        .collect::<Result<_, _>>()?;
    output::emit(Some(&file("curvature.csv")), |out| {
        output::curvature_csv(out, &curvature)
    })?;
    output::emit(Some(&file("profile.csv")), |out| {
        output::profile_csv(out, w, &profile_table_grid(w))
    })?;

    let f = model_test_function()?;
    let yamabe = match yamabe_quotient(h, Some(&f)) {
        Ok(q) => {
            let integrands = integrand_table(&f, h, T_MAX, config.t_samples)?;
            output::emit(Some(&file("integrands.csv")), |out| {
                output::integrands_csv(out, &integrands)
            })?;
            output::emit(Some(&file("yamabe.json")), |out| output::json(out, &q))?;
            Some(q)
        }
        Err(Error::Hypothesis(reason)) => {
            let skipped = serde_json::json!({ "skipped": reason });
            output::emit(Some(&file("yamabe.json")), |out| output::json(out, &skipped))?;
            None
        }
        Err(e) => return Err(e.into()),
    };

    verify_outcome(&report)?;
    match yamabe {
        Some(q) => yamabe_outcome(&q, config.tolerances.atol),
        None => Ok(()),
    }
}

pub fn execute(config: &RunConfig) -> Result<(), Failure> {
    let h = load(config)?;
    match config.command {
        Command::Solve => solve_command(config, &h),
        Command::Verify => verify_command(config, &h),
        Command::Yamabe => yamabe_command(config, &h),
        Command::Report => report_command(config, &h),
    }
}

/// Parses `args` (program name first), runs, and returns the exit status.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let outcome = cli.config().and_then(|config| {
        execute(&config)?;
        Ok(config)
    });
    match outcome {
        Ok(config) => {
            if let Some(path) = &config.out {
                eprintln!("geoflow {}: wrote {}", config.command, path.display());
            }
            EXIT_OK
        }
        Err(failure) => {
            eprintln!("geoflow: {failure}");
            failure.exit_code()
        }
    }
}
