//! Run configuration: flags layered over an optional config file.
//!
//! Config files are flat `key = value` lines grouped under `[section]`
//! headers; `#` and `;` start comments.
//!
//! ```text
//! [profile]
//! spec = schwarzschild m=2 r=1
//! require_nonneg_scalar = true
//!
//! [grid]
//! t_max = 10
//! t_samples = 512
//!
//! [tolerances]
//! rtol = 1e-10
//! atol = 1e-8
//! rigidity_tol = 1e-6
//!
//! [output]
//! path = levels.csv
//! format = csv
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use geoflow_core::capacity::{SolveOptions, TGrid};
use geoflow_core::monotone::Tolerances;

use crate::Failure;

pub const MIN_T_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Verify,
    Yamabe,
    Report,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Yamabe => "yamabe",
            Command::Report => "report",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunTolerances {
    pub rtol: f64,
    pub atol: f64,
    pub rigidity_tol: f64,
}

impl Default for RunTolerances {
    fn default() -> Self {
        let t = Tolerances::default();
        RunTolerances {
            rtol: SolveOptions::default().rtol,
            atol: t.assert_tol,
            rigidity_tol: t.rigidity_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub profile_spec: String,
    pub require_nonneg_scalar: bool,
    pub t_max: f64,
    pub t_samples: usize,
    pub tolerances: RunTolerances,
    pub out: Option<PathBuf>,
    /// `None` picks the command's natural format.
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn grid(&self) -> TGrid {
        TGrid::uniform(self.t_max, self.t_samples).expect("grid validated with the config")
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            rtol: self.tolerances.rtol,
        }
    }

    pub fn bound_tolerances(&self) -> Tolerances {
        Tolerances {
            rigidity_tol: self.tolerances.rigidity_tol,
            assert_tol: self.tolerances.atol,
        }
    }
}

/// Settings that may come from flags or from a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub profile: Option<String>,
    pub require_nonneg_scalar: Option<bool>,
    pub t_max: Option<f64>,
    pub t_samples: Option<usize>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub rigidity_tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Overrides {
    /// `self` wins where set.
    pub fn over(self, base: Overrides) -> Overrides {
        Overrides {
            profile: self.profile.or(base.profile),
            require_nonneg_scalar: self.require_nonneg_scalar.or(base.require_nonneg_scalar),
            t_max: self.t_max.or(base.t_max),
            t_samples: self.t_samples.or(base.t_samples),
            rtol: self.rtol.or(base.rtol),
            atol: self.atol.or(base.atol),
            rigidity_tol: self.rigidity_tol.or(base.rigidity_tol),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
        }
    }

    pub fn into_config(self, command: Command) -> Result<RunConfig, Failure> {
        let defaults = RunTolerances::default();
        let config = RunConfig {
            command,
            profile_spec: self
                .profile
                .ok_or_else(|| Failure::Input("no profile given (use --profile or a [profile] spec)".into()))?,
            require_nonneg_scalar: self.require_nonneg_scalar.unwrap_or(false),
            t_max: self.t_max.unwrap_or(10.0),
            t_samples: self.t_samples.unwrap_or(512),
            tolerances: RunTolerances {
                rtol: self.rtol.unwrap_or(defaults.rtol),
                atol: self.atol.unwrap_or(defaults.atol),
                rigidity_tol: self.rigidity_tol.unwrap_or(defaults.rigidity_tol),
            },
            out: self.out,
            format: self.format,
        };
        if !(config.t_max > 0.0 && config.t_max.is_finite()) {
            return Err(Failure::Input(format!("t_max must be positive, got {}", config.t_max)));
        }
        if config.t_samples < MIN_T_SAMPLES {
            return Err(Failure::Input(format!(
                "t_samples must be at least {MIN_T_SAMPLES}, got {}",
                config.t_samples
            )));
        }
        let t = config.tolerances;
        for (name, value) in [("rtol", t.rtol), ("atol", t.atol), ("rigidity_tol", t.rigidity_tol)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Failure::Input(format!("{name} must be positive, got {value}")));
            }
        }
        Ok(config)
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str, line: usize) -> Result<T, Failure>
where
    T::Err: fmt::Display,
{
    raw.parse()
        .map_err(|e| Failure::Input(format!("line {line}: bad value for `{key}`: {e}")))
}

fn parse_bool(key: &str, raw: &str, line: usize) -> Result<bool, Failure> {
    match raw {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Failure::Input(format!("line {line}: `{key}` must be true or false"))),
    }
}

pub fn parse_config(text: &str) -> Result<Overrides, Failure> {
    let mut seen = BTreeMap::new();
    let mut section = String::new();
    let mut out = Overrides::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split(['#', ';']).next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Failure::Input(format!("line {line}: expected `key = value`")))?;
        let (key, value) = (key.trim(), value.trim());
        let full = format!("{section}.{key}");
        if seen.insert(full.clone(), line).is_some() {
            return Err(Failure::Input(format!("line {line}: `{full}` set twice")));
        }
        match full.as_str() {
            "profile.spec" => out.profile = Some(value.to_string()),
            "profile.require_nonneg_scalar" => out.require_nonneg_scalar = Some(parse_bool(&full, value, line)?),
            "grid.t_max" => out.t_max = Some(parse_value(&full, value, line)?),
            "grid.t_samples" => out.t_samples = Some(parse_value(&full, value, line)?),
            "tolerances.rtol" => out.rtol = Some(parse_value(&full, value, line)?),
            "tolerances.atol" => out.atol = Some(parse_value(&full, value, line)?),
            "tolerances.rigidity_tol" => out.rigidity_tol = Some(parse_value(&full, value, line)?),
            "output.path" => out.out = Some(PathBuf::from(value)),
            "output.format" => out.format = Some(parse_value(&full, value, line)?),
            _ => return Err(Failure::Input(format!("line {line}: unknown key `{full}`"))),
        }
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<Overrides, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        Failure::Input(msg) => Failure::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}
