//! CSV and JSON writers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use geoflow_core::capacity::LevelSetData;
use geoflow_core::monotone::BoundCheck;
use geoflow_core::profile::{CurvatureSample, WarpedProfile};
use geoflow_core::yamabe::IntegrandRow;
use serde_json::Value;

pub const LEVELS_HEADER: &str = "# geoflow-harmonic v1";
pub const LEVEL_COLUMNS: [&str; 8] = ["t", "s", "area", "grad_w", "W", "B", "C", "H"];

fn table<W: Write>(
    mut out: W,
    comment: Option<&str>,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> io::Result<()> {
    if let Some(c) = comment {
        writeln!(out, "{c}")?;
    }
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(&row)?;
    }
    writer.flush()
}

fn cells<const N: usize>(values: [f64; N]) -> Vec<String> {
    values.iter().map(f64::to_string).collect()
}

pub fn levels_csv<W: Write>(out: W, rows: &[LevelSetData]) -> io::Result<()> {
    table(
        out,
        Some(LEVELS_HEADER),
        &LEVEL_COLUMNS,
        rows.iter()
            .map(|d| cells([d.t, d.s, d.area, d.grad_w, d.w, d.b, d.c, d.h])),
    )
}

pub fn bounds_csv<W: Write>(out: W, bounds: &[BoundCheck]) -> io::Result<()> {
    table(
        out,
        None,
        &["kind", "t", "lhs", "rhs", "slack", "verdict"],
        bounds.iter().map(|b| {
            let mut row = vec![json_label(&b.kind)];
            row.extend(cells([b.t, b.lhs, b.rhs, b.slack]));
            row.push(json_label(&b.verdict));
            row
        }),
    )
}

fn json_label<T: serde::Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

pub fn integrands_csv<W: Write>(out: W, rows: &[IntegrandRow]) -> io::Result<()> {
    table(
        out,
        None,
        &["t", "f", "f_prime", "num_integrand", "den_integrand"],
        rows.iter()
            .map(|r| cells([r.t, r.f, r.f_prime, r.num_integrand, r.den_integrand])),
    )
}

pub fn curvature_csv<W: Write>(out: W, rows: &[CurvatureSample]) -> io::Result<()> {
    table(
        out,
        None,
        &["s", "R", "H", "area", "willmore"],
        rows.iter().map(|c| cells([c.s, c.scalar, c.mean, c.area, c.willmore])),
    )
}

/// `s,rho` samples in the table grammar, dense enough to reload the profile.
pub fn profile_csv<W: Write>(out: W, w: &WarpedProfile, xs: &[f64]) -> io::Result<()> {
    let rows: Vec<Vec<String>> = xs
        .iter()
        .map(|&x| {
            let s = w.arclength_at(x).map_err(io::Error::other)?;
            Ok(cells([s, w.sample_chart(x).rho]))
        })
        .collect::<io::Result<_>>()?;
    table(out, None, &["s", "rho"], rows.into_iter())
}

pub fn json<W: Write, T: serde::Serialize>(mut out: W, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)
}

/// Writes to `path`, or to stdout when `None`.
pub fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> io::Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let mut file = BufWriter::new(File::create(p)?);
            write(&mut file)?;
            file.flush()
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()
        }
    }
}
