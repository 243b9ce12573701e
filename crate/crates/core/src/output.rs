//! CSV writers for trajectories, seed aggregates and ODE comparisons.
//!
//! Numbers are written with 17 significant digits (`{:.16e}`), LF line
//! endings, and `NaN` for missing values.

use std::io::Write;

use crate::error::{Error, Result};
use crate::sim::{column_names, AggregateReport, ComparePoint, Record};

/// How the `t` column is printed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeFormat {
    /// Integer step counts.
    Step,
    /// Continuous time.
    Real,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn time(t: f64, fmt: TimeFormat) -> String {
    match fmt {
        TimeFormat::Step => format!("{}", t as u64),
        TimeFormat::Real => num(t),
    }
}

fn io(e: impl std::fmt::Display) -> Error {
    Error::Internal(format!("write failed: {e}"))
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

/// Writes one trajectory:
/// `t,f_*,g_*,uhat1_*,uhat2_*,payoff1,payoff2,exploitability,dist_saddle_sup`.
pub fn write_trajectory<W: Write>(out: W, records: &[Record], fmt: TimeFormat) -> Result<()> {
    let first = records.first().ok_or_else(|| Error::Internal("empty trajectory".into()))?;
    let mut w = writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(column_names(first.f.len(), first.g.len()));
    w.write_record(&header).map_err(io)?;
    for r in records {
        let mut row = vec![time(r.t, fmt)];
        row.extend(r.values().into_iter().map(num));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// `t, mean_<col>, std_<col>, ...` for every trajectory column.
pub fn write_aggregate<W: Write>(out: W, report: &AggregateReport, fmt: TimeFormat) -> Result<()> {
    let mut w = writer(out);
    let mut header = vec!["t".to_string()];
    for c in &report.columns {
        header.push(format!("mean_{c}"));
        header.push(format!("std_{c}"));
    }
    w.write_record(&header).map_err(io)?;
    for (i, &t) in report.times.iter().enumerate() {
        let mut row = vec![time(t, fmt)];
        for j in 0..report.columns.len() {
            row.push(num(report.mean[i][j]));
            row.push(num(report.std[i][j]));
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// `t,tau,distance`.
pub fn write_comparison<W: Write>(out: W, points: &[ComparePoint]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["t", "tau", "distance"]).map_err(io)?;
    for p in points {
        w.write_record([time(p.t, TimeFormat::Step), num(p.tau), num(p.distance)]).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Per-seed final values: `seed,<col>...`.
pub fn write_finals<W: Write>(out: W, report: &AggregateReport) -> Result<()> {
    let mut w = writer(out);
    let mut header = vec!["seed".to_string()];
    header.extend(report.columns.iter().cloned());
    w.write_record(&header).map_err(io)?;
    for (seed, r) in report.seeds.iter().zip(&report.finals) {
        let mut row = vec![seed.to_string()];
        row.extend(r.values().into_iter().map(num));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(io)
}
