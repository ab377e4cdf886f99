//! CSV tables: per-step training curves and per-cell metric rows.

use std::path::Path;

use anyhow::{Context, Result};
use cdr_core::training::TrainingTrace;

pub const TRACE_HEADER: [&str; 7] = ["step", "data_loss", "reg_loss", "total", "nrmse", "smoothed", "seconds"];
pub const REPORT_HEADER: [&str; 9] = ["method", "subject", "R", "mu", "step", "nrmse", "ssim", "ccc", "t1_nrmse"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per step. `nrmse` is blank without ground truth; `seconds` is
/// written only when `timing` is set so deterministic runs stay
/// byte-identical.
pub fn write_trace(path: &Path, trace: &TrainingTrace, timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(TRACE_HEADER)?;
    for i in 0..trace.len() {
        w.write_record([
            i.to_string(),
            trace.data_loss[i].to_string(),
            trace.reg_loss[i].to_string(),
            trace.total_loss[i].to_string(),
            opt(trace.nrmse.get(i).copied()),
            opt(trace.smoothed.get(i).copied()),
            if timing { trace.step_seconds[i].to_string() } else { String::new() },
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns of a trace CSV by header name; blanks read as NaN.
pub fn read_columns(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cols: Vec<(String, Vec<f64>)> = r.headers()?.iter().map(|h| (h.to_string(), Vec::new())).collect();
    for rec in r.records() {
        let rec = rec?;
        for (i, field) in rec.iter().enumerate() {
            let v = if field.is_empty() { f64::NAN } else { field.parse()? };
            cols[i].1.push(v);
        }
    }
    Ok(cols)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub method: String,
    pub subject: String,
    pub r: f64,
    pub mu: Option<f64>,
    pub step: usize,
    pub nrmse: f64,
    pub ssim: f64,
    pub ccc: f64,
    pub t1_nrmse: f64,
}

pub fn write_report(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(REPORT_HEADER)?;
    for row in rows {
        w.write_record([
            row.method.clone(),
            row.subject.clone(),
            row.r.to_string(),
            opt(row.mu),
            row.step.to_string(),
            row.nrmse.to_string(),
            row.ssim.to_string(),
            row.ccc.to_string(),
            row.t1_nrmse.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        rows.push(ReportRow {
            method: f(0).to_string(),
            subject: f(1).to_string(),
            r: f(2).parse()?,
            mu: if f(3).is_empty() { None } else { Some(f(3).parse()?) },
            step: f(4).parse()?,
            nrmse: f(5).parse()?,
            ssim: f(6).parse()?,
            ccc: f(7).parse()?,
            t1_nrmse: f(8).parse()?,
        });
    }
    Ok(rows)
}
