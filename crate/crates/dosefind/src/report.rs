//! Batch metrics as CSV, JSON or a plain-text table.
//!
//! CSV columns are numbered by dose from 1. JSON keeps per-dose arrays in
//! dose order. Floats are written in shortest round-trip form, so CSV and
//! JSON parse back to identical rows.

use std::fmt::Write as _;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use dosefind_core::metrics::BatchMetrics;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub design: String,
    pub scenario: String,
    #[serde(flatten)]
    pub metrics: BatchMetrics,
}

fn doses_of(rows: &[Row]) -> anyhow::Result<usize> {
    let k = rows.first().map_or(0, |r| r.metrics.rec_pct.len());
    if rows.iter().any(|r| r.metrics.rec_pct.len() != k) {
        bail!("rows with different dose counts cannot share a CSV header");
    }
    Ok(k)
}

fn header(k: usize) -> Vec<String> {
    let mut h = vec!["design".to_string(), "scenario".into(), "replications".into()];
    h.extend((1..=k).map(|i| format!("rec_{i}")));
    h.push("rec_none".into());
    h.extend((1..=k).map(|i| format!("alloc_{i}")));
    h.extend((1..=k).map(|i| format!("alloc_sd_{i}")));
    h.extend(["estop".into(), "mean_patients".into(), "low_acceptance_fits".into()]);
    h
}

pub fn to_csv(rows: &[Row]) -> anyhow::Result<String> {
    let k = doses_of(rows)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header(k))?;
    for r in rows {
        let m = &r.metrics;
        let mut rec = vec![r.design.clone(), r.scenario.clone(), m.replications.to_string()];
        rec.extend(m.rec_pct.iter().map(f64::to_string));
        rec.push(m.rec_none_pct.to_string());
        rec.extend(m.alloc_pct_mean.iter().map(f64::to_string));
        rec.extend(m.alloc_pct_std.iter().map(f64::to_string));
        rec.extend([m.estop_pct.to_string(), m.mean_patients.to_string(), m.low_acceptance_fits.to_string()]);
        w.write_record(rec)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize) -> anyhow::Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    let s = rec.get(i).ok_or_else(|| anyhow!("missing column {i}"))?;
    s.parse().with_context(|| format!("column {i}: `{s}`"))
}

pub fn from_csv(text: &str) -> anyhow::Result<Vec<Row>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let width = r.headers()?.len();
    if width < 7 || (width - 7) % 3 != 0 {
        bail!("unexpected CSV header width {width}");
    }
    let k = (width - 7) / 3;
    if r.headers()?.iter().ne(header(k).iter().map(String::as_str)) {
        bail!("unexpected CSV header");
    }
    r.records()
        .map(|rec| {
            let rec = rec?;
            let vec = |start: usize| (start..start + k).map(|i| field(&rec, i)).collect::<anyhow::Result<Vec<f64>>>();
            Ok(Row {
                design: field(&rec, 0)?,
                scenario: field(&rec, 1)?,
                metrics: BatchMetrics {
                    replications: field(&rec, 2)?,
                    rec_pct: vec(3)?,
                    rec_none_pct: field(&rec, 3 + k)?,
                    alloc_pct_mean: vec(4 + k)?,
                    alloc_pct_std: vec(4 + 2 * k)?,
                    estop_pct: field(&rec, 4 + 3 * k)?,
                    mean_patients: field(&rec, 5 + 3 * k)?,
                    low_acceptance_fits: field(&rec, 6 + 3 * k)?,
                },
            })
        })
        .collect()
}

pub fn to_json(rows: &[Row]) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(rows)? + "\n")
}

pub fn from_json(text: &str) -> anyhow::Result<Vec<Row>> {
    Ok(serde_json::from_str(text)?)
}

/// Percentages with one decimal, allocation sd in parentheses.
pub fn to_table(rows: &[Row]) -> String {
    let mut out = String::new();
    let mut last_scenario = None;
    for r in rows {
        let m = &r.metrics;
        if last_scenario != Some(&r.scenario) {
            let k = m.rec_pct.len();
            let _ = writeln!(out, "\n{} ({} replications)", r.scenario, m.replications);
            let _ = write!(out, "{:<10} {:<6}", "design", "");
            for i in 1..=k {
                let _ = write!(out, " {:>12}", format!("dose {i}"));
            }
            let _ = writeln!(out, " {:>7} {:>7}", "none", "E-stop");
            last_scenario = Some(&r.scenario);
        }
        let _ = write!(out, "{:<10} {:<6}", r.design, "rec");
        for p in &m.rec_pct {
            let _ = write!(out, " {:>12.1}", p);
        }
        let _ = writeln!(out, " {:>7.1} {:>7.1}", m.rec_none_pct, m.estop_pct);
        let _ = write!(out, "{:<10} {:<6}", "", "alloc");
        for (a, s) in m.alloc_pct_mean.iter().zip(&m.alloc_pct_std) {
            let _ = write!(out, " {:>12}", format!("{a:.1} ({s:.1})"));
        }
        out.push('\n');
    }
    out
}

pub fn render(rows: &[Row], format: Format) -> anyhow::Result<String> {
    match format {
        Format::Csv => to_csv(rows),
        Format::Json => to_json(rows),
        Format::Table => Ok(to_table(rows)),
    }
}
