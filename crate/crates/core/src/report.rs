//! CSV, JSON and plain-text renderings of window reports.

use std::fmt::Write as _;
use std::io::{self, Write};

use serde::Serialize;

use crate::eval::{ExperimentConfig, PopulationMetrics, WindowReport};

pub const CSV_HEADER: &str =
    "ts_index,mode,population,sparsity,n_attempted,n_predictions,coverage,mae_percent,fscore,ucg,tgc,tgc_pooled,tp,fp,fn,tn";

fn num(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.6}"),
        _ => "NA".to_string(),
    }
}

fn csv_row(ts_index: usize, sparsity: Option<f64>, m: &PopulationMetrics) -> String {
    let c = &m.confusion;
    [
        ts_index.to_string(),
        m.mode.to_string(),
        m.population.as_str().to_string(),
        num(sparsity),
        m.n_attempted.to_string(),
        m.n_predictions.to_string(),
        num(Some(m.coverage)),
        num(m.mae_percent),
        num((m.n_predictions > 0).then_some(m.fscore)),
        num(m.ucg),
        num(m.tgc),
        num(m.tgc_pooled),
        c.tp.to_string(),
        c.fp.to_string(),
        c.fn_.to_string(),
        c.tn.to_string(),
    ]
    .join(",")
}

/// One row per (window, mode, population). Values that cannot be computed are `NA`.
pub fn write_csv<W: Write>(mut out: W, reports: &[WindowReport]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in reports {
        for m in &r.rows {
            writeln!(out, "{}", csv_row(r.ts_index, r.sparsity, m))?;
        }
    }
    Ok(())
}

pub fn csv_string(reports: &[WindowReport]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, reports).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}

#[derive(Serialize)]
struct Bundle<'a> {
    config: &'a ExperimentConfig,
    windows: &'a [WindowReport],
}

/// The configuration and every window report as one JSON document.
pub fn write_json<W: Write>(
    out: W,
    cfg: &ExperimentConfig,
    reports: &[WindowReport],
) -> io::Result<()> {
    serde_json::to_writer_pretty(
        out,
        &Bundle {
            config: cfg,
            windows: reports,
        },
    )
    .map_err(io::Error::from)
}

fn cell(v: Option<f64>, scale: f64) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{:.2}", x * scale),
        _ => "-".to_string(),
    }
}

/// Fixed-width table for the terminal, one line per (window, mode, population).
pub fn summary_table(reports: &[WindowReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>3} {:<8} {:<9} {:>8} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}",
        "ts", "mode", "pop", "sparsity", "preds", "cov%", "mae%", "F", "ucg", "tgc"
    );
    for r in reports {
        for m in &r.rows {
            let _ = writeln!(
                s,
                "{:>3} {:<8} {:<9} {:>8} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}",
                r.ts_index,
                m.mode.as_str(),
                m.population.as_str(),
                cell(r.sparsity, 100.0),
                m.n_predictions,
                cell(Some(m.coverage), 100.0),
                cell(m.mae_percent, 1.0),
                cell((m.n_predictions > 0).then_some(m.fscore), 1.0),
                cell(m.ucg, 1.0),
                cell(m.tgc, 1.0),
            );
        }
    }
    s
}
