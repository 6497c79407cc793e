//! Report serialization.
//!
//! CSV schema, one row per cell:
//! `experiment,group,method,param,mean_error` followed by `wall_seconds`
//! when timing is requested. JSON holds `experiment`, `seed`, `trials` and
//! `cells`, each cell with the same fields as a CSV row. Timings are opt-in
//! so that a report is byte-identical across runs with the same seed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::harness::{BenchReport, Cell, ScalingReport};
use crate::io::{csv_string, write_file, CliError, CliResult};

pub const REPORT_HEADER: [&str; 5] = ["experiment", "group", "method", "param", "mean_error"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

pub fn report_csv(report: &BenchReport, timing: bool) -> String {
    let mut header: Vec<&str> = REPORT_HEADER.to_vec();
    if timing {
        header.push("wall_seconds");
    }
    let rows: Vec<Vec<String>> = report
        .cells
        .iter()
        .map(|c| {
            let mut row = vec![
                report.experiment.clone(),
                c.group.clone(),
                c.method.clone(),
                c.param.to_string(),
                c.mean_error.to_string(),
            ];
            if timing {
                row.push(c.wall_seconds.to_string());
            }
            row
        })
        .collect();
    csv_string(&header, &rows)
}

/// Cells back from [`report_csv`] output; missing timings read as zero.
pub fn parse_report_csv(text: &str) -> CliResult<Vec<Cell>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Invalid(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < REPORT_HEADER.len() || header[..5] != REPORT_HEADER {
        return Err(CliError::Invalid(format!(
            "unexpected report header {header:?}"
        )));
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CliError::Invalid(format!("`{s}` is not a number")))
    };
    let mut cells = Vec::new();
    for record in reader.records() {
        let r = record.map_err(|e| CliError::Invalid(e.to_string()))?;
        cells.push(Cell {
            group: r[1].to_string(),
            method: r[2].to_string(),
            param: num(&r[3])?,
            mean_error: num(&r[4])?,
            wall_seconds: if r.len() > 5 { num(&r[5])? } else { 0.0 },
        });
    }
    Ok(cells)
}

#[derive(Serialize)]
struct CellOut<'a> {
    group: &'a str,
    method: &'a str,
    param: f64,
    mean_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_seconds: Option<f64>,
}

#[derive(Serialize)]
struct ReportOut<'a> {
    experiment: &'a str,
    seed: u64,
    trials: usize,
    cells: Vec<CellOut<'a>>,
}

pub fn report_json(report: &BenchReport, timing: bool) -> String {
    let out = ReportOut {
        experiment: &report.experiment,
        seed: report.seed,
        trials: report.trials,
        cells: report
            .cells
            .iter()
            .map(|c| CellOut {
                group: &c.group,
                method: &c.method,
                param: c.param,
                mean_error: c.mean_error,
                wall_seconds: timing.then_some(c.wall_seconds),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&out).expect("report serializes");
    text.push('\n');
    text
}

/// Writes `dir/<experiment>.<ext>` for CSV or JSON.
pub fn emit_report(
    report: &BenchReport,
    format: Format,
    dir: &Path,
    timing: bool,
) -> CliResult<PathBuf> {
    let text = match format {
        Format::Csv => report_csv(report, timing),
        Format::Json => report_json(report, timing),
        Format::Svg => {
            return Err(CliError::Invalid(
                "svg renders a single trial, not a report".into(),
            ))
        }
    };
    let path = dir.join(format!("{}.{}", report.experiment, format.extension()));
    write_file(&path, &text)?;
    Ok(path)
}

pub fn scaling_csv(report: &ScalingReport) -> String {
    let rows: Vec<Vec<String>> = report
        .series
        .iter()
        .flat_map(|s| {
            s.n.iter().zip(&s.seconds).map(move |(n, t)| {
                vec![
                    s.kind.clone(),
                    s.size.to_string(),
                    n.to_string(),
                    t.to_string(),
                    s.slope.to_string(),
                ]
            })
        })
        .collect();
    csv_string(&["kind", "size", "n", "seconds", "slope"], &rows)
}

pub fn emit_scaling(report: &ScalingReport, format: Format, dir: &Path) -> CliResult<PathBuf> {
    let text = match format {
        Format::Csv => scaling_csv(report),
        Format::Json => serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        Format::Svg => return Err(CliError::Invalid("scaling has no svg output".into())),
    };
    let path = dir.join(format!("scaling.{}", format.extension()));
    write_file(&path, &text)?;
    Ok(path)
}

/// A 2-D point cloud, one `<circle>` per point, shaded from grey (weight 0)
/// to red (the largest weight).
pub fn svg_scatter(points: &[[f64; 2]], weights: &[f64]) -> String {
    const SIZE: f64 = 480.0;
    const MARGIN: f64 = 20.0;
    let bounds = |k: usize| {
        let lo = points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
        let hi = points
            .iter()
            .map(|p| p[k])
            .fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi - lo)
        } else {
            (lo - 0.5, 1.0)
        }
    };
    let (x0, xs) = bounds(0);
    let (y0, ys) = bounds(1);
    let max_w = weights.iter().cloned().fold(0.0, f64::max);
    let span = SIZE - 2.0 * MARGIN;

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )
    .unwrap();
    writeln!(
        svg,
        r##"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="#ffffff" stroke="#888888"/>"##
    )
    .unwrap();
    for (p, &w) in points.iter().zip(weights) {
        let cx = MARGIN + (p[0] - x0) / xs * span;
        let cy = SIZE - MARGIN - (p[1] - y0) / ys * span;
        let t = if max_w > 0.0 { w / max_w } else { 0.0 };
        let shade = |from: f64, to: f64| (from + (to - from) * t).round() as u8;
        writeln!(
            svg,
            r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="3" fill="#{:02x}{:02x}{:02x}"/>"##,
            shade(200.0, 200.0),
            shade(200.0, 20.0),
            shade(200.0, 20.0),
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}
