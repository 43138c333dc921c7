//! Run reports and their JSON, CSV and SVG renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::config::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "svg" => Ok(Self::Svg),
            other => Err(CliError::new(
                "E_USAGE",
                format!("unknown format {other:?}"),
            )),
        }
    }
}

/// `pass` is `value ≤ tolerance` unless built with [`Check::flag`] or
/// [`Check::within`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: Value,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance: tolerance.into(),
            pass: value <= tolerance,
        }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance: serde_json::json!([lo, hi]),
            pass: (lo..=hi).contains(&value),
        }
    }

    pub fn equals(name: impl Into<String>, value: f64, expected: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance: serde_json::json!({ "equals": expected }),
            pass: value == expected,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            tolerance: serde_json::json!({ "equals": 1.0 }),
            pass: ok,
        }
    }
}

/// Rows for the CSV rendering.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// One curve of a log-log plot.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config_digest: String,
    pub outputs: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
    #[serde(skip)]
    pub table: Option<Table>,
    #[serde(skip)]
    pub series: Vec<Series>,
    #[serde(skip)]
    pub plot_labels: (String, String),
}

impl RunReport {
    pub fn new(command: &str, digest: &str) -> Self {
        Self {
            command: command.into(),
            config_digest: digest.into(),
            outputs: BTreeMap::new(),
            checks: Vec::new(),
            pass: true,
            timings: None,
            table: None,
            series: Vec::new(),
            plot_labels: ("t".into(), "value".into()),
        }
    }

    pub fn output(&mut self, key: &str, value: impl Serialize) {
        self.outputs.insert(
            key.into(),
            serde_json::to_value(value).unwrap_or(Value::Null),
        );
    }

    pub fn check(&mut self, c: Check) {
        self.pass &= c.pass;
        self.checks.push(c);
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Folds a sub-report in under `prefix`.
    pub fn absorb(&mut self, prefix: &str, sub: RunReport) {
        self.outputs.insert(
            prefix.into(),
            serde_json::to_value(&sub.outputs).unwrap_or(Value::Null),
        );
        for mut c in sub.checks {
            c.name = format!("{prefix}.{}", c.name);
            self.check(c);
        }
        if let Some(t) = sub.timings {
            let own = self.timings.get_or_insert_with(BTreeMap::new);
            for (k, v) in t {
                own.insert(format!("{prefix}.{k}"), v);
            }
        }
        for mut s in sub.series {
            s.label = format!("{prefix}: {}", s.label);
            self.series.push(s);
        }
        if self.table.is_none() {
            self.table = sub.table.map(|t| {
                let mut columns = vec!["command".to_string()];
                columns.extend(t.columns);
                Table {
                    columns,
                    rows: t
                        .rows
                        .into_iter()
                        .map(|r| std::iter::once(prefix.to_string()).chain(r).collect())
                        .collect(),
                }
            });
        }
    }
}

pub fn emit(report: &RunReport, format: Format) -> CliResult<String> {
    match format {
        Format::Json => emit_json(report),
        Format::Csv => Ok(emit_csv(report)),
        Format::Svg => emit_svg(report),
    }
}

pub fn emit_json(report: &RunReport) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::new("E_INTERNAL", e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// The command's table if it has one, then the checks.
pub fn emit_csv(report: &RunReport) -> String {
    let mut out = String::new();
    if let Some(t) = &report.table {
        out.push_str(&csv_line(&t.columns));
        for r in &t.rows {
            out.push_str(&csv_line(r));
        }
        out.push('\n');
    }
    out.push_str("check,value,tolerance,pass\n");
    for c in &report.checks {
        out.push_str(&csv_line(&[
            c.name.clone(),
            c.value.to_string(),
            c.tolerance.to_string(),
            c.pass.to_string(),
        ]));
    }
    out
}

fn csv_line<S: AsRef<str>>(fields: &[S]) -> String {
    let mut line = fields
        .iter()
        .map(|f| {
            let f = f.as_ref();
            if f.contains([',', '"', '\n']) {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                f.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join(",");
    line.push('\n');
    line
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Log-log plot of every series; points with non-positive coordinates are
/// dropped.
pub fn emit_svg(report: &RunReport) -> CliResult<String> {
    let curves: Vec<(&Series, Vec<(f64, f64)>)> = report
        .series
        .iter()
        .map(|s| {
            let pts =
                s.x.iter()
                    .zip(&s.y)
                    .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
                    .map(|(x, y)| (x.log10(), y.log10()))
                    .collect::<Vec<_>>();
            (s, pts)
        })
        .filter(|(_, p)| !p.is_empty())
        .collect();
    if curves.is_empty() {
        return Err(CliError::new("E_NOTHING_TO_PLOT", "nothing to plot"));
    }
    let all = curves.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for (x, y) in all {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    let (x0, x1) = pad_range(x0, x1);
    let (y0, y1) = pad_range(y0, y1);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, xml_escape(&report.command));
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for d in (x0.ceil() as i32)..=(x1.floor() as i32) {
        let x = sx(d as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{d}</text>"#,
            HEIGHT - MARGIN,
            HEIGHT - MARGIN + 5.0,
            HEIGHT - MARGIN + 20.0
        );
    }
    for d in (y0.ceil() as i32)..=(y1.floor() as i32) {
        let y = sy(d as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#,
            MARGIN - 5.0,
            MARGIN - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0,
        xml_escape(&report.plot_labels.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        xml_escape(&report.plot_labels.1)
    );
    for (i, (series, pts)) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        for (x, y) in pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                sx(*x),
                sy(*y)
            );
        }
        if i < 12 {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" fill="{color}">{}</text>"#,
                MARGIN + 8.0,
                MARGIN + 16.0 + 14.0 * i as f64,
                xml_escape(&series.label)
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn pad_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        let p = 0.05 * (hi - lo);
        (lo - p, hi + p)
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
