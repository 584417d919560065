use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

/// Run description attached to every JSON report. Thread counts are
/// deliberately absent: they must not change any output byte.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub verb: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime: Option<&'static str>,
    /// Interpretation choices that affect the numbers.
    pub flags: BTreeMap<&'static str, Value>,
}

impl Metadata {
    pub fn new(verb: &'static str) -> Self {
        Metadata {
            tool: "l1weak",
            version: env!("CARGO_PKG_VERSION"),
            verb,
            seed: None,
            regime: None,
            flags: BTreeMap::new(),
        }
    }

    pub fn flag(mut self, key: &'static str, value: impl Into<Value>) -> Self {
        self.flags.insert(key, value.into());
        self
    }
}

/// Everything one command produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    /// Table text; `None` for JSON-only verbs.
    pub csv: Option<String>,
    pub json: String,
    pub svg: Option<String>,
    pub metadata: Metadata,
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:?}")
}

/// A CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width differs from header");
        self.rows.push(row);
    }
}

pub fn emit_csv(table: &Table) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(format!("csv: {e}"));
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(format!("csv: {e}")))
}

pub fn emit_json(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// One shaded rectangle of a phase diagram, in `(β, α)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgCell {
    pub beta: f64,
    pub alpha: f64,
    pub rate: f64,
    pub half_width: f64,
    pub half_height: f64,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

fn px(beta: f64) -> f64 {
    LEFT + beta.clamp(0.0, 1.0) * (WIDTH - LEFT - RIGHT)
}

fn py(alpha: f64) -> f64 {
    HEIGHT - BOTTOM - alpha.clamp(0.0, 1.0) * (HEIGHT - TOP - BOTTOM)
}

fn num(x: f64) -> String {
    format!("{:.2}", x)
}

/// 800×600 plot of `α` against `β` on `[0, 1]²`: the theoretical curve as a
/// polyline over shaded success-rate cells.
pub fn emit_svg(title: &str, curve: &[(f64, f64)], cells: &[SvgCell]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="600" viewBox="0 0 800 600">"#
    );
    let _ = writeln!(s, r#"<rect width="800" height="600" fill="white"/>"#);
    let _ = writeln!(s, "<title>{}</title>", escape(title));

    let _ = writeln!(s, r#"<g id="cells" stroke="none">"#);
    for c in cells {
        let (x0, x1) = (px(c.beta - c.half_width), px(c.beta + c.half_width));
        let (y0, y1) = (py(c.alpha + c.half_height), py(c.alpha - c.half_height));
        // White at rate 0, dark blue at rate 1.
        let shade = |full: f64| (255.0 - c.rate.clamp(0.0, 1.0) * (255.0 - full)).round() as u8;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="rgb({},{},{})"><title>alpha={} beta={} rate={}</title></rect>"#,
            num(x0),
            num(y0),
            num(x1 - x0),
            num(y1 - y0),
            shade(20.0),
            shade(60.0),
            shade(140.0),
            fmt_float(c.alpha),
            fmt_float(c.beta),
            fmt_float(c.rate)
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g id="axes" stroke="black" stroke-width="1" fill="none">"#);
    let _ = writeln!(
        s,
        r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#,
        num(px(0.0)),
        num(py(1.0)),
        num(px(1.0) - px(0.0)),
        num(py(0.0) - py(1.0))
    );
    for i in 0..=10 {
        let t = i as f64 / 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{y0}" x2="{x}" y2="{y1}"/><line x1="{a0}" y1="{y}" x2="{a1}" y2="{y}"/>"#,
            x = num(px(t)),
            y0 = num(py(0.0)),
            y1 = num(py(0.0) + 5.0),
            a0 = num(px(0.0) - 5.0),
            a1 = num(px(0.0)),
            y = num(py(t)),
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g id="labels" font-family="sans-serif" font-size="12" fill="black">"#);
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{:.1}</text><text x="{}" y="{}" text-anchor="end">{:.1}</text>"#,
            num(px(t)),
            num(py(0.0) + 20.0),
            t,
            num(px(0.0) - 8.0),
            num(py(t) + 4.0),
            t
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">beta = k/n</text>"#,
        num(0.5 * (px(0.0) + px(1.0))),
        num(HEIGHT - 15.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{y}" text-anchor="middle" font-size="14" transform="rotate(-90 20 {y})">alpha = m/n</text>"#,
        y = num(0.5 * (py(0.0) + py(1.0)))
    );
    let _ = writeln!(s, "</g>");

    if !curve.is_empty() {
        let points: Vec<String> = curve
            .iter()
            .map(|&(b, a)| format!("{},{}", num(px(b)), num(py(a))))
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline id="theory" points="{}" fill="none" stroke="#d62728" stroke-width="2"/>"##,
            points.join(" ")
        );
        if curve.len() == 1 {
            let _ = writeln!(
                s,
                r##"<circle cx="{}" cy="{}" r="4" fill="#d62728"/>"##,
                num(px(curve[0].0)),
                num(py(curve[0].1))
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
