//! Writers for the report formats. Nothing here depends on the clock or the
//! thread count, so equal configs give byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use super::config::RunConfig;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(usize),
    I(i64),
    B(bool),
    S(String),
    /// Not applicable for this row.
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(v) => format!("{v:.16e}"),
            Cell::U(v) => v.to_string(),
            Cell::I(v) => v.to_string(),
            Cell::B(v) => v.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(v) => json!(v),
            Cell::U(v) => json!(v),
            Cell::I(v) => json!(v),
            Cell::B(v) => json!(v),
            Cell::S(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}
impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::F)
    }
}

/// A named table, emitted as `<name>.csv` and as an array of row objects
/// in the JSON report.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    /// CSV text with a trailing `config_hash` column on every row.
    pub fn to_csv(&self, hash: &str) -> String {
        let mut s = self.header.join(",");
        s.push_str(",config_hash\n");
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(s, "{},{hash}", cells.join(","));
        }
        s
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        self.header.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// One line of an SVG plot.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    (0..=4).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    pub fn to_svg(&self, hash: &str) -> String {
        let (w, h, ml, mr, mt, mb) = (640.0, 420.0, 70.0, 150.0, 40.0, 50.0);
        let fx = |x: f64| if self.log_x { x.ln() } else { x };
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .filter(|p| p.0.is_finite() && p.1.is_finite() && (!self.log_x || p.0 > 0.0))
            .collect();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &pts {
            x0 = x0.min(fx(x));
            x1 = x1.max(fx(x));
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if pts.is_empty() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 < 1e-300 {
            (x0, x1) = (x0 - 0.5, x1 + 0.5);
        }
        if y1 - y0 < 1e-300 {
            (y0, y1) = (y0 - 0.5, y1 + 0.5);
        }
        let pad = 0.05 * (y1 - y0);
        let (y0, y1) = (y0 - pad, y1 + pad);
        let px = |x: f64| ml + (fx(x) - x0) / (x1 - x0) * (w - ml - mr);
        let py = |y: f64| mt + (y1 - y) / (y1 - y0) * (h - mt - mb);

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
        let _ = writeln!(s, "<desc>config_hash {hash}</desc>");
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="24" font-size="15" text-anchor="middle" font-family="sans-serif">{}</text>"#,
            (ml + w - mr) / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{ml}" y="{mt}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            w - ml - mr,
            h - mt - mb
        );
        for t in ticks(x0, x1) {
            let xv = if self.log_x { t.exp() } else { t };
            let x = ml + (t - x0) / (x1 - x0) * (w - ml - mr);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="middle" font-family="sans-serif">{}</text>"#,
                h - mb,
                h - mb + 5.0,
                h - mb + 18.0,
                fmt_tick(xv)
            );
        }
        for t in ticks(y0, y1) {
            let y = py(t);
            let _ = writeln!(
                s,
                r#"<line x1="{:.1}" y1="{y:.1}" x2="{ml}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end" font-family="sans-serif">{}</text>"#,
                ml - 5.0,
                ml - 8.0,
                y + 4.0,
                fmt_tick(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle" font-family="sans-serif">{}</text>"#,
            (ml + w - mr) / 2.0,
            h - 10.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.1}" font-size="12" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 16 {:.1})">{}</text>"#,
            (mt + h - mb) / 2.0,
            (mt + h - mb) / 2.0,
            escape(&self.y_label)
        );
        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let path: Vec<String> = series
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite() && (!self.log_x || p.0 > 0.0))
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
            for p in &path {
                let (x, y) = p.split_once(',').unwrap();
                let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="2.5" fill="{color}"/>"#);
            }
            let ly = mt + 16.0 * i as f64 + 10.0;
            let _ = writeln!(
                s,
                r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}" font-size="11" font-family="sans-serif">{}</text>"#,
                w - mr + 10.0,
                w - mr + 30.0,
                w - mr + 35.0,
                ly + 4.0,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn fmt_tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// Binary 16-bit PGM (P5) of `|values|`, rows top to bottom, scaled so the
/// largest magnitude maps to 65535.
pub fn pgm16(rows: &[Vec<f64>], hash: &str) -> Vec<u8> {
    let height = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    let peak = rows.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut out = format!("P5\n# config_hash {hash}\n{width} {height}\n65535\n").into_bytes();
    out.reserve(2 * width * height);
    for row in rows {
        for v in row {
            let level = if peak > 0.0 { (v.abs() / peak * 65535.0).round() as u16 } else { 0 };
            out.extend_from_slice(&level.to_be_bytes());
        }
    }
    out
}

/// Everything one command produced.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub tables: Vec<Table>,
    pub summary: Map<String, Value>,
    pub metadata: Map<String, Value>,
    pub plots: Vec<(String, Plot)>,
    pub heatmaps: Vec<(String, Vec<Vec<f64>>)>,
    /// Raw extra files (name, bytes), e.g. pencil dumps.
    pub files: Vec<(String, Vec<u8>)>,
}

impl Report {
    pub fn to_json(&self, config: &RunConfig, hash: &str) -> Value {
        let tables: Map<String, Value> = self.tables.iter().map(|t| (t.name.clone(), t.to_json())).collect();
        json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": config.command(),
            "config_hash": hash,
            "config": config,
            "metadata": self.metadata,
            "summary": self.summary,
            "tables": tables,
        })
    }

    /// Writes the resolved config and every requested format into `dir`;
    /// returns the paths written.
    pub fn write(&self, dir: &Path, config: &RunConfig) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let hash = config.hash();
        let mut written = Vec::new();
        let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
            let path = dir.join(name);
            std::fs::write(&path, bytes)?;
            written.push(path);
            Ok(())
        };
        put("config.resolved.json", config.canonical_json().as_bytes())?;
        if config.wants("csv") {
            for t in &self.tables {
                put(&format!("{}.csv", t.name), t.to_csv(&hash).as_bytes())?;
            }
        }
        if config.wants("json") {
            let text = serde_json::to_string_pretty(&self.to_json(config, &hash))? + "\n";
            put("report.json", text.as_bytes())?;
        }
        if config.wants("svg") {
            for (name, plot) in &self.plots {
                put(&format!("{name}.svg"), plot.to_svg(&hash).as_bytes())?;
            }
        }
        if config.wants("pgm") {
            for (name, rows) in &self.heatmaps {
                put(&format!("{name}.pgm"), &pgm16(rows, &hash))?;
            }
        }
        for (name, bytes) in &self.files {
            put(name, bytes)?;
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new("x", &["a", "b", "c"]);
        t.push(vec![Cell::F(0.1), Cell::U(3), Cell::Empty]);
        let s = t.to_csv("h");
        assert_eq!(s, "a,b,c,config_hash\n1.0000000000000001e-1,3,,h\n");
        assert!(!s.contains('\r'));
        let back: f64 = "1.0000000000000001e-1".parse().unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn json_rows_mirror_csv() {
        let mut t = Table::new("x", &["a", "b"]);
        t.push(vec![Cell::F(-2.0), Cell::B(true)]);
        assert_eq!(t.to_json(), json!([{"a": -2.0, "b": true}]));
    }

    #[test]
    fn pgm_header_and_scaling() {
        let img = pgm16(&[vec![0.0, -2.0], vec![1.0, 2.0]], "abc");
        let header = b"P5\n# config_hash abc\n2 2\n65535\n";
        assert_eq!(&img[..header.len()], header);
        let px = &img[header.len()..];
        assert_eq!(px.len(), 8);
        assert_eq!(u16::from_be_bytes([px[2], px[3]]), 65535);
        assert_eq!(u16::from_be_bytes([px[4], px[5]]), 32768);
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let p = Plot {
            title: "E <1>".into(),
            x_label: "α".into(),
            y_label: "E".into(),
            log_x: true,
            series: vec![Series { label: "n=1".into(), points: vec![(0.1, -100.0), (1.0, -1.4)] }],
        };
        let s = p.to_svg("h");
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("E &lt;1&gt;"));
        assert_eq!(s.matches("<polyline").count(), 1);
    }
}
