//! CSV tables and SVG polar plots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::calib::PolarScan;
use crate::error::{Error, Result};

/// Numeric table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[i]).collect()
    }
}

/// Scientific notation with 9 significant digits and a signed two-digit
/// exponent, e.g. `6.00000000e+01`.
pub fn format_sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    // -0.0 prints like 0.0
    let x = if x == 0.0 { 0.0 } else { x };
    let s = format!("{x:.8e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub fn csv_string(table: &Table) -> Result<String> {
    if table.rows.is_empty() {
        return Err(Error::Shape("refusing to write an empty table".into()));
    }
    let width = table.header.len();
    let mut out = table.header.join(",");
    out.push('\n');
    for (i, row) in table.rows.iter().enumerate() {
        if row.len() != width {
            return Err(Error::Shape(format!(
                "row {i} has {} columns, header has {width}",
                row.len()
            )));
        }
        let cells: Vec<String> = row.iter().map(|v| format_sci(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn emit_csv(table: &Table, path: &Path) -> Result<()> {
    let text = csv_string(table)?;
    write_file(path, &text)
}

/// `angle_deg, <labels...>` table for a polar scan.
pub fn polar_table(scan: &PolarScan, labels: &[&str]) -> Result<Table> {
    if scan.angles_deg.is_empty() {
        return Err(Error::InvalidScan("scan has no angles".into()));
    }
    if labels.len() != scan.magnitudes.len() {
        return Err(Error::Shape(format!(
            "{} labels for {} channels",
            labels.len(),
            scan.magnitudes.len()
        )));
    }
    let mut header = vec!["angle_deg"];
    header.extend_from_slice(labels);
    let mut t = Table::new(&header);
    for (i, a) in scan.angles_deg.iter().enumerate() {
        let mut row = vec![*a];
        row.extend(scan.magnitudes.iter().map(|m| m[i]));
        t.rows.push(row);
    }
    Ok(t)
}

const SVG_SIZE: f64 = 640.0;
const PLOT_RADIUS: f64 = 260.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Polar plot with 15° angular gridlines and one closed polyline per
/// channel. Each channel is normalized to its own maximum.
pub fn polar_svg(scan: &PolarScan, labels: &[&str], title: &str) -> Result<String> {
    if scan.angles_deg.is_empty() || scan.magnitudes.is_empty() {
        return Err(Error::InvalidScan("nothing to plot".into()));
    }
    let c = SVG_SIZE / 2.0;
    let point = |deg: f64, r: f64| {
        let t = deg.to_radians();
        (c + r * t.cos(), c - r * t.sin())
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_SIZE}" height="{SVG_SIZE}" viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{c}" y="22" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        escape(title)
    );
    for ring in 1..=4 {
        let r = PLOT_RADIUS * ring as f64 / 4.0;
        let _ = writeln!(
            s,
            r##"<circle cx="{c}" cy="{c}" r="{r:.3}" fill="none" stroke="#cccccc" stroke-width="1"/>"##
        );
    }
    for k in 0..24 {
        let deg = 15.0 * k as f64;
        let (x, y) = point(deg, PLOT_RADIUS);
        let _ = writeln!(
            s,
            r##"<line x1="{c}" y1="{c}" x2="{x:.3}" y2="{y:.3}" stroke="#dddddd" stroke-width="1"/>"##
        );
        if k % 3 == 0 {
            let (lx, ly) = point(deg, PLOT_RADIUS + 18.0);
            let _ = writeln!(
                s,
                r#"<text x="{lx:.3}" y="{:.3}" text-anchor="middle" font-family="sans-serif" font-size="12">{deg}°</text>"#,
                ly + 4.0
            );
        }
    }
    for (ch, mags) in scan.magnitudes.iter().enumerate() {
        let max = mags.iter().copied().fold(0.0, f64::max);
        let norm = if max > 0.0 { 1.0 / max } else { 0.0 };
        let mut pts: Vec<String> = scan
            .angles_deg
            .iter()
            .zip(mags)
            .map(|(a, m)| {
                let (x, y) = point(*a, PLOT_RADIUS * m * norm);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        pts.push(pts[0].clone());
        let color = COLORS[ch % COLORS.len()];
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let label = labels.get(ch).copied().unwrap_or("");
        let ly = 40.0 + 18.0 * ch as f64;
        let _ = writeln!(
            s,
            r#"<text x="16" y="{ly}" font-family="sans-serif" font-size="13" fill="{color}">{}</text>"#,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn emit_polar_svg(scan: &PolarScan, labels: &[&str], title: &str, path: &Path) -> Result<()> {
    let svg = polar_svg(scan, labels, title)?;
    write_file(path, &svg)
}
