//! Self-contained SVG charts for the CSV reports the toolkit writes.
//!
//! Output is plain hand-built SVG — no external assets, fixed palette,
//! coordinates rounded to two decimals — so a given input always renders
//! to identical bytes.

use crate::error::{CredError, Result};
use crate::waveio::{read_text, write_text};
use std::fmt::Write as _;
use std::path::Path;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 62.0;
const MARGIN_RIGHT: f64 = 18.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 48.0;
const TICKS: usize = 5;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

fn plot_box() -> (f64, f64, f64, f64) {
    (
        MARGIN_LEFT,
        MARGIN_TOP,
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM,
    )
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Short numeric label: fixed two decimals with trailing zeros trimmed.
fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.into()
    }
}

/// Pads a degenerate range so the scale never divides by zero.
fn spread(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 0.5 } else { lo.abs() * 0.1 };
        (lo - pad, lo + pad)
    }
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        self.x0 + (v - self.x_lo) / (self.x_hi - self.x_lo) * self.w
    }

    fn y(&self, v: f64) -> f64 {
        self.y0 + self.h - (v - self.y_lo) / (self.y_hi - self.y_lo) * self.h
    }
}

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">"
    );
    let _ = write!(
        s,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\" fill=\"#222\">{}</text>\n",
        WIDTH / 2.0,
        escape_xml(title)
    );
    s
}

fn draw_axes(s: &mut String, f: &Frame, x_label: &str) {
    let _ = writeln!(
        s,
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#444\"/>",
        f.x0, f.y0, f.w, f.h
    );
    for i in 0..=TICKS {
        let t = i as f64 / TICKS as f64;
        let xv = f.x_lo + t * (f.x_hi - f.x_lo);
        let yv = f.y_lo + t * (f.y_hi - f.y_lo);
        let xp = f.x(xv);
        let yp = f.y(yv);
        let _ = write!(
            s,
            "<line x1=\"{xp:.2}\" y1=\"{:.2}\" x2=\"{xp:.2}\" y2=\"{:.2}\" stroke=\"#444\"/>\n\
             <text x=\"{xp:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"11\" fill=\"#333\">{}</text>\n",
            f.y0 + f.h,
            f.y0 + f.h + 5.0,
            f.y0 + f.h + 18.0,
            fmt_tick(xv)
        );
        let _ = write!(
            s,
            "<line x1=\"{:.2}\" y1=\"{yp:.2}\" x2=\"{:.2}\" y2=\"{yp:.2}\" stroke=\"#444\"/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"11\" fill=\"#333\">{}</text>\n",
            f.x0 - 5.0,
            f.x0,
            f.x0 - 8.0,
            yp + 4.0,
            fmt_tick(yv)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"12\" fill=\"#333\">{}</text>",
        f.x0 + f.w / 2.0,
        HEIGHT - 10.0,
        escape_xml(x_label)
    );
}

fn draw_legend(s: &mut String, f: &Frame, names: &[&str]) {
    if names.len() <= 1 {
        return;
    }
    for (i, name) in names.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = f.y0 + 8.0 + 15.0 * i as f64;
        let x = f.x0 + f.w - 150.0;
        let _ = write!(
            s,
            "<line x1=\"{x:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" fill=\"#333\">{}</text>\n",
            x + 18.0,
            x + 23.0,
            y + 4.0,
            escape_xml(name)
        );
    }
}

/// Renders one or more named `(x, y)` series as a line chart with point
/// markers. Series with a single point still show as a marker.
pub fn render_line_chart(
    title: &str,
    series: &[(String, Vec<(f64, f64)>)],
    x_label: &str,
    path: impl AsRef<Path>,
) -> Result<()> {
    if series.is_empty() || series.iter().all(|(_, pts)| pts.is_empty()) {
        return Err(CredError::EmptyDataset);
    }
    let everything = series.iter().flat_map(|(_, pts)| pts.iter());
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in everything {
        if !(x.is_finite() && y.is_finite()) {
            return Err(CredError::InvalidConfig("chart data must be finite".into()));
        }
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    let (x_lo, x_hi) = spread(x_lo, x_hi);
    let (y_lo, y_hi) = spread(y_lo, y_hi);
    let (x0, y0, w, h) = plot_box();
    let f = Frame {
        x0,
        y0,
        w,
        h,
        x_lo,
        x_hi,
        y_lo,
        y_hi,
    };

    let mut s = svg_open(title);
    draw_axes(&mut s, &f, x_label);
    for (i, (_, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if pts.len() >= 2 {
            let coords: Vec<String> = pts
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", f.x(x), f.y(y)))
                .collect();
            let _ = writeln!(
                s,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>",
                coords.join(" ")
            );
        }
        for &(x, y) in pts {
            let _ = writeln!(
                s,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.6\" fill=\"{color}\"/>",
                f.x(x),
                f.y(y)
            );
        }
    }
    let names: Vec<&str> = series.iter().map(|(n, _)| n.as_str()).collect();
    draw_legend(&mut s, &f, &names);
    s.push_str("</svg>\n");
    write_text(path.as_ref(), &s)
}

/// Renders labeled values as vertical bars. The value axis always includes
/// zero so bar heights stay proportional.
pub fn render_bar_chart(
    title: &str,
    bars: &[(String, f64)],
    x_label: &str,
    path: impl AsRef<Path>,
) -> Result<()> {
    if bars.is_empty() {
        return Err(CredError::EmptyDataset);
    }
    let (mut y_lo, mut y_hi) = (0.0f64, 0.0f64);
    for &(_, v) in bars {
        if !v.is_finite() {
            return Err(CredError::InvalidConfig("chart data must be finite".into()));
        }
        y_lo = y_lo.min(v);
        y_hi = y_hi.max(v);
    }
    let (y_lo, y_hi) = spread(y_lo, y_hi);
    let (x0, y0, w, h) = plot_box();
    let f = Frame {
        x0,
        y0,
        w,
        h,
        x_lo: 0.0,
        x_hi: bars.len() as f64,
        y_lo,
        y_hi,
    };

    let mut s = svg_open(title);
    // Bars get a category axis, so only the value axis draws ticks.
    let _ = writeln!(
        s,
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#444\"/>",
        f.x0, f.y0, f.w, f.h
    );
    for i in 0..=TICKS {
        let t = i as f64 / TICKS as f64;
        let yv = f.y_lo + t * (f.y_hi - f.y_lo);
        let yp = f.y(yv);
        let _ = write!(
            s,
            "<line x1=\"{:.2}\" y1=\"{yp:.2}\" x2=\"{:.2}\" y2=\"{yp:.2}\" stroke=\"#444\"/>\
             \n<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"11\" fill=\"#333\">{}</text>\n",
            f.x0 - 5.0,
            f.x0,
            f.x0 - 8.0,
            yp + 4.0,
            fmt_tick(yv)
        );
    }
    let slot = f.w / bars.len() as f64;
    let bar_w = slot * 0.7;
    let zero_y = f.y(0.0f64.clamp(y_lo, y_hi));
    for (i, (label, v)) in bars.iter().enumerate() {
        let cx = f.x(i as f64 + 0.5);
        let vy = f.y(*v);
        let (top, hgt) = if vy <= zero_y {
            (vy, zero_y - vy)
        } else {
            (zero_y, vy - zero_y)
        };
        let _ = write!(
            s,
            "<rect x=\"{:.2}\" y=\"{top:.2}\" width=\"{bar_w:.2}\" height=\"{hgt:.2}\" fill=\"{}\"/>\n\
             <text x=\"{cx:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"10\" fill=\"#333\">{}</text>\n",
            cx - bar_w / 2.0,
            PALETTE[0],
            f.y0 + f.h + 16.0,
            escape_xml(label)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"12\" fill=\"#333\">{}</text>",
        f.x0 + f.w / 2.0,
        HEIGHT - 10.0,
        escape_xml(x_label)
    );
    s.push_str("</svg>\n");
    write_text(path.as_ref(), &s)
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> Result<Table> {
    let text = read_text(path)?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .filter(|h| !h.trim().is_empty())
        .ok_or_else(|| CredError::MalformedHeader("empty file".into()))?
        .split(',')
        .map(|c| c.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<String> = line.split(',').map(|c| c.trim().to_string()).collect();
        if cells.len() != header.len() {
            return Err(CredError::MalformedRow {
                line: i + 2,
                reason: format!("expected {} fields, got {}", header.len(), cells.len()),
            });
        }
        rows.push(cells);
    }
    if rows.is_empty() {
        return Err(CredError::EmptyDataset);
    }
    Ok(Table { header, rows })
}

/// `Some(v)` for a numeric cell, `None` for an "undefined" placeholder.
/// Anything else is not a value cell.
fn value_cell(cell: &str) -> Option<Option<f64>> {
    if cell == "undefined" {
        return Some(None);
    }
    cell.parse::<f64>().ok().map(Some)
}

/// Renders any of the toolkit's CSV reports to SVG without knowing which
/// one it is. The first column is the x axis. A `bin,count` header becomes
/// a bar chart (histograms); otherwise each remaining numeric column is a
/// line series, and if some column holds text (for example a method name)
/// the rows are split into one series per text value. "undefined" cells
/// are skipped.
pub fn render_csv_chart(csv_path: impl AsRef<Path>, svg_path: impl AsRef<Path>) -> Result<()> {
    let csv_path = csv_path.as_ref();
    let table = read_table(csv_path)?;
    let title = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "chart".into());

    if table.header == ["bin", "count"] {
        let bars: Vec<(String, f64)> = table
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let v = value_cell(&row[1])
                    .flatten()
                    .ok_or_else(|| CredError::MalformedRow {
                        line: i + 2,
                        reason: format!("count {:?} is not numeric", row[1]),
                    })?;
                Ok((row[0].clone(), v))
            })
            .collect::<Result<_>>()?;
        return render_bar_chart(&title, &bars, &table.header[0], svg_path);
    }

    // Columns where every cell is numeric or "undefined" hold values; the
    // first other column (if any) groups rows into series.
    let numeric: Vec<bool> = (0..table.header.len())
        .map(|j| table.rows.iter().all(|row| value_cell(&row[j]).is_some()))
        .collect();
    if !numeric[0] {
        return Err(CredError::MalformedRow {
            line: 2,
            reason: format!("x column {:?} is not numeric", table.header[0]),
        });
    }
    let group_col = (1..table.header.len()).find(|&j| !numeric[j]);
    let y_cols: Vec<usize> = (1..table.header.len())
        .filter(|&j| numeric[j] && Some(j) != group_col)
        .collect();
    if y_cols.is_empty() {
        return Err(CredError::MalformedHeader(
            "no numeric value columns to plot".into(),
        ));
    }

    fn series_index(series: &mut Vec<(String, Vec<(f64, f64)>)>, name: String) -> usize {
        match series.iter().position(|(n, _)| *n == name) {
            Some(i) => i,
            None => {
                series.push((name, Vec::new()));
                series.len() - 1
            }
        }
    }
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for row in &table.rows {
        let x = match value_cell(&row[0]).flatten() {
            Some(x) => x,
            None => continue,
        };
        for &j in &y_cols {
            let name = match group_col {
                Some(g) if y_cols.len() == 1 => row[g].clone(),
                Some(g) => format!("{} {}", row[g], table.header[j]),
                None => table.header[j].clone(),
            };
            if let Some(y) = value_cell(&row[j]).flatten() {
                let k = series_index(&mut series, name);
                series[k].1.push((x, y));
            }
        }
    }
    render_line_chart(&title, &series, &table.header[0], svg_path)
}
