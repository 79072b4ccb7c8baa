//! Self-contained SVG figure rendering for the analysis CSVs.
//!
//! All figures share a fixed 960x720 viewBox; the `size` option only sets
//! the physical width/height attributes. Rendering is a pure function of
//! the input bytes and options, so identical inputs produce byte-identical
//! files.
//!
//! The 3-D trajectory view uses a fixed isometric projection: each axis is
//! normalized to [0, 1] and mapped through
//!
//! ```text
//! screen_x = (x - y) * cos(30°)
//! screen_y = (x + y) * sin(30°) - z      (screen y up)
//! ```
//!
//! i.e. the 2x3 matrix [[0.8660254, -0.8660254, 0], [0.5, 0.5, -1]].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{CoreError, Result};

pub const VIEW_W: f64 = 960.0;
pub const VIEW_H: f64 = 720.0;

pub const ISO_COS: f64 = 0.866_025_403_784_438_7;
pub const ISO_SIN: f64 = 0.5;

const SERIES_COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FigureKind {
    Heatmap,
    Line,
    Scatter,
    Trajectory3d,
}

/// What to render, from which CSV, into which file.
#[derive(Clone, Debug)]
pub struct FigureSpec {
    pub kind: FigureKind,
    pub input: PathBuf,
    pub output: PathBuf,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Third-axis label for the 3-D trajectory view.
    pub z_label: String,
    pub log_scale: bool,
    /// Number of contour iso-lines on heatmaps.
    pub contours: usize,
    /// Physical width/height attributes; the viewBox stays 960x720.
    pub size: (u32, u32),
    /// Optional overlay CSV (`alpha,beta`) drawn on heatmaps.
    pub overlay: Option<PathBuf>,
}

impl FigureSpec {
    pub fn new(kind: FigureKind, input: impl Into<PathBuf>, output: impl Into<PathBuf>) -> Self {
        FigureSpec {
            kind,
            input: input.into(),
            output: output.into(),
            title: String::new(),
            x_label: String::new(),
            y_label: String::new(),
            z_label: String::new(),
            log_scale: false,
            contours: 10,
            size: (960, 720),
            overlay: None,
        }
    }
}

/// Renders `spec.input` into `spec.output` according to `spec.kind`.
pub fn render(spec: &FigureSpec) -> Result<()> {
    let svg = match spec.kind {
        FigureKind::Heatmap => {
            let grid = read_grid_csv(&spec.input)?;
            let overlay = match &spec.overlay {
                Some(path) => read_pairs_csv(path)?,
                None => Vec::new(),
            };
            heatmap_svg(&grid, &overlay, spec)?
        }
        FigureKind::Line => {
            let (headers, columns) = read_columns_csv(&spec.input)?;
            if columns.len() < 2 {
                return Err(CoreError::corrupt(&spec.input, "line chart needs >= 2 columns"));
            }
            let series: Vec<(String, Vec<f64>)> = headers[1..]
                .iter()
                .cloned()
                .zip(columns[1..].iter().cloned())
                .collect();
            line_svg(&columns[0], &series, spec)?
        }
        FigureKind::Scatter => {
            let (_, columns) = read_columns_csv(&spec.input)?;
            if columns.len() != 2 {
                return Err(CoreError::corrupt(&spec.input, "scatter needs exactly 2 columns"));
            }
            let points: Vec<(f64, f64)> = columns[0]
                .iter()
                .zip(&columns[1])
                .map(|(&x, &y)| (x, y))
                .collect();
            scatter_svg(&points, spec)?
        }
        FigureKind::Trajectory3d => {
            let (_, columns) = read_columns_csv(&spec.input)?;
            if columns.len() != 3 {
                return Err(CoreError::corrupt(&spec.input, "trajectory needs exactly 3 columns"));
            }
            let triples: Vec<(f64, f64, f64)> = (0..columns[0].len())
                .map(|i| (columns[0][i], columns[1][i], columns[2][i]))
                .collect();
            traj3d_svg(&triples, spec)?
        }
    };
    std::fs::write(&spec.output, svg.as_bytes()).map_err(|e| CoreError::io(&spec.output, e))
}

// ---------------------------------------------------------------------------
// CSV input
// ---------------------------------------------------------------------------

/// Dense grid parsed from a `alpha,beta,loss,finite` CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct GridData {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub finite: Vec<Vec<bool>>,
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
    Ok(text.lines().map(|l| l.to_string()).collect())
}

pub fn read_grid_csv(path: &Path) -> Result<GridData> {
    let lines = read_lines(path)?;
    if lines.first().map(|h| h.as_str()) != Some("alpha,beta,loss,finite") {
        return Err(CoreError::corrupt(path, "expected header `alpha,beta,loss,finite`"));
    }
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut cells: Vec<(f64, f64, f64, bool)> = Vec::new();
    for (i, line) in lines[1..].iter().enumerate() {
        let row = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(CoreError::corrupt(path, format!("row {row}: expected 4 fields")));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| CoreError::corrupt(path, format!("row {row}: `{s}` is not a number")))
        };
        let a = parse(fields[0])?;
        let b = parse(fields[1])?;
        let v = parse(fields[2])?;
        let fin = match fields[3] {
            "1" => true,
            "0" => false,
            other => {
                return Err(CoreError::corrupt(
                    path,
                    format!("row {row}: `{other}` is not a 0/1 flag"),
                ))
            }
        };
        if !alphas.contains(&a) {
            alphas.push(a);
        }
        if !betas.contains(&b) {
            betas.push(b);
        }
        cells.push((a, b, v, fin));
    }
    if cells.len() != alphas.len() * betas.len() {
        return Err(CoreError::corrupt(
            path,
            format!(
                "incomplete grid: {} rows for {} x {} axes",
                cells.len(),
                alphas.len(),
                betas.len()
            ),
        ));
    }
    let mut values = vec![vec![f64::NAN; betas.len()]; alphas.len()];
    let mut finite = vec![vec![false; betas.len()]; alphas.len()];
    for (a, b, v, fin) in cells {
        let i = alphas.iter().position(|&x| x == a).unwrap();
        let j = betas.iter().position(|&x| x == b).unwrap();
        values[i][j] = v;
        finite[i][j] = fin;
    }
    Ok(GridData {
        alphas,
        betas,
        values,
        finite,
    })
}

fn read_pairs_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let (_, columns) = read_columns_csv(path)?;
    if columns.len() != 2 {
        return Err(CoreError::corrupt(path, "expected exactly 2 columns"));
    }
    Ok(columns[0].iter().zip(&columns[1]).map(|(&a, &b)| (a, b)).collect())
}

/// Reads a headered CSV of numeric columns.
pub fn read_columns_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let lines = read_lines(path)?;
    let header = lines
        .first()
        .ok_or_else(|| CoreError::corrupt(path, "empty file"))?;
    let headers: Vec<String> = header.split(',').map(|s| s.to_string()).collect();
    let mut columns = vec![Vec::new(); headers.len()];
    for (i, line) in lines[1..].iter().enumerate() {
        let row = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != headers.len() {
            return Err(CoreError::corrupt(
                path,
                format!("row {row}: expected {} fields", headers.len()),
            ));
        }
        for (c, f) in fields.iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| {
                CoreError::corrupt(path, format!("row {row}: `{f}` is not a number"))
            })?;
            columns[c].push(v);
        }
    }
    Ok((headers, columns))
}

// ---------------------------------------------------------------------------
// shared scaffolding
// ---------------------------------------------------------------------------

fn fmt_px(v: f64) -> String {
    format!("{v:.2}")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(0.001..10000.0).contains(&a) {
        return format!("{v:.2e}");
    }
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Data-to-pixel mapping for a rectangular plot area.
struct Frame {
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

fn pad_range(min: f64, max: f64) -> (f64, f64) {
    if min == max {
        let pad = if min == 0.0 { 0.5 } else { min.abs() * 0.05 };
        (min - pad, max + pad)
    } else {
        (min, max)
    }
}

impl Frame {
    fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64, right_margin: f64) -> Self {
        let (xmin, xmax) = pad_range(xmin, xmax);
        let (ymin, ymax) = pad_range(ymin, ymax);
        Frame {
            left: 80.0,
            right: VIEW_W - right_margin,
            top: 50.0,
            bottom: VIEW_H - 60.0,
            xmin,
            xmax,
            ymin,
            ymax,
        }
    }

    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.xmin) / (self.xmax - self.xmin) * (self.right - self.left)
    }

    fn py(&self, y: f64) -> f64 {
        self.bottom - (y - self.ymin) / (self.ymax - self.ymin) * (self.bottom - self.top)
    }
}

fn svg_open(buf: &mut String, size: (u32, u32)) {
    let _ = write!(
        buf,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 960 720" font-family="monospace">"#,
        size.0, size.1
    );
    buf.push('\n');
    buf.push_str(r##"<rect x="0" y="0" width="960" height="720" fill="#ffffff"/>"##);
    buf.push('\n');
}

fn draw_title(buf: &mut String, title: &str) {
    if !title.is_empty() {
        let _ = writeln!(
            buf,
            r#"<text x="480" y="28" text-anchor="middle" font-size="18">{}</text>"#,
            xml_escape(title)
        );
    }
}

fn draw_axes(buf: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let _ = writeln!(
        buf,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333333" stroke-width="1"/>"##,
        fmt_px(frame.left),
        fmt_px(frame.top),
        fmt_px(frame.right - frame.left),
        fmt_px(frame.bottom - frame.top)
    );
    for k in 0..5 {
        let t = k as f64 / 4.0;
        let xv = frame.xmin + t * (frame.xmax - frame.xmin);
        let xp = frame.px(xv);
        let _ = writeln!(
            buf,
            r##"<line x1="{x}" y1="{y0}" x2="{x}" y2="{y1}" stroke="#333333" stroke-width="1"/>"##,
            x = fmt_px(xp),
            y0 = fmt_px(frame.bottom),
            y1 = fmt_px(frame.bottom + 6.0)
        );
        let _ = writeln!(
            buf,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
            fmt_px(xp),
            fmt_px(frame.bottom + 22.0),
            fmt_tick(xv)
        );
        let yv = frame.ymin + t * (frame.ymax - frame.ymin);
        let yp = frame.py(yv);
        let _ = writeln!(
            buf,
            r##"<line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="#333333" stroke-width="1"/>"##,
            x0 = fmt_px(frame.left - 6.0),
            x1 = fmt_px(frame.left),
            y = fmt_px(yp)
        );
        let _ = writeln!(
            buf,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="12">{}</text>"#,
            fmt_px(frame.left - 10.0),
            fmt_px(yp + 4.0),
            fmt_tick(yv)
        );
    }
    if !x_label.is_empty() {
        let _ = writeln!(
            buf,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
            fmt_px((frame.left + frame.right) / 2.0),
            fmt_px(frame.bottom + 45.0),
            xml_escape(x_label)
        );
    }
    if !y_label.is_empty() {
        let cx = frame.left - 55.0;
        let cy = (frame.top + frame.bottom) / 2.0;
        let _ = writeln!(
            buf,
            r#"<text x="{x}" y="{y}" text-anchor="middle" font-size="14" transform="rotate(-90 {x} {y})">{t}</text>"#,
            x = fmt_px(cx),
            y = fmt_px(cy),
            t = xml_escape(y_label)
        );
    }
}

// ---------------------------------------------------------------------------
// heatmap
// ---------------------------------------------------------------------------

const VIRIDIS: [(u8, u8, u8); 9] = [
    (68, 1, 84),
    (72, 40, 120),
    (62, 74, 137),
    (49, 104, 142),
    (38, 130, 142),
    (31, 158, 137),
    (53, 183, 121),
    (109, 205, 89),
    (253, 231, 37),
];

fn colormap(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let scaled = t * (VIRIDIS.len() - 1) as f64;
    let i = (scaled.floor() as usize).min(VIRIDIS.len() - 2);
    let f = scaled - i as f64;
    let (r0, g0, b0) = VIRIDIS[i];
    let (r1, g1, b1) = VIRIDIS[i + 1];
    let lerp = |a: u8, b: u8| -> u8 { (a as f64 + (b as f64 - a as f64) * f).round() as u8 };
    format!("#{:02x}{:02x}{:02x}", lerp(r0, r1), lerp(g0, g1), lerp(b0, b1))
}

struct ValueScale {
    min: f64,
    max: f64,
    log: bool,
}

impl ValueScale {
    fn t(&self, v: f64) -> f64 {
        if self.max == self.min {
            return 0.5;
        }
        if self.log {
            (v.ln() - self.min.ln()) / (self.max.ln() - self.min.ln())
        } else {
            (v - self.min) / (self.max - self.min)
        }
    }

    fn level(&self, t: f64) -> f64 {
        if self.log {
            (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp()
        } else {
            self.min + t * (self.max - self.min)
        }
    }
}

/// Filled-cell heatmap with contour iso-lines, a color bar, hatched
/// non-finite cells, and the projected snapshot trajectory overlaid.
pub fn heatmap_svg(grid: &GridData, overlay: &[(f64, f64)], spec: &FigureSpec) -> Result<String> {
    if grid.alphas.is_empty() || grid.betas.is_empty() {
        return Err(CoreError::invalid("empty grid"));
    }
    let mut finite_vals: Vec<f64> = Vec::new();
    for (row, frow) in grid.values.iter().zip(&grid.finite) {
        for (&v, &f) in row.iter().zip(frow) {
            if f {
                finite_vals.push(v);
            }
        }
    }
    if finite_vals.is_empty() {
        return Err(CoreError::invalid("grid has no finite values"));
    }
    let min = finite_vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = finite_vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if spec.log_scale && min <= 0.0 {
        return Err(CoreError::invalid(format!(
            "log scale requires positive values, found {min}"
        )));
    }
    let scale = ValueScale {
        min,
        max,
        log: spec.log_scale,
    };

    let frame = Frame::new(
        grid.alphas[0],
        *grid.alphas.last().unwrap(),
        grid.betas[0],
        *grid.betas.last().unwrap(),
        130.0,
    );

    let mut buf = String::new();
    svg_open(&mut buf, spec.size);
    buf.push_str("<defs>\n");
    buf.push_str(
        r##"<pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse" patternTransform="rotate(45)"><rect width="6" height="6" fill="#dddddd"/><line x1="0" y1="0" x2="0" y2="6" stroke="#888888" stroke-width="2"/></pattern>"##,
    );
    buf.push('\n');
    buf.push_str("</defs>\n");
    draw_title(&mut buf, &spec.title);

    // cell edges sit midway between node coordinates
    let edges = |coords: &[f64]| -> Vec<f64> {
        let n = coords.len();
        let mut e = Vec::with_capacity(n + 1);
        if n == 1 {
            e.push(coords[0] - 0.5);
            e.push(coords[0] + 0.5);
            return e;
        }
        e.push(coords[0] - (coords[1] - coords[0]) / 2.0);
        for i in 0..n - 1 {
            e.push((coords[i] + coords[i + 1]) / 2.0);
        }
        e.push(coords[n - 1] + (coords[n - 1] - coords[n - 2]) / 2.0);
        e
    };
    let xe = edges(&grid.alphas);
    let ye = edges(&grid.betas);

    for (i, row) in grid.values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let x0 = frame.px(xe[i]).min(frame.px(xe[i + 1]));
            let x1 = frame.px(xe[i]).max(frame.px(xe[i + 1]));
            let y0 = frame.py(ye[j + 1]).min(frame.py(ye[j]));
            let y1 = frame.py(ye[j + 1]).max(frame.py(ye[j]));
            let fill = if grid.finite[i][j] {
                colormap(scale.t(v))
            } else {
                "url(#hatch)".to_string()
            };
            let _ = writeln!(
                buf,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                fmt_px(x0),
                fmt_px(y0),
                fmt_px(x1 - x0),
                fmt_px(y1 - y0),
                fill
            );
        }
    }

    // contour iso-lines via marching squares over the node grid
    if max > min && spec.contours > 0 {
        for k in 0..spec.contours {
            let t = (k + 1) as f64 / (spec.contours + 1) as f64;
            let level = scale.level(t);
            let segments = marching_squares(grid, level);
            if segments.is_empty() {
                continue;
            }
            let mut d = String::new();
            for ((xa, ya), (xb, yb)) in &segments {
                let _ = write!(
                    d,
                    "M{} {} L{} {} ",
                    fmt_px(frame.px(*xa)),
                    fmt_px(frame.py(*ya)),
                    fmt_px(frame.px(*xb)),
                    fmt_px(frame.py(*yb))
                );
            }
            let _ = writeln!(
                buf,
                r##"<path d="{}" fill="none" stroke="#ffffff" stroke-width="0.8" stroke-opacity="0.85"/>"##,
                d.trim_end()
            );
        }
    }

    // snapshot trajectory overlay
    if !overlay.is_empty() {
        let pts: Vec<String> = overlay
            .iter()
            .map(|(a, b)| format!("{},{}", fmt_px(frame.px(*a)), fmt_px(frame.py(*b))))
            .collect();
        let _ = writeln!(
            buf,
            r##"<polyline points="{}" fill="none" stroke="#ff3333" stroke-width="1.5"/>"##,
            pts.join(" ")
        );
        for (a, b) in overlay {
            let _ = writeln!(
                buf,
                r##"<circle cx="{}" cy="{}" r="2.5" fill="#ff3333" stroke="#ffffff" stroke-width="0.6"/>"##,
                fmt_px(frame.px(*a)),
                fmt_px(frame.py(*b))
            );
        }
    }

    // color bar
    let bar_x = frame.right + 25.0;
    let bar_w = 18.0;
    let steps = 64;
    for s in 0..steps {
        let t0 = s as f64 / steps as f64;
        let t1 = (s + 1) as f64 / steps as f64;
        let y0 = frame.bottom - t1 * (frame.bottom - frame.top);
        let y1 = frame.bottom - t0 * (frame.bottom - frame.top);
        let _ = writeln!(
            buf,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
            fmt_px(bar_x),
            fmt_px(y0),
            fmt_px(bar_w),
            fmt_px(y1 - y0 + 0.5),
            colormap((t0 + t1) / 2.0)
        );
    }
    for k in 0..5 {
        let t = k as f64 / 4.0;
        let v = scale.level(t);
        let y = frame.bottom - t * (frame.bottom - frame.top);
        let _ = writeln!(
            buf,
            r#"<text x="{}" y="{}" font-size="11">{}</text>"#,
            fmt_px(bar_x + bar_w + 6.0),
            fmt_px(y + 4.0),
            fmt_tick(v)
        );
    }

    draw_axes(&mut buf, &frame, &spec.x_label, &spec.y_label);
    buf.push_str("</svg>\n");
    Ok(buf)
}

/// Iso-line segments of `level` across the node grid, in data coordinates.
fn marching_squares(grid: &GridData, level: f64) -> Vec<((f64, f64), (f64, f64))> {
    let mut segments = Vec::new();
    let na = grid.alphas.len();
    let nb = grid.betas.len();
    for i in 0..na.saturating_sub(1) {
        for j in 0..nb.saturating_sub(1) {
            if !(grid.finite[i][j]
                && grid.finite[i + 1][j]
                && grid.finite[i][j + 1]
                && grid.finite[i + 1][j + 1])
            {
                continue;
            }
            let x0 = grid.alphas[i];
            let x1 = grid.alphas[i + 1];
            let y0 = grid.betas[j];
            let y1 = grid.betas[j + 1];
            // corners: 1 = (x0,y0), 2 = (x1,y0), 4 = (x1,y1), 8 = (x0,y1)
            let v = [
                grid.values[i][j],
                grid.values[i + 1][j],
                grid.values[i + 1][j + 1],
                grid.values[i][j + 1],
            ];
            let mut case = 0usize;
            for (bit, &val) in v.iter().enumerate() {
                if val > level {
                    case |= 1 << bit;
                }
            }
            if case == 0 || case == 15 {
                continue;
            }
            let lerp = |a: f64, b: f64, va: f64, vb: f64| a + (level - va) / (vb - va) * (b - a);
            // edge midpoints with linear interpolation
            let bottom = (lerp(x0, x1, v[0], v[1]), y0);
            let right = (x1, lerp(y0, y1, v[1], v[2]));
            let top = (lerp(x0, x1, v[3], v[2]), y1);
            let left = (x0, lerp(y0, y1, v[0], v[3]));
            let mut push = |a: (f64, f64), b: (f64, f64)| segments.push((a, b));
            match case {
                1 | 14 => push(left, bottom),
                2 | 13 => push(bottom, right),
                3 | 12 => push(left, right),
                4 | 11 => push(right, top),
                6 | 9 => push(bottom, top),
                7 | 8 => push(left, top),
                5 => {
                    push(left, bottom);
                    push(right, top);
                }
                10 => {
                    push(bottom, right);
                    push(left, top);
                }
                _ => unreachable!(),
            }
        }
    }
    segments
}

// ---------------------------------------------------------------------------
// line / scatter
// ---------------------------------------------------------------------------

/// Multi-series line chart; `x` is shared by all series.
pub fn line_svg(x: &[f64], series: &[(String, Vec<f64>)], spec: &FigureSpec) -> Result<String> {
    if x.is_empty() || series.is_empty() {
        return Err(CoreError::invalid("empty series"));
    }
    for (name, ys) in series {
        if ys.len() != x.len() {
            return Err(CoreError::invalid(format!(
                "series `{name}` length {} does not match x length {}",
                ys.len(),
                x.len()
            )));
        }
    }
    let check_log = |v: f64| -> Result<f64> {
        if spec.log_scale && v <= 0.0 {
            Err(CoreError::invalid(format!(
                "log scale requires positive values, found {v}"
            )))
        } else if spec.log_scale {
            Ok(v.log10())
        } else {
            Ok(v)
        }
    };
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    let mut mapped: Vec<(String, Vec<f64>)> = Vec::new();
    for (name, ys) in series {
        let vals: Result<Vec<f64>> = ys.iter().map(|&v| check_log(v)).collect();
        let vals = vals?;
        for &v in &vals {
            ymin = ymin.min(v);
            ymax = ymax.max(v);
        }
        mapped.push((name.clone(), vals));
    }
    let xmin = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let xmax = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let frame = Frame::new(xmin, xmax, ymin, ymax, 40.0);

    let mut buf = String::new();
    svg_open(&mut buf, spec.size);
    draw_title(&mut buf, &spec.title);
    for (s, (name, ys)) in mapped.iter().enumerate() {
        let color = SERIES_COLORS[s % SERIES_COLORS.len()];
        let pts: Vec<String> = x
            .iter()
            .zip(ys)
            .map(|(&xv, &yv)| format!("{},{}", fmt_px(frame.px(xv)), fmt_px(frame.py(yv))))
            .collect();
        let _ = writeln!(
            buf,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            pts.join(" "),
            color
        );
        // legend swatch
        let ly = 60.0 + 18.0 * s as f64;
        let _ = writeln!(
            buf,
            r#"<rect x="{}" y="{}" width="12" height="12" fill="{}"/>"#,
            fmt_px(frame.right - 110.0),
            fmt_px(ly),
            color
        );
        let _ = writeln!(
            buf,
            r#"<text x="{}" y="{}" font-size="12">{}</text>"#,
            fmt_px(frame.right - 94.0),
            fmt_px(ly + 10.0),
            xml_escape(name)
        );
    }
    draw_axes(&mut buf, &frame, &spec.x_label, &spec.y_label);
    buf.push_str("</svg>\n");
    Ok(buf)
}

pub fn scatter_svg(points: &[(f64, f64)], spec: &FigureSpec) -> Result<String> {
    if points.is_empty() {
        return Err(CoreError::invalid("empty series"));
    }
    let xmin = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let xmax = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let ymin = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let ymax = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let frame = Frame::new(xmin, xmax, ymin, ymax, 40.0);

    let mut buf = String::new();
    svg_open(&mut buf, spec.size);
    draw_title(&mut buf, &spec.title);
    for (xv, yv) in points {
        let _ = writeln!(
            buf,
            r##"<circle cx="{}" cy="{}" r="2" fill="#1f77b4" fill-opacity="0.65"/>"##,
            fmt_px(frame.px(*xv)),
            fmt_px(frame.py(*yv))
        );
    }
    draw_axes(&mut buf, &frame, &spec.x_label, &spec.y_label);
    buf.push_str("</svg>\n");
    Ok(buf)
}

// ---------------------------------------------------------------------------
// 3-D trajectory
// ---------------------------------------------------------------------------

/// Normalized isometric projection of a data triple; see the module docs
/// for the exact matrix.
pub fn iso_project(xn: f64, yn: f64, zn: f64) -> (f64, f64) {
    ((xn - yn) * ISO_COS, (xn + yn) * ISO_SIN - zn)
}

fn normalizer(vals: &[f64]) -> impl Fn(f64) -> f64 {
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    move |v: f64| {
        if max == min {
            0.5
        } else {
            (v - min) / (max - min)
        }
    }
}

/// Fixed-isometric rendering of an `(x, y, z)` polyline with an axis triad.
pub fn traj3d_svg(triples: &[(f64, f64, f64)], spec: &FigureSpec) -> Result<String> {
    if triples.is_empty() {
        return Err(CoreError::invalid("empty series"));
    }
    let xs: Vec<f64> = triples.iter().map(|t| t.0).collect();
    let ys: Vec<f64> = triples.iter().map(|t| t.1).collect();
    let zs: Vec<f64> = triples.iter().map(|t| t.2).collect();
    let nx = normalizer(&xs);
    let ny = normalizer(&ys);
    let nz = normalizer(&zs);

    // projected unit box spans x in [-cos30, cos30], y in [-1, 1]
    let left = 110.0;
    let right = VIEW_W - 110.0;
    let top = 70.0;
    let bottom = VIEW_H - 80.0;
    let to_px = |sx: f64, sy: f64| -> (f64, f64) {
        let px = left + (sx + ISO_COS) / (2.0 * ISO_COS) * (right - left);
        let py = bottom - (sy + 1.0) / 2.0 * (bottom - top);
        (px, py)
    };

    let mut buf = String::new();
    svg_open(&mut buf, spec.size);
    draw_title(&mut buf, &spec.title);

    // axis triad from the normalized origin
    let origin = iso_project(0.0, 0.0, 0.0);
    let axes = [
        (iso_project(1.0, 0.0, 0.0), &spec.x_label),
        (iso_project(0.0, 1.0, 0.0), &spec.y_label),
        (iso_project(0.0, 0.0, 1.0), &spec.z_label),
    ];
    let (ox, oy) = to_px(origin.0, origin.1);
    for ((sx, sy), label) in axes {
        let (ax, ay) = to_px(sx, sy);
        let _ = writeln!(
            buf,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#999999" stroke-width="1"/>"##,
            fmt_px(ox),
            fmt_px(oy),
            fmt_px(ax),
            fmt_px(ay)
        );
        let _ = writeln!(
            buf,
            r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">{}</text>"#,
            fmt_px(ax),
            fmt_px(ay - 6.0),
            xml_escape(label)
        );
    }

    let pts: Vec<String> = triples
        .iter()
        .map(|&(x, y, z)| {
            let (sx, sy) = iso_project(nx(x), ny(y), nz(z));
            let (px, py) = to_px(sx, sy);
            format!("{},{}", fmt_px(px), fmt_px(py))
        })
        .collect();
    let _ = writeln!(
        buf,
        r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>"##,
        pts.join(" ")
    );
    // mark the start of the trajectory
    let _ = writeln!(
        buf,
        r##"<circle cx="{}" cy="{}" r="3.5" fill="#d62728"/>"##,
        pts[0].split(',').next().unwrap(),
        pts[0].split(',').nth(1).unwrap()
    );
    buf.push_str("</svg>\n");
    Ok(buf)
}
