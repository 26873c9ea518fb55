//! Static SVG heatmaps and line plots. Output bytes depend only on the input data.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::CliError;
use crate::io::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Heatmap,
    Lines,
}

/// Values on a rectangular grid; `z` is row-major with `y` as the outer index.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlotData {
    Grid(Grid),
    Traces(Vec<Series>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Labels {
    pub title: String,
    pub x: String,
    pub y: String,
    /// Colour-bar label (heatmaps only).
    pub z: String,
}

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 540.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const VIRIDIS: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn colour(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let k = (t.floor() as usize).min(VIRIDIS.len() - 2);
    let u = t - k as f64;
    let (a, b) = (VIRIDIS[k], VIRIDIS[k + 1]);
    let mix = |p: f64, q: f64| (p + u * (q - p)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Compact tick label with four significant digits.
fn tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs().log10().floor();
    if (-3.0..5.0).contains(&mag) {
        let decimals = (3.0 - mag).max(0.0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.2e}")
    }
}

fn finite_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo.is_finite() {
        Some(if lo == hi { (lo - 0.5, hi + 0.5) } else { (lo, hi) })
    } else {
        None
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn header(svg: &mut String, labels: &Labels) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="28" text-anchor="middle" font-size="15">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(&labels.title)
    );
}

fn axes(svg: &mut String, f: &Frame, labels: &Labels) {
    let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        svg,
        r#"<rect x="{l:.1}" y="{t:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    for k in 0..=4 {
        let u = k as f64 / 4.0;
        let xv = f.x0 + u * (f.x1 - f.x0);
        let yv = f.y0 + u * (f.y1 - f.y0);
        let (xp, yp) = (f.px(xv), f.py(yv));
        let _ = writeln!(svg, r#"<line x1="{xp:.1}" y1="{b:.1}" x2="{xp:.1}" y2="{:.1}" stroke="black"/>"#, b + 5.0);
        let _ = writeln!(svg, r#"<text x="{xp:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, b + 19.0, tick(xv));
        let _ = writeln!(svg, r#"<line x1="{:.1}" y1="{yp:.1}" x2="{l:.1}" y2="{yp:.1}" stroke="black"/>"#, l - 5.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, l - 8.0, yp + 4.0, tick(yv));
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        HEIGHT - 22.0,
        escape(&labels.x)
    );
    let _ = writeln!(
        svg,
        r#"<text x="22" y="{:.1}" text-anchor="middle" transform="rotate(-90 22 {:.1})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        escape(&labels.y)
    );
}

/// Cell edges halfway between axis points, extended by half a step at the ends.
fn edges(axis: &[f64]) -> Vec<f64> {
    if axis.len() == 1 {
        return vec![axis[0] - 0.5, axis[0] + 0.5];
    }
    let n = axis.len();
    let mut e = Vec::with_capacity(n + 1);
    e.push(axis[0] - 0.5 * (axis[1] - axis[0]));
    for w in axis.windows(2) {
        e.push(0.5 * (w[0] + w[1]));
    }
    e.push(axis[n - 1] + 0.5 * (axis[n - 1] - axis[n - 2]));
    e
}

fn heatmap(grid: &Grid, labels: &Labels) -> Result<String, CliError> {
    let (nx, ny) = (grid.x.len(), grid.y.len());
    if nx == 0 || ny == 0 || grid.z.is_empty() {
        return Err(CliError::Io("plot: empty data".into()));
    }
    if grid.z.len() != nx * ny {
        return Err(CliError::Io("plot: grid values do not match the axes".into()));
    }
    if grid.x.iter().chain(&grid.y).any(|v| !v.is_finite()) {
        return Err(CliError::Io("plot: axes must be finite".into()));
    }
    let (zmin, zmax) = finite_range(grid.z.iter().copied()).ok_or_else(|| CliError::Io("plot: no finite values".into()))?;
    let (ex, ey) = (edges(&grid.x), edges(&grid.y));
    let f = Frame {
        x0: ex[0].min(ex[nx]),
        x1: ex[0].max(ex[nx]),
        y0: ey[0].min(ey[ny]),
        y1: ey[0].max(ey[ny]),
    };
    let mut svg = String::new();
    header(&mut svg, labels);
    svg.push_str("<g shape-rendering=\"crispEdges\">\n");
    for i in 0..ny {
        let (ya, yb) = (f.py(ey[i]), f.py(ey[i + 1]));
        for j in 0..nx {
            let (xa, xb) = (f.px(ex[j]), f.px(ex[j + 1]));
            let z = grid.z[i * nx + j];
            let fill = if z.is_finite() { colour((z - zmin) / (zmax - zmin)) } else { "#bbbbbb".into() };
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                xa.min(xb),
                ya.min(yb),
                (xb - xa).abs(),
                (yb - ya).abs()
            );
        }
    }
    svg.push_str("</g>\n");
    if let Some(k) = (0..grid.z.len()).filter(|&k| grid.z[k].is_finite()).max_by(|&a, &b| grid.z[a].total_cmp(&grid.z[b])) {
        let (i, j) = (k / nx, k % nx);
        let (xa, xb) = (f.px(ex[j]), f.px(ex[j + 1]));
        let (ya, yb) = (f.py(ey[i]), f.py(ey[i + 1]));
        let _ = writeln!(
            svg,
            r#"<rect class="max-marker" data-ix="{j}" data-iy="{i}" data-x="{:?}" data-y="{:?}" data-z="{:?}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="red" stroke-width="2"/>"#,
            grid.x[j],
            grid.y[i],
            grid.z[k],
            xa.min(xb) - 2.0,
            ya.min(yb) - 2.0,
            (xb - xa).abs() + 4.0,
            (yb - ya).abs() + 4.0
        );
    }
    axes(&mut svg, &f, labels);
    let (cx, ct, cb) = (WIDTH - RIGHT + 25.0, TOP, HEIGHT - BOTTOM);
    let steps = 64;
    for s in 0..steps {
        let h = (cb - ct) / steps as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{cx:.1}" y="{:.2}" width="18" height="{:.2}" fill="{}"/>"#,
            cb - (s + 1) as f64 * h,
            h + 0.3,
            colour((s as f64 + 0.5) / steps as f64)
        );
    }
    let _ = writeln!(svg, r#"<rect x="{cx:.1}" y="{ct:.1}" width="18" height="{:.1}" fill="none" stroke="black"/>"#, cb - ct);
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, cx + 22.0, ct + 10.0, tick(zmax));
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{cb:.1}">{}</text>"#, cx + 22.0, tick(zmin));
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" transform="rotate(90 {:.1} {:.1})">{}</text>"#,
        cx + 75.0,
        (ct + cb) / 2.0,
        cx + 75.0,
        (ct + cb) / 2.0,
        escape(&labels.z)
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn lines(series: &[Series], labels: &Labels) -> Result<String, CliError> {
    if series.is_empty() || series.iter().all(|s| s.x.is_empty()) {
        return Err(CliError::Io("plot: empty data".into()));
    }
    if series.iter().any(|s| s.x.len() != s.y.len()) {
        return Err(CliError::Io("plot: series x and y lengths differ".into()));
    }
    let pts = || series.iter().flat_map(|s| s.x.iter().zip(&s.y)).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (x0, x1) = finite_range(pts().map(|p| *p.0)).ok_or_else(|| CliError::Io("plot: no finite points".into()))?;
    let (y0, y1) = finite_range(pts().map(|p| *p.1)).expect("x and y finite together");
    let pad = 0.05 * (y1 - y0);
    let f = Frame {
        x0,
        x1,
        y0: y0 - pad,
        y1: y1 + pad,
    };
    let mut svg = String::new();
    header(&mut svg, labels);
    for (k, s) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let mut segments: Vec<Vec<String>> = vec![vec![]];
        for (x, y) in s.x.iter().zip(&s.y) {
            if x.is_finite() && y.is_finite() {
                segments.last_mut().unwrap().push(format!("{:.2},{:.2}", f.px(*x), f.py(*y)));
            } else if !segments.last().unwrap().is_empty() {
                segments.push(vec![]);
            }
        }
        for seg in segments.iter().filter(|s| !s.is_empty()) {
            if seg.len() == 1 {
                let (x, y) = seg[0].split_once(',').unwrap();
                let _ = writeln!(svg, r#"<circle cx="{x}" cy="{y}" r="2.5" fill="{colour}"/>"#);
            } else {
                let _ = writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{colour}" stroke-width="1.6" points="{}"/>"#,
                    seg.join(" ")
                );
            }
        }
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(svg, r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"/>"#, lx + 18.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 23.0, ly + 4.0, escape(&s.name));
    }
    axes(&mut svg, &f, labels);
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Renders `data` as an SVG document. Heatmaps need grid data; a grid drawn as lines
/// becomes one series per `y` row.
pub fn render(data: &PlotData, kind: PlotKind, labels: &Labels) -> Result<String, CliError> {
    match (kind, data) {
        (PlotKind::Heatmap, PlotData::Grid(g)) => heatmap(g, labels),
        (PlotKind::Heatmap, PlotData::Traces(_)) => Err(CliError::Io("plot: a heatmap needs grid data".into())),
        (PlotKind::Lines, PlotData::Traces(s)) => lines(s, labels),
        (PlotKind::Lines, PlotData::Grid(g)) => {
            if g.z.len() != g.x.len() * g.y.len() {
                return Err(CliError::Io("plot: grid values do not match the axes".into()));
            }
            let series: Vec<Series> = g
                .y
                .iter()
                .enumerate()
                .map(|(i, y)| Series {
                    name: tick(*y),
                    x: g.x.clone(),
                    y: g.z[i * g.x.len()..(i + 1) * g.x.len()].to_vec(),
                })
                .collect();
            lines(&series, labels)
        }
    }
}

/// Renders and writes a plot atomically.
pub fn emit_plot(data: &PlotData, path: &Path, kind: PlotKind, labels: &Labels) -> Result<(), CliError> {
    let svg = render(data, kind, labels)?;
    write_atomic(path, svg.as_bytes()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
