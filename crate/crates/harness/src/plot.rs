//! Standalone SVG rendering of CSV curves and 2-D optimisation trajectories.

use std::fmt::Write as _;
use std::path::Path;

use aclr_core::controller::StepRecord;
use aclr_core::nets::{batch_loss, ModelState};
use aclr_core::tasks::Task;

use crate::error::{Error, Result};
use crate::output::Table;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Maps data coordinates into the plotting area.
#[derive(Debug, Clone, Copy)]
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let widen = |lo: f64, hi: f64| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        let (x0, x1) = widen(x0, x1);
        let (y0, y1) = widen(y0, y1);
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn open_svg(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (l, r) = (MARGIN, WIDTH - MARGIN);
    let (t, b) = (MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        out,
        r#"<g class="axes" stroke="black" stroke-width="1"><line x1="{l}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{l}" y1="{t}" x2="{l}" y2="{b}"/></g>"#
    );
    let _ = writeln!(out, r#"<g class="ticks" font-family="sans-serif" font-size="10">"#);
    for k in 0..=4 {
        let u = k as f64 / 4.0;
        let xv = f.x0 + u * (f.x1 - f.x0);
        let yv = f.y0 + u * (f.y1 - f.y0);
        let (px, py) = (f.px(xv), f.py(yv));
        let _ = writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{b}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            b + 4.0,
            b + 16.0,
            tick_label(xv)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{l}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            l - 4.0,
            l - 6.0,
            py + 3.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 14.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    }
    std::fs::write(path, body).map_err(Error::io(path))
}

/// Line chart of `columns` of a CSV against its `step` column (row number
/// when absent). Blank cells are skipped, so a fully populated column gives
/// one polyline point per data row.
pub fn emit_plot(csv_path: &Path, columns: &[&str], out_path: &Path) -> Result<()> {
    if columns.is_empty() {
        return Err(Error::ColumnError("no columns selected".into()));
    }
    let table = Table::read(csv_path)?;
    let xs: Vec<f64> = match table.column_index("step") {
        Ok(i) => table
            .rows
            .iter()
            .enumerate()
            .map(|(k, r)| r[i].unwrap_or(k as f64 + 1.0))
            .collect(),
        Err(_) => (1..=table.rows.len()).map(|k| k as f64).collect(),
    };
    let series: Vec<(&str, Vec<(f64, f64)>)> = columns
        .iter()
        .map(|&c| {
            let col = table.column(c)?;
            let pts = xs
                .iter()
                .zip(col)
                .filter_map(|(&x, y)| y.filter(|v| v.is_finite()).map(|y| (x, y)))
                .collect();
            Ok((c, pts))
        })
        .collect::<Result<_>>()?;

    let all = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let frame = Frame::new(x0, x1, y0, y1);

    let mut out = String::new();
    open_svg(&mut out);
    axes(&mut out, &frame, "step", &columns.join(", "));
    for (k, (name, pts)) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="series" data-column="{}" fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            escape(name),
            points.join(" ")
        );
    }
    let _ = writeln!(out, r#"<g class="legend" font-family="sans-serif" font-size="11">"#);
    for (k, (name, _)) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let y = MARGIN + 6.0 + 16.0 * k as f64;
        let x = WIDTH - MARGIN - 130.0;
        let _ = writeln!(
            out,
            r#"<g class="legend-entry"><rect x="{x:.2}" y="{:.2}" width="12" height="4" fill="{colour}"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            y - 4.0,
            x + 18.0,
            y + 1.0,
            escape(name)
        );
    }
    out.push_str("</g>\n</svg>\n");
    write_file(out_path, &out)
}

/// Contour segments of `grid` (row `j` at `ys[j]`, column `i` at `xs[i]`)
/// at `level`, by marching squares.
fn contour_segments(xs: &[f64], ys: &[f64], grid: &[Vec<f64>], level: f64) -> Vec<[(f64, f64); 2]> {
    let mut segs = Vec::new();
    for j in 0..ys.len() - 1 {
        for i in 0..xs.len() - 1 {
            // Corners counter-clockwise from bottom-left; edge k joins corner k and k+1.
            let c = [
                (xs[i], ys[j], grid[j][i]),
                (xs[i + 1], ys[j], grid[j][i + 1]),
                (xs[i + 1], ys[j + 1], grid[j + 1][i + 1]),
                (xs[i], ys[j + 1], grid[j + 1][i]),
            ];
            let mut hits = Vec::with_capacity(4);
            for k in 0..4 {
                let (xa, ya, va) = c[k];
                let (xb, yb, vb) = c[(k + 1) % 4];
                if (va < level) != (vb < level) {
                    let u = (level - va) / (vb - va);
                    hits.push((xa + u * (xb - xa), ya + u * (yb - ya)));
                }
            }
            for pair in hits.chunks_exact(2) {
                segs.push([pair[0], pair[1]]);
            }
        }
    }
    segs
}

/// Number of grid points per side of the contour grid.
pub const CONTOUR_GRID: usize = 100;

/// Loss contours of a 2-parameter trainee over the trajectory's bounding box
/// (padded 20% per side) with one arrow from `omega^t` to `omega^{t+1}` per
/// recorded step. `omega0` is the starting point; every record must carry
/// its post-step parameters.
pub fn emit_trajectory_plot(trace: &[StepRecord], omega0: &ModelState, task: &Task, out_path: &Path) -> Result<()> {
    if omega0.len() != 2 {
        return Err(Error::DimensionError(omega0.len()));
    }
    let mut path = vec![(omega0.params[0], omega0.params[1])];
    for r in trace {
        match &r.params {
            Some(p) if p.len() == 2 => path.push((p[0], p[1])),
            Some(p) => return Err(Error::DimensionError(p.len())),
            None => return Err(Error::Config(format!("step {} has no recorded parameters", r.t))),
        }
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &path {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let pad = |lo: f64, hi: f64| {
        let p = if hi > lo { 0.2 * (hi - lo) } else { 0.2 * lo.abs().max(1.0) };
        (lo - p, hi + p)
    };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    let frame = Frame::new(x0, x1, y0, y1);

    let n = CONTOUR_GRID;
    let xs: Vec<f64> = (0..n).map(|i| x0 + (x1 - x0) * i as f64 / (n - 1) as f64).collect();
    let ys: Vec<f64> = (0..n).map(|j| y0 + (y1 - y0) * j as f64 / (n - 1) as f64).collect();
    let full = task.train.full_batch();
    let kind = task.loss_kind();
    let mut model = omega0.clone();
    let mut grid = vec![vec![0.0; n]; n];
    for (j, &y) in ys.iter().enumerate() {
        for (i, &x) in xs.iter().enumerate() {
            model.params.copy_from_slice(&[x, y]);
            grid[j][i] = batch_loss(&model, kind, &full.features, &full.targets)?;
        }
    }
    let (lo, hi) = grid
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));

    let mut out = String::new();
    open_svg(&mut out);
    let _ = writeln!(
        out,
        r##"<defs><marker id="head" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="5" markerHeight="5" orient="auto"><path d="M0,0 L10,5 L0,10 z" fill="#d62728"/></marker></defs>"##
    );
    axes(&mut out, &frame, "w1", "w2");
    let _ = writeln!(out, r##"<g class="contours" fill="none" stroke="#999" stroke-width="0.7">"##);
    const LEVELS: usize = 12;
    for k in 1..=LEVELS {
        // Quadratic spacing puts more levels near the minimum.
        let u = k as f64 / (LEVELS + 1) as f64;
        let level = lo + (hi - lo) * u * u;
        for [(ax, ay), (bx, by)] in contour_segments(&xs, &ys, &grid, level) {
            let _ = writeln!(
                out,
                r#"<polyline class="contour" points="{:.2},{:.2} {:.2},{:.2}"/>"#,
                frame.px(ax),
                frame.py(ay),
                frame.px(bx),
                frame.py(by)
            );
        }
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r##"<g class="trajectory" stroke="#d62728" stroke-width="1.2">"##);
    for w in path.windows(2) {
        let ((ax, ay), (bx, by)) = (w[0], w[1]);
        let _ = writeln!(
            out,
            r#"<line class="arrow" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" marker-end="url(#head)"/>"#,
            frame.px(ax),
            frame.py(ay),
            frame.px(bx),
            frame.py(by)
        );
    }
    out.push_str("</g>\n</svg>\n");
    write_file(out_path, &out)
}
