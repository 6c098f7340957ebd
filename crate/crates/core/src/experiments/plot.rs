//! Minimal self-contained SVG charts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::table::ResultTable;
use crate::{Error, Result};

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct LineSpec {
    pub title: String,
    pub x: String,
    pub ys: Vec<String>,
    /// Rows sharing these column values form one series.
    pub series_by: Vec<String>,
    /// Plot `10 log10(y)`.
    pub log_y: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSpec {
    pub title: String,
    pub x: String,
    pub y: String,
    pub z: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlotSpec {
    Line(LineSpec),
    Surface(SurfaceSpec),
}

pub fn emit_plot(table: &ResultTable, spec: &PlotSpec, path: &Path) -> Result<()> {
    let svg = render(table, spec)?;
    std::fs::write(path, svg)?;
    Ok(())
}

pub fn render(table: &ResultTable, spec: &PlotSpec) -> Result<String> {
    match spec {
        PlotSpec::Line(s) => render_line(table, s),
        PlotSpec::Surface(s) => render_surface(table, s),
    }
}

fn label(table: &ResultTable, name: &str) -> String {
    let c = &table.columns()[table.column_index(name).expect("checked")];
    if c.unit.is_empty() {
        c.name.clone()
    } else {
        format!("{} [{}]", c.name, c.unit)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0);
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    (0..=4).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect()
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 || (1e-2..1e4).contains(&v.abs()) {
        format!("{v:.3}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn frame(
    out: &mut String,
    title: &str,
    xl: &str,
    yl: &str,
    xr: (f64, f64),
    yr: (f64, f64),
    right: f64,
) {
    let pw = WIDTH - LEFT - right;
    let ph = HEIGHT - TOP - BOTTOM;
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="black"/>"#
    );
    for t in ticks(xr.0, xr.1) {
        let x = LEFT + (t - xr.0) / (xr.1 - xr.0) * pw;
        let yb = TOP + ph;
        let _ = writeln!(
            out,
            r#"<line x1="{x:.1}" y1="{yb:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/>"#,
            yb + 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            yb + 18.0,
            fmt_tick(t)
        );
    }
    for t in ticks(yr.0, yr.1) {
        let y = TOP + ph - (t - yr.0) / (yr.1 - yr.0) * ph;
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="black"/>"#,
            LEFT - 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(xl)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(yl)
    );
}

fn render_line(table: &ResultTable, spec: &LineSpec) -> Result<String> {
    let xj = table.column_index(&spec.x)?;
    let yjs = spec
        .ys
        .iter()
        .map(|y| table.column_index(y))
        .collect::<Result<Vec<_>>>()?;
    let sjs = spec
        .series_by
        .iter()
        .map(|s| table.column_index(s))
        .collect::<Result<Vec<_>>>()?;
    if yjs.is_empty() {
        return Err(Error::InvalidArgument(
            "line plot needs at least one y column".into(),
        ));
    }
    let ty = |v: f64| if spec.log_y { 10.0 * v.log10() } else { v };

    // Group rows by series key, in first-appearance order.
    let mut order: Vec<Vec<u64>> = Vec::new();
    let mut groups: BTreeMap<Vec<u64>, Vec<usize>> = BTreeMap::new();
    for (i, row) in table.rows().iter().enumerate() {
        let key: Vec<u64> = sjs.iter().map(|&j| row[j].to_bits()).collect();
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(i);
    }

    let xr = range(table.rows().iter().map(|r| r[xj]));
    let yr = range(
        table
            .rows()
            .iter()
            .flat_map(|r| yjs.iter().map(move |&j| ty(r[j]))),
    );
    let ylabel = if spec.log_y {
        format!("{} [dB]", spec.ys.join(", "))
    } else if spec.ys.len() == 1 {
        label(table, &spec.ys[0])
    } else {
        spec.ys.join(", ")
    };
    let mut out = String::new();
    frame(
        &mut out,
        &spec.title,
        &label(table, &spec.x),
        &ylabel,
        xr,
        yr,
        RIGHT,
    );
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |v: f64| LEFT + (v - xr.0) / (xr.1 - xr.0) * pw;
    let py = |v: f64| TOP + ph - (v - yr.0) / (yr.1 - yr.0) * ph;

    let mut legend = Vec::new();
    for (si, key) in order.iter().enumerate() {
        let rows = &groups[key];
        let color = PALETTE[si % PALETTE.len()];
        for (yi, &yj) in yjs.iter().enumerate() {
            let dash = if yi == 0 {
                ""
            } else {
                r#" stroke-dasharray="5,3""#
            };
            let mut pts = rows
                .iter()
                .map(|&i| &table.rows()[i])
                .filter(|r| ty(r[yj]).is_finite())
                .map(|r| (r[xj], ty(r[yj])))
                .collect::<Vec<_>>();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let path: Vec<String> = pts
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                path.join(" ")
            );
            let mut name = spec.ys[yi].clone();
            if !key.is_empty() {
                let parts: Vec<String> = spec
                    .series_by
                    .iter()
                    .zip(key)
                    .map(|(n, bits)| format!("{n}={}", f64::from_bits(*bits)))
                    .collect();
                name = format!("{name} {}", parts.join(" "));
            }
            legend.push((color, dash, name));
        }
    }
    let lx = WIDTH - RIGHT + 12.0;
    for (i, (color, dash, name)) in legend.iter().enumerate() {
        let y = TOP + 10.0 + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="2"{dash}/>"#,
            lx + 22.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10">{}</text>"#,
            lx + 27.0,
            y + 3.5,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Blue to yellow ramp.
fn colormap(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let stops = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let pos = t * (stops.len() - 1) as f64;
    let i = (pos.floor() as usize).min(stops.len() - 2);
    let f = pos - i as f64;
    let (a, b) = (stops[i], stops[i + 1]);
    let mix = |u: f64, v: f64| (u + (v - u) * f).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(a.0, b.0),
        mix(a.1, b.1),
        mix(a.2, b.2)
    )
}

fn render_surface(table: &ResultTable, spec: &SurfaceSpec) -> Result<String> {
    let xj = table.column_index(&spec.x)?;
    let yj = table.column_index(&spec.y)?;
    let zj = table.column_index(&spec.z)?;
    let uniq = |j: usize| {
        let mut v: Vec<f64> = table.rows().iter().map(|r| r[j]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let xs = uniq(xj);
    let ys = uniq(yj);
    let xr = range(xs.iter().copied());
    let yr = range(ys.iter().copied());
    let zr = range(table.rows().iter().map(|r| r[zj]));
    let mut out = String::new();
    frame(
        &mut out,
        &spec.title,
        &label(table, &spec.x),
        &label(table, &spec.y),
        xr,
        yr,
        RIGHT,
    );
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let cw = pw / xs.len() as f64;
    let ch = ph / ys.len() as f64;
    for r in table.rows() {
        let ix = xs
            .binary_search_by(|v| v.total_cmp(&r[xj]))
            .expect("value present");
        let iy = ys
            .binary_search_by(|v| v.total_cmp(&r[yj]))
            .expect("value present");
        let t = (r[zj] - zr.0) / (zr.1 - zr.0);
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            LEFT + ix as f64 * cw,
            TOP + ph - (iy + 1) as f64 * ch,
            cw + 0.05,
            ch + 0.05,
            colormap(t)
        );
    }
    // Color bar.
    let bx = WIDTH - RIGHT + 20.0;
    for k in 0..50 {
        let t = k as f64 / 49.0;
        let y = TOP + ph - (k + 1) as f64 * ph / 50.0;
        let _ = writeln!(
            out,
            r#"<rect x="{bx:.1}" y="{y:.2}" width="18" height="{:.2}" fill="{}"/>"#,
            ph / 50.0 + 0.05,
            colormap(t)
        );
    }
    for t in ticks(zr.0, zr.1) {
        let y = TOP + ph - (t - zr.0) / (zr.1 - zr.0) * ph;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            bx + 24.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{bx:.1}" y="{:.1}">{}</text>"#,
        TOP - 8.0,
        escape(&label(table, &spec.z))
    );
    out.push_str("</svg>\n");
    Ok(out)
}
