//! Plot-ready data files and a minimal static SVG rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::result::{ExperimentResult, PlotSpec, Table};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotFiles {
    pub data: PathBuf,
    pub svg: PathBuf,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Write `<out_dir>/<table>.dat` (whitespace separated, one block per series)
/// and `<out_dir>/<table>.svg`. Output bytes depend only on the table.
pub fn emit_plot_data(result: &ExperimentResult, table: &str, out_dir: &Path) -> Result<PlotFiles> {
    let t = result.table(table)?;
    let spec = t.plot.clone().unwrap_or_else(|| {
        PlotSpec::line(
            t.columns.first().map_or("x", String::as_str),
            t.columns.get(1).map_or("y", String::as_str),
        )
    });
    let series = collect_series(t, &spec)?;
    if series.values().all(Vec::is_empty) {
        return Err(Error::EmptyTable(table.to_string()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let data = out_dir.join(format!("{table}.dat"));
    let svg = out_dir.join(format!("{table}.svg"));
    std::fs::write(&data, render_dat(&spec, &series)).map_err(|e| Error::io(&data, e))?;
    std::fs::write(&svg, render_svg(table, &spec, &series)).map_err(|e| Error::io(&svg, e))?;
    Ok(PlotFiles { data, svg })
}

type Series = BTreeMap<String, Vec<(f64, f64)>>;

fn collect_series(t: &Table, spec: &PlotSpec) -> Result<Series> {
    let col = |name: &str| {
        t.column_index(name)
            .ok_or_else(|| Error::MissingTable(format!("{}.{name}", t.name)))
    };
    let (xi, yi) = (col(&spec.x)?, col(&spec.y)?);
    let gi = spec.group.as_deref().map(col).transpose()?;
    let mut series: Series = BTreeMap::new();
    for row in &t.rows {
        let key = gi.map_or_else(String::new, |g| row[g].clone());
        let entry = series.entry(key).or_default();
        let (Ok(x), Ok(y)) = (row[xi].parse::<f64>(), row[yi].parse::<f64>()) else {
            continue;
        };
        let ok = x.is_finite() && y.is_finite() && (!spec.log_x || x > 0.0) && (!spec.log_y || y > 0.0);
        if ok {
            entry.push((x, y));
        }
    }
    Ok(series)
}

fn render_dat(spec: &PlotSpec, series: &Series) -> String {
    let mut out = format!("# {} {}\n", spec.x, spec.y);
    for (i, (name, pts)) in series.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        if let Some(g) = &spec.group {
            let _ = writeln!(out, "# {g} = {name}");
        }
        for (x, y) in pts {
            let _ = writeln!(out, "{x:?} {y:?}");
        }
    }
    out
}

fn render_svg(title: &str, spec: &PlotSpec, series: &Series) -> String {
    let (w, h, left, right, top, bottom) = (480.0, 320.0, 64.0, 16.0, 28.0, 44.0);
    let tx = |x: f64| if spec.log_x { x.log10() } else { x };
    let ty = |y: f64| if spec.log_y { y.log10() } else { y };
    let pts = series.values().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(tx(x));
        x1 = x1.max(tx(x));
        y0 = y0.min(ty(y));
        y1 = y1.max(ty(y));
    }
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 <= y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |x: f64| left + (tx(x) - x0) / (x1 - x0) * (w - left - right);
    let py = |y: f64| h - bottom - (ty(y) - y0) / (y1 - y0) * (h - top - bottom);
    let label = |v: f64, log: bool| {
        if log {
            format!("1e{v:.2}")
        } else {
            format!("{v:.4}")
        }
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#, w / 2.0, escape(title));
    let (ax0, ax1, ay0, ay1) = (left, w - right, top, h - bottom);
    let _ = writeln!(s, r#"<path d="M{ax0} {ay0} L{ax0} {ay1} L{ax1} {ay1}" fill="none" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{ax0}" y="{}" text-anchor="start">{}</text>"#, ay1 + 14.0, label(x0, spec.log_x));
    let _ = writeln!(s, r#"<text x="{ax1}" y="{}" text-anchor="end">{}</text>"#, ay1 + 14.0, label(x1, spec.log_x));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, ax0 - 4.0, ay1, label(y0, spec.log_y));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, ax0 - 4.0, ay0 + 8.0, label(y1, spec.log_y));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (ax0 + ax1) / 2.0, h - 10.0, escape(&spec.x));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        (ay0 + ay1) / 2.0,
        (ay0 + ay1) / 2.0,
        escape(&spec.y)
    );
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if spec.scatter {
            for &(x, y) in pts {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}"/>"#, px(x), py(y));
            }
        } else if !pts.is_empty() {
            let d: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.join(" "));
        }
        if let Some(g) = &spec.group {
            let ly = ay0 + 12.0 + 14.0 * i as f64;
            let _ = writeln!(s, r#"<text x="{}" y="{ly}" text-anchor="end" fill="{color}">{} = {}</text>"#, ax1 - 4.0, escape(g), escape(name));
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
