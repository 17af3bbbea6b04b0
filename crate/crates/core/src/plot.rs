//! Standalone SVG box plots and line charts of result tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::{ResultRow, ResultTable};

const WIDTH_PER_BOX: f64 = 90.0;
const LINE_WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const TICKS: usize = 5;
const MODEL_DASHES: [&str; 3] = ["", "6,3", "2,3"];

pub fn scheme_color(scheme: &str) -> &'static str {
    match scheme {
        "kfold" => "#2ca02c",
        "loso" => "#1f77b4",
        "truth" => "#d62728",
        _ => "#555555",
    }
}

fn scheme_rank(scheme: &str) -> usize {
    match scheme {
        "kfold" => 0,
        "loso" => 1,
        "truth" => 3,
        _ => 2,
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Sample quantile by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub outliers: Vec<f64>,
}

/// Quartiles with whiskers at the most extreme points within 1.5 IQR.
pub fn box_stats(values: &[f64]) -> Option<BoxStats> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let (q1, median, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = v.iter().copied().filter(|x| *x >= lo_fence && *x <= hi_fence).collect();
    Some(BoxStats {
        q1,
        median,
        q3,
        whisker_lo: inside.first().copied().unwrap_or(q1),
        whisker_hi: inside.last().copied().unwrap_or(q3),
        outliers: v.into_iter().filter(|x| *x < lo_fence || *x > hi_fence).collect(),
    })
}

struct Scale {
    lo: f64,
    hi: f64,
    top: f64,
    bottom: f64,
}

impl Scale {
    fn new(values: impl Iterator<Item = f64>, top: f64, bottom: f64) -> Self {
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-9 {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.05 * (hi - lo);
        Self {
            lo: lo - pad,
            hi: hi + pad,
            top,
            bottom,
        }
    }

    fn y(&self, v: f64) -> f64 {
        self.bottom - (v - self.lo) / (self.hi - self.lo) * (self.bottom - self.top)
    }
}

fn header(out: &mut String, width: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{HEIGHT:.0}" viewBox="0 0 {width:.0} {HEIGHT:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{width:.0}" height="{HEIGHT:.0}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        width / 2.0,
        escape(title)
    );
}

fn y_axis(out: &mut String, scale: &Scale, x0: f64, x1: f64, label: &str) {
    let _ = writeln!(
        out,
        r##"<line x1="{x0:.2}" y1="{:.2}" x2="{x0:.2}" y2="{:.2}" stroke="#000"/>"##,
        scale.top, scale.bottom
    );
    for i in 0..TICKS {
        let v = scale.lo + (scale.hi - scale.lo) * i as f64 / (TICKS - 1) as f64;
        let y = scale.y(v);
        let _ = writeln!(
            out,
            r##"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"##,
            x0 - 4.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (scale.top + scale.bottom) / 2.0,
        (scale.top + scale.bottom) / 2.0,
        escape(label)
    );
}

fn metric_rows<'a>(table: &'a ResultTable, metric: &str) -> Result<Vec<&'a ResultRow>> {
    let rows: Vec<&ResultRow> = table.aggregates().filter(|r| r.metric == metric).collect();
    if rows.is_empty() {
        return Err(Error::data(format!("metric `{metric}` has no aggregate rows in the results table")));
    }
    Ok(rows)
}

fn model_order(rows: &[&ResultRow]) -> Vec<String> {
    let mut models: Vec<String> = Vec::new();
    for r in rows {
        if !models.contains(&r.model) {
            models.push(r.model.clone());
        }
    }
    models
}

fn dash_attr(models: &[String], model: &str) -> String {
    let i = models.iter().position(|m| m == model).unwrap_or(0) % MODEL_DASHES.len();
    match MODEL_DASHES[i] {
        "" => String::new(),
        d => format!(r#" stroke-dasharray="{d}""#),
    }
}

/// One box per (scheme, model) over replicates, with a dashed truth line per model at its mean.
pub fn render_boxplot(table: &ResultTable, metric: &str) -> Result<String> {
    let rows = metric_rows(table, metric)?;
    let models = model_order(&rows);
    let mut groups: BTreeMap<(usize, String, usize), Vec<f64>> = BTreeMap::new();
    let mut truth: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in &rows {
        let Some(v) = r.value.value() else { continue };
        let m = models.iter().position(|x| x == &r.model).expect("collected");
        if r.scheme == "truth" {
            truth.entry(m).or_default().push(v);
        } else {
            groups.entry((scheme_rank(&r.scheme), r.scheme.clone(), m)).or_default().push(v);
        }
    }
    let truth_means: BTreeMap<usize, f64> = truth
        .iter()
        .map(|(m, v)| (*m, v.iter().sum::<f64>() / v.len() as f64))
        .collect();
    let n_boxes = groups.len().max(1);
    let width = MARGIN_LEFT + MARGIN_RIGHT + WIDTH_PER_BOX * n_boxes as f64;
    let plot_right = width - MARGIN_RIGHT;
    let scale = Scale::new(
        groups.values().flatten().copied().chain(truth_means.values().copied()),
        MARGIN_TOP,
        HEIGHT - MARGIN_BOTTOM,
    );
    let mut out = String::new();
    header(&mut out, width, &format!("{metric} by scheme and model"));
    y_axis(&mut out, &scale, MARGIN_LEFT, plot_right, metric);
    for (i, ((_, scheme, m), values)) in groups.iter().enumerate() {
        let stats = box_stats(values).expect("non-empty group");
        let cx = MARGIN_LEFT + WIDTH_PER_BOX * (i as f64 + 0.5);
        let half = WIDTH_PER_BOX * 0.3;
        let color = scheme_color(scheme);
        let _ = writeln!(
            out,
            r#"<g data-scheme="{}" data-model="{}">"#,
            escape(scheme),
            escape(&models[*m])
        );
        let _ = writeln!(
            out,
            r#"<line class="whisker" x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="{color}"/>"#,
            scale.y(stats.whisker_lo),
            scale.y(stats.whisker_hi)
        );
        let _ = writeln!(
            out,
            r#"<rect class="box" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.3" stroke="{color}"/>"#,
            cx - half,
            scale.y(stats.q3),
            2.0 * half,
            (scale.y(stats.q1) - scale.y(stats.q3)).max(0.0)
        );
        let _ = writeln!(
            out,
            r#"<line class="median" x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#,
            cx - half,
            cx + half,
            y = scale.y(stats.median)
        );
        for o in &stats.outliers {
            let _ = writeln!(
                out,
                r#"<circle class="outlier" cx="{cx:.2}" cy="{:.2}" r="2.5" fill="none" stroke="{color}"/>"#,
                scale.y(*o)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text><text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN_BOTTOM + 18.0,
            escape(scheme),
            HEIGHT - MARGIN_BOTTOM + 34.0,
            escape(&models[*m])
        );
        let _ = writeln!(out, "</g>");
    }
    for (k, (m, mean)) in truth_means.iter().enumerate() {
        let y = scale.y(*mean);
        let _ = writeln!(
            out,
            r#"<line class="truth" data-model="{}" x1="{MARGIN_LEFT:.2}" y1="{y:.2}" x2="{plot_right:.2}" y2="{y:.2}" stroke="{}" stroke-dasharray="6,4"/>"#,
            escape(&models[*m]),
            scheme_color("truth")
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" fill="{}">truth {} {mean:.3}</text>"#,
            plot_right + 6.0,
            y + 4.0 + 14.0 * k as f64,
            scheme_color("truth"),
            escape(&models[*m])
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Mean of the aggregate metric per sweep value, one series per (scheme, model) including truth.
pub fn render_linechart(table: &ResultTable, metric: &str) -> Result<String> {
    let rows = metric_rows(table, metric)?;
    if rows.iter().any(|r| r.sweep_value.is_none()) {
        return Err(Error::data("line chart needs sweep results (rows with a sweep_value)"));
    }
    let models = model_order(&rows);
    let mut sums: BTreeMap<(usize, String, usize), BTreeMap<u64, (f64, usize)>> = BTreeMap::new();
    let mut xs: Vec<f64> = Vec::new();
    for r in &rows {
        let x = r.sweep_value.expect("checked");
        if !xs.contains(&x) {
            xs.push(x);
        }
        let Some(v) = r.value.value() else { continue };
        let m = models.iter().position(|x| x == &r.model).expect("collected");
        let cell = sums
            .entry((scheme_rank(&r.scheme), r.scheme.clone(), m))
            .or_default()
            .entry(x.to_bits())
            .or_insert((0.0, 0));
        cell.0 += v;
        cell.1 += 1;
    }
    xs.sort_by(f64::total_cmp);
    let series: Vec<(&str, usize, Vec<(f64, f64)>)> = sums
        .iter()
        .map(|((_, scheme, m), cells)| {
            let points = xs
                .iter()
                .filter_map(|x| cells.get(&x.to_bits()).map(|(s, c)| (*x, s / *c as f64)))
                .collect();
            (scheme.as_str(), *m, points)
        })
        .collect();
    let width = MARGIN_LEFT + MARGIN_RIGHT + LINE_WIDTH;
    let plot_right = width - MARGIN_RIGHT;
    let scale = Scale::new(
        series.iter().flat_map(|s| s.2.iter().map(|p| p.1)),
        MARGIN_TOP,
        HEIGHT - MARGIN_BOTTOM,
    );
    let (x_lo, x_hi) = (xs[0], xs[xs.len() - 1]);
    let px = |x: f64| {
        if x_hi > x_lo {
            MARGIN_LEFT + 20.0 + (x - x_lo) / (x_hi - x_lo) * (LINE_WIDTH - 40.0)
        } else {
            MARGIN_LEFT + LINE_WIDTH / 2.0
        }
    };
    let mut out = String::new();
    header(&mut out, width, &format!("mean {metric} across sweep values"));
    y_axis(&mut out, &scale, MARGIN_LEFT, plot_right, metric);
    let base = HEIGHT - MARGIN_BOTTOM;
    let _ = writeln!(
        out,
        r##"<line x1="{MARGIN_LEFT:.2}" y1="{base:.2}" x2="{plot_right:.2}" y2="{base:.2}" stroke="#000"/>"##
    );
    for x in &xs {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            px(*x),
            base + 18.0,
            x
        );
    }
    for (k, (scheme, m, points)) in series.iter().enumerate() {
        let color = scheme_color(scheme);
        let dash = dash_attr(&models, &models[*m]);
        let coords: Vec<String> = points.iter().map(|(x, y)| format!("{:.2},{:.2}", px(*x), scale.y(*y))).collect();
        let _ = writeln!(
            out,
            r#"<polyline class="series" data-scheme="{}" data-model="{}" points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
            escape(scheme),
            escape(&models[*m]),
            coords.join(" ")
        );
        for (x, y) in points {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                px(*x),
                scale.y(*y)
            );
        }
        let ly = MARGIN_TOP + 16.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.2}" y="{:.2}">{} {}</text>"#,
            plot_right + 8.0,
            plot_right + 28.0,
            plot_right + 32.0,
            ly + 4.0,
            escape(scheme),
            escape(&models[*m])
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn write(path: &Path, svg: &str) -> Result<()> {
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}

pub fn emit_svg_boxplot(table: &ResultTable, metric: &str, path: &Path) -> Result<()> {
    write(path, &render_boxplot(table, metric)?)
}

pub fn emit_svg_linechart(table: &ResultTable, metric: &str, path: &Path) -> Result<()> {
    write(path, &render_linechart(table, metric)?)
}
