//! Standalone SVG figures: bars for probe metrics, curves for invariance and
//! bucket bars for disentanglement.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::fs;
use std::path::{Path, PathBuf};

use super::tables::load_reports;
use crate::axes::{Axis, AxisReport, BUCKETS};
use crate::data::file_stem_for;
use crate::error::{Error, Result};

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 90.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    svg: String,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn new(title: &str, y_label: &str, y_lo: f64, y_hi: f64) -> Self {
        let (y_lo, y_hi) = if y_hi > y_lo { (y_lo, y_hi) } else { (y_lo - 0.5, y_lo + 0.5) };
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            W / 2.0,
            esc(title)
        );
        let _ = writeln!(
            svg,
            r#"<text x="16" y="{:.1}" transform="rotate(-90 16 {:.1})" text-anchor="middle">{}</text>"#,
            TOP + (H - TOP - BOTTOM) / 2.0,
            TOP + (H - TOP - BOTTOM) / 2.0,
            esc(y_label)
        );
        let mut f = Self { svg, y_lo, y_hi };
        for k in 0..=4 {
            let v = y_lo + (y_hi - y_lo) * k as f64 / 4.0;
            let y = f.y(v);
            let _ = writeln!(
                f.svg,
                r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
                W - RIGHT,
                LEFT - 6.0,
                y + 4.0,
                fmt_tick(v)
            );
        }
        let _ = writeln!(
            f.svg,
            r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}" stroke="black"/>"#,
            H - BOTTOM
        );
        f
    }

    fn y(&self, v: f64) -> f64 {
        let t = (v - self.y_lo) / (self.y_hi - self.y_lo);
        H - BOTTOM - t * (H - TOP - BOTTOM)
    }

    fn finish(mut self) -> String {
        let y0 = self.y(self.y_lo.max(0.0).min(self.y_hi));
        let _ = writeln!(
            self.svg,
            r#"<line x1="{LEFT}" y1="{y0:.1}" x2="{:.1}" y2="{y0:.1}" stroke="black"/>"#,
            W - RIGHT
        );
        self.svg.push_str("</svg>\n");
        self.svg
    }
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

fn range_of(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo.is_finite() {
        (lo.min(0.0), hi.max(0.0))
    } else {
        (0.0, 1.0)
    }
}

/// Labelled groups of bars; each group has one bar per series.
pub fn bar_chart(title: &str, y_label: &str, series: &[String], groups: &[(String, Vec<f64>)]) -> String {
    let (lo, hi) = range_of(groups.iter().flat_map(|g| g.1.iter().copied()));
    let mut f = Frame::new(title, y_label, lo, hi * 1.05);
    let span = (W - LEFT - RIGHT) / groups.len().max(1) as f64;
    let bar = span * 0.8 / series.len().max(1) as f64;
    for (g, (label, values)) in groups.iter().enumerate() {
        let x0 = LEFT + g as f64 * span + span * 0.1;
        for (s, v) in values.iter().enumerate() {
            let (a, b) = (f.y(*v), f.y(0.0f64.clamp(f.y_lo, f.y_hi)));
            let _ = writeln!(
                f.svg,
                r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{}"><title>{}: {v}</title></rect>"#,
                x0 + s as f64 * bar,
                a.min(b),
                bar * 0.95,
                (a - b).abs(),
                PALETTE[s % PALETTE.len()],
                esc(&series[s])
            );
        }
        let cx = x0 + span * 0.4;
        let _ = writeln!(
            f.svg,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="end" transform="rotate(-30 {cx:.1} {:.1})">{}</text>"#,
            H - BOTTOM + 14.0,
            H - BOTTOM + 14.0,
            esc(label)
        );
    }
    legend(&mut f.svg, series);
    f.finish()
}

fn legend(svg: &mut String, series: &[String]) {
    for (i, name) in series.iter().enumerate() {
        let y = TOP + 4.0 + i as f64 * 14.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{:.1}" y="{y:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            W - RIGHT - 170.0,
            PALETTE[i % PALETTE.len()],
            W - RIGHT - 155.0,
            y + 9.0,
            esc(name)
        );
    }
}

/// One polyline per series over a shared x axis.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (ylo, yhi) = {
        let (lo, hi) = series
            .iter()
            .flat_map(|s| s.1.iter().map(|p| p.1))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if lo.is_finite() {
            (lo.min(hi - 1e-3), hi.max(lo + 1e-3))
        } else {
            (0.0, 1.0)
        }
    };
    let (xlo, xhi) = series
        .iter()
        .flat_map(|s| s.1.iter().map(|p| p.0))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (xlo, xhi) = if xhi > xlo { (xlo, xhi) } else { (xlo - 0.5, xlo + 0.5) };
    let pad = (yhi - ylo) * 0.05;
    let mut f = Frame::new(title, y_label, ylo - pad, yhi + pad);
    let x = |v: f64| LEFT + (v - xlo) / (xhi - xlo) * (W - LEFT - RIGHT);
    for k in 0..=4 {
        let v = xlo + (xhi - xlo) * k as f64 / 4.0;
        let _ = writeln!(
            f.svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            x(v),
            H - BOTTOM + 16.0,
            fmt_tick(v)
        );
    }
    let _ = writeln!(
        f.svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + (W - LEFT - RIGHT) / 2.0,
        H - BOTTOM + 36.0,
        esc(x_label)
    );
    for (i, (name, pts)) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|(a, b)| format!("{:.1},{:.1}", x(*a), f.y(*b))).collect();
        let _ = writeln!(
            f.svg,
            r#"<polyline class="curve" fill="none" stroke="{colour}" stroke-width="2" points="{}"><title>{}</title></polyline>"#,
            path.join(" "),
            esc(name)
        );
        for (a, b) in pts {
            let _ = writeln!(
                f.svg,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{colour}"/>"#,
                x(*a),
                f.y(*b)
            );
        }
    }
    let names: Vec<String> = series.iter().map(|s| s.0.clone()).collect();
    legend(&mut f.svg, &names);
    f.finish()
}

fn metric_bars(reports: &[&AxisReport], metric: &str) -> (Vec<String>, Vec<(String, Vec<f64>)>) {
    let mut extractors: Vec<String> = reports.iter().map(|r| r.extractor_id.clone()).collect();
    extractors.sort();
    extractors.dedup();
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in reports {
        let label = r.fv.clone().or_else(|| r.transform.clone()).unwrap_or_default();
        let slot = extractors.iter().position(|e| *e == r.extractor_id).expect("listed");
        let row = groups.entry(label).or_insert_with(|| vec![0.0; extractors.len()]);
        row[slot] = r.metric(metric).unwrap_or(0.0);
    }
    (extractors, groups.into_iter().collect())
}

/// Renders every report under `dir` into `dir/plots/`.
pub fn cmd_plot(dir: &Path) -> Result<Vec<PathBuf>> {
    let reports = load_reports(dir)?;
    let plots = dir.join("plots");
    fs::create_dir_all(&plots).map_err(|e| Error::io(&plots, e))?;
    let mut files: Vec<(String, String)> = Vec::new();
    let by_axis = |axis: Axis| reports.iter().map(|r| &r.1).filter(|r| r.axis == axis).collect::<Vec<_>>();

    for (axis, metric, label) in [
        (Axis::Informativeness, "rmse", "test RMSE (lower is better)"),
        (Axis::PEquivariance, "rmse", "test RMSE on normalized parameter"),
        (Axis::REquivariance, "cosine_mean", "mean cosine to true embedding"),
    ] {
        let rs = by_axis(axis);
        if !rs.is_empty() {
            let (series, groups) = metric_bars(&rs, metric);
            files.push((format!("{axis}.svg"), bar_chart(axis.name(), label, &series, &groups)));
        }
    }

    let mut curves: BTreeMap<String, Vec<(String, Vec<(f64, f64)>)>> = BTreeMap::new();
    for r in by_axis(Axis::Invariance) {
        let pts = r.curve.iter().map(|p| (p.param, p.value)).collect();
        curves
            .entry(r.transform.clone().unwrap_or_default())
            .or_default()
            .push((r.extractor_id.clone(), pts));
    }
    for (transform, series) in curves {
        let svg = line_chart(&format!("invariance: {transform}"), "parameter", "mean cosine", &series);
        files.push((format!("invariance_{}.svg", file_stem_for(&transform)), svg));
    }

    let mut grids: BTreeMap<(String, String), Vec<&AxisReport>> = BTreeMap::new();
    for r in by_axis(Axis::Disentanglement) {
        if let Some(g) = &r.disentanglement {
            grids
                .entry((g.predicted_fv.clone(), g.perturbed_fv.clone()))
                .or_default()
                .push(r);
        }
    }
    for ((pred, pert), rs) in grids {
        let series: Vec<String> = rs.iter().map(|r| r.extractor_id.clone()).collect();
        let groups: Vec<(String, Vec<f64>)> = BUCKETS
            .iter()
            .enumerate()
            .map(|(k, (label, lo, hi))| {
                let values = rs
                    .iter()
                    .map(|r| r.disentanglement.as_ref().map_or(0.0, |g| g.buckets[k].delta_rmse))
                    .collect();
                (format!("{label} [{:.0}%, {:.0}%]", lo * 100.0, hi * 100.0), values)
            })
            .collect();
        let title = format!("disentanglement: predict {pred} under {pert}");
        let svg = bar_chart(&title, "RMSE difference", &series, &groups);
        files.push((
            format!("disentanglement_{}_{}.svg", file_stem_for(&pred), file_stem_for(&pert)),
            svg,
        ));
    }

    files
        .into_iter()
        .map(|(name, svg)| {
            let path = plots.join(name);
            fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}
