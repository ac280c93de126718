//! Minimal native SVG rendering for epsilon spectra and decay curves.
//!
//! Every data mark carries `data-*` attributes with the exact plotted values
//! so the files can be checked against the CSV/JSON outputs.

use std::fmt::Write as _;

use crate::protocol::{AnalysisReport, DecayDataset, PatternCurve};

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 70.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

/// One bar series: `(pattern, weight, eps, stderr)` in display order.
#[derive(Debug, Clone)]
pub struct BarSeries {
    pub name: String,
    pub bars: Vec<(String, usize, f64, f64)>,
}

impl BarSeries {
    pub fn from_report(name: &str, r: &AnalysisReport) -> Self {
        Self {
            name: name.to_string(),
            bars: r.patterns.iter().map(|p| (p.pattern.clone(), p.weight, p.eps, p.eps_stderr)).collect(),
        }
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, title: &str) {
    writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        esc(title)
    )
    .expect("write to string");
}

/// Round a span to a "nice" tick step.
fn tick_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    mag * if norm < 1.5 { 1.0 } else if norm < 3.0 { 2.0 } else if norm < 7.0 { 5.0 } else { 10.0 }
}

struct Axis {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Axis {
    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }
}

fn y_axis(out: &mut String, y: &Axis, label: &str) {
    let step = tick_step(y.hi - y.lo);
    let mut t = (y.lo / step).ceil() * step;
    while t <= y.hi + 1e-12 * step {
        let py = y.map(t);
        writeln!(
            out,
            r##"<line x1="{MARGIN_L}" x2="{}" y1="{py:.2}" y2="{py:.2}" stroke="#e0e0e0"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            WIDTH - MARGIN_R,
            MARGIN_L - 6.0,
            py + 4.0,
            fmt_tick(t, step)
        )
        .expect("write to string");
        t += step;
    }
    writeln!(
        out,
        r#"<text transform="translate(18,{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        esc(label)
    )
    .expect("write to string");
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let v = if v.abs() < step * 1e-9 { 0.0 } else { v };
    format!("{v:.decimals$}")
}

fn frame(out: &mut String) {
    writeln!(
        out,
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - MARGIN_L - MARGIN_R,
        HEIGHT - MARGIN_T - MARGIN_B
    )
    .expect("write to string");
}

/// Bar chart of eps per pattern (ordered by weight) with 1-sigma error bars;
/// several series are drawn side by side.
pub fn epsilon_bar_svg(title: &str, series: &[BarSeries]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let n_bars = series.iter().map(|s| s.bars.len()).max().unwrap_or(0).max(1);
    let vals = series.iter().flat_map(|s| s.bars.iter().flat_map(|b| [b.2 - b.3, b.2 + b.3, b.2]));
    let (mut lo, mut hi) = vals.fold((0.0f64, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi - lo < 1e-12 {
        hi = lo + 1e-3;
    }
    let pad = 0.05 * (hi - lo);
    lo = if lo < 0.0 { lo - pad } else { 0.0 };
    hi += pad;
    let y = Axis { lo, hi, px_lo: HEIGHT - MARGIN_B, px_hi: MARGIN_T };
    y_axis(&mut out, &y, "epsilon");
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let slot = plot_w / n_bars as f64;
    let bar_w = 0.8 * slot / series.len().max(1) as f64;
    let zero = y.map(0.0);
    writeln!(out, r#"<line x1="{MARGIN_L}" x2="{}" y1="{zero:.2}" y2="{zero:.2}" stroke="black"/>"#, WIDTH - MARGIN_R)
        .expect("write to string");

    // weight group separators and pattern labels from the first series
    if let Some(first) = series.first() {
        for (i, (pattern, weight, _, _)) in first.bars.iter().enumerate() {
            let cx = MARGIN_L + (i as f64 + 0.5) * slot;
            writeln!(
                out,
                r#"<text x="{cx:.2}" y="{:.2}" text-anchor="end" transform="rotate(-60 {cx:.2} {:.2})" font-family="monospace">{}</text>"#,
                HEIGHT - MARGIN_B + 14.0,
                HEIGHT - MARGIN_B + 14.0,
                esc(pattern)
            )
            .expect("write to string");
            if i > 0 && first.bars[i - 1].1 != *weight {
                let x = MARGIN_L + i as f64 * slot;
                writeln!(
                    out,
                    r##"<line x1="{x:.2}" x2="{x:.2}" y1="{MARGIN_T}" y2="{}" stroke="#999" stroke-dasharray="4 3"/>"##,
                    HEIGHT - MARGIN_B
                )
                .expect("write to string");
            }
        }
    }
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        writeln!(out, r#"<g class="series" data-series="{}">"#, esc(&s.name)).expect("write to string");
        for (i, (pattern, weight, eps, se)) in s.bars.iter().enumerate() {
            let x = MARGIN_L + i as f64 * slot + 0.1 * slot + k as f64 * bar_w;
            let top = y.map(eps.max(0.0));
            let h = (y.map(eps.min(0.0)) - top).abs();
            let cx = x + bar_w / 2.0;
            writeln!(
                out,
                r#"<rect class="bar" x="{x:.2}" y="{top:.2}" width="{bar_w:.2}" height="{h:.2}" fill="{color}" data-pattern="{}" data-weight="{weight}" data-eps="{eps:e}" data-stderr="{se:e}"/>"#,
                esc(pattern)
            )
            .expect("write to string");
            writeln!(
                out,
                r#"<line x1="{cx:.2}" x2="{cx:.2}" y1="{:.2}" y2="{:.2}" stroke="black"/>"#,
                y.map(eps - se),
                y.map(eps + se)
            )
            .expect("write to string");
        }
        let ly = MARGIN_T + 10.0 + 18.0 * k as f64;
        writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="12" height="12" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            WIDTH - MARGIN_R + 10.0,
            ly,
            WIDTH - MARGIN_R + 28.0,
            ly + 10.0,
            esc(&s.name)
        )
        .expect("write to string");
    }
    frame(&mut out);
    out.push_str("</svg>\n");
    out
}

fn curve_color(weight: usize) -> &'static str {
    PALETTE[(weight.max(1) - 1) % PALETTE.len()]
}

/// Scatter of the averaged correlators per pattern with the fitted
/// `A alpha^l + B` curves; colour encodes pattern weight.
pub fn decay_curves_svg(title: &str, data: &DecayDataset, report: &AnalysisReport) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let curves: Vec<&PatternCurve> = data.curves.iter().skip(1).collect();
    let l_max = data.lengths.iter().copied().max().unwrap_or(1) as f64;
    let pts = curves.iter().flat_map(|c| c.points.iter().map(|p| p.mean));
    let (lo, hi) = pts.fold((0.0f64, 1.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let pad = 0.05 * (hi - lo);
    let x = Axis { lo: 0.0, hi: l_max * 1.02, px_lo: MARGIN_L, px_hi: WIDTH - MARGIN_R };
    let y = Axis { lo: lo - pad, hi: hi + pad, px_lo: HEIGHT - MARGIN_B, px_hi: MARGIN_T };
    y_axis(&mut out, &y, "corrected correlator");
    let step = tick_step(x.hi - x.lo);
    let mut t = 0.0;
    while t <= x.hi {
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            x.map(t),
            HEIGHT - MARGIN_B + 18.0,
            fmt_tick(t, step)
        )
        .expect("write to string");
        t += step;
    }
    writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">sequence length l</text>"#, x.map(l_max / 2.0), HEIGHT - 20.0)
        .expect("write to string");

    for c in &curves {
        let summary = report.summary(&c.pattern);
        let weight = c.pattern.bytes().filter(|&b| b == b'1').count();
        let color = curve_color(weight);
        writeln!(out, r#"<g class="pattern" data-pattern="{}" data-weight="{weight}">"#, esc(&c.pattern)).expect("write to string");
        if let Some(s) = summary {
            let f = &s.fit;
            let path: Vec<String> = (0..=120)
                .map(|k| {
                    let l = l_max * k as f64 / 120.0;
                    format!("{:.2},{:.2}", x.map(l), y.map(f.a * f.alpha.powf(l) + f.b))
                })
                .collect();
            writeln!(
                out,
                r#"<polyline class="fit" fill="none" stroke="{color}" stroke-opacity="0.6" points="{}" data-a="{:e}" data-alpha="{:e}" data-b="{:e}"/>"#,
                path.join(" "),
                f.a,
                f.alpha,
                f.b
            )
            .expect("write to string");
        }
        for p in &c.points {
            writeln!(
                out,
                r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="3" fill="{color}" data-l="{}" data-mean="{:e}" data-stderr="{:e}"/>"#,
                x.map(p.l as f64),
                y.map(p.mean),
                p.l,
                p.mean,
                p.stderr
            )
            .expect("write to string");
        }
        out.push_str("</g>\n");
    }
    let max_w = curves.iter().map(|c| c.pattern.bytes().filter(|&b| b == b'1').count()).max().unwrap_or(1);
    for w in 1..=max_w {
        let ly = MARGIN_T + 10.0 + 18.0 * (w - 1) as f64;
        writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="5" fill="{}"/><text x="{:.2}" y="{:.2}">weight {w}</text>"#,
            WIDTH - MARGIN_R + 16.0,
            ly + 5.0,
            curve_color(w),
            WIDTH - MARGIN_R + 28.0,
            ly + 10.0
        )
        .expect("write to string");
    }
    frame(&mut out);
    out.push_str("</svg>\n");
    out
}
