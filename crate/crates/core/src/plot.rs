//! Deterministic SVG line charts of simulation traces.

use std::fmt::Write;

use crate::sim::SimTrace;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 120.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlotError {
    #[error("trace has no rows")]
    EmptyTrace,
    #[error("state column x{0} does not exist")]
    NoSuchColumn(usize),
}

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo > 0.0 {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

/// Renders the selected 1-based state columns (all when empty) against
/// time. Dashed verticals mark mode changes; ticks under the axis mark
/// steps where a packet was lost.
pub fn render_svg(trace: &SimTrace, columns: &[usize]) -> Result<String, PlotError> {
    let records = &trace.records;
    if records.is_empty() {
        return Err(PlotError::EmptyTrace);
    }
    let columns: Vec<usize> = if columns.is_empty() {
        (1..=trace.states).collect()
    } else {
        columns.to_vec()
    };
    if let Some(&bad) = columns.iter().find(|&&c| c == 0 || c > trace.states) {
        return Err(PlotError::NoSuchColumn(bad));
    }

    let t0 = records[0].time;
    let t1 = records[records.len() - 1].time;
    let (t0, t1) = if t1 > t0 { (t0, t1) } else { (t0, t0 + 1.0) };
    let values = records.iter().flat_map(|r| columns.iter().map(move |&c| r.x[c - 1]));
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (y0, y1) = nice_range(lo, hi);

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |t: f64| LEFT + (t - t0) / (t1 - t0) * plot_w;
    let sy = |v: f64| TOP + (y1 - v) / (y1 - y0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    );

    for i in 0..=4 {
        let v = y0 + (y1 - y0) * i as f64 / 4.0;
        let y = sy(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{v:.3}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    for i in 0..=5 {
        let t = t0 + (t1 - t0) * i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{t:.2}</text>"#,
            sx(t),
            TOP + plot_h + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">time [s]</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    if y0 < 0.0 && y1 > 0.0 {
        let y = sy(0.0);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#888888"/>"##,
            LEFT + plot_w
        );
    }

    let _ = writeln!(s, r#"<g class="mode-changes">"#);
    for w in records.windows(2).filter(|w| w[0].mode != w[1].mode) {
        let x = sx(w[1].time);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}" stroke="#999999" stroke-dasharray="3,3"><title>mode {}</title></line>"##,
            TOP + plot_h,
            w[1].mode
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g class="drops">"#);
    for r in records.iter().filter(|r| !r.effective) {
        let x = sx(r.time);
        let y = TOP + plot_h;
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{y:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000000"/>"##,
            y + 6.0
        );
    }
    let _ = writeln!(s, "</g>");

    for (i, &c) in columns.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = records
            .iter()
            .map(|r| format!("{:.2},{:.2}", sx(r.time), sy(r.x[c - 1])))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="state" data-column="x{c}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let ly = TOP + 16.0 + 18.0 * i as f64;
        let lx = LEFT + plot_w + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12">x{c}</text>"#,
            lx + 26.0,
            ly + 4.0
        );
    }
    let _ = writeln!(s, "</svg>");
    Ok(s)
}
