//! SVG rendering of a replay series: the best-ratio line above, stacked
//! daily correct and incorrect counts below.

use std::fmt::Write as _;

use crate::replay::Series;

const WIDTH: f64 = 800.0;
const PANEL: f64 = 220.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const GAP: f64 = 70.0;

fn nice_ceiling(v: f64) -> f64 {
    if v <= 1.0 {
        return 1.0;
    }
    let magnitude = 10f64.powf(v.log10().floor());
    for step in [1.0, 2.0, 5.0, 10.0] {
        if step * magnitude >= v {
            return step * magnitude;
        }
    }
    10.0 * magnitude
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(series: &Series) -> String {
    let days = series.rows.len().max(1);
    let plot_w = WIDTH - LEFT - RIGHT;
    let height = TOP + PANEL + GAP + PANEL + 50.0;
    let slot = plot_w / days as f64;
    let x_mid = |i: usize| LEFT + slot * (i as f64 + 0.5);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{LEFT}" y="20" font-size="14">{}</text>"#,
        escape(&series.problem_id)
    );

    // Ratio panel.
    let ratios: Vec<Option<f64>> = series
        .rows
        .iter()
        .map(|r| r.best_ratio.as_ref().map(|s| s.to_f64()))
        .collect();
    let max_ratio = nice_ceiling(ratios.iter().flatten().cloned().fold(1.0, f64::max));
    let y_ratio = |v: f64| {
        let span = (max_ratio - 1.0).max(1e-9);
        TOP + PANEL - (v - 1.0) / span * PANEL
    };
    axes(&mut svg, TOP, plot_w);
    for k in 0..=4 {
        let v = 1.0 + (max_ratio - 1.0) * k as f64 / 4.0;
        let y = y_ratio(v);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{:.2}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            v
        );
    }
    let _ = writeln!(
        svg,
        r##"<text x="{LEFT}" y="{}" fill="#555">best so far / final best</text>"##,
        TOP - 6.0
    );
    let mut path = String::new();
    for (i, r) in ratios.iter().enumerate() {
        if let Some(v) = r {
            let cmd = if path.is_empty() { 'M' } else { 'L' };
            let _ = write!(path, "{cmd}{:.1},{:.1} ", x_mid(i), y_ratio(*v));
        }
    }
    if !path.is_empty() {
        let _ = writeln!(
            svg,
            r##"<path d="{}" fill="none" stroke="#1f5fbf" stroke-width="2"/>"##,
            path.trim_end()
        );
    }

    // Count panel.
    let top2 = TOP + PANEL + GAP;
    let max_count = nice_ceiling(
        series
            .rows
            .iter()
            .map(|r| (r.correct + r.incorrect) as f64)
            .fold(1.0, f64::max),
    );
    let scale = PANEL / max_count;
    axes(&mut svg, top2, plot_w);
    for k in 0..=4 {
        let v = max_count * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            top2 + PANEL - v * scale + 4.0,
            v.round()
        );
    }
    let _ = writeln!(
        svg,
        r##"<text x="{LEFT}" y="{}"><tspan fill="#2e8b57">correct</tspan> / <tspan fill="#c0392b">incorrect</tspan> per day</text>"##,
        top2 - 6.0
    );
    let bar_w = (slot * 0.7).max(1.0);
    for (i, r) in series.rows.iter().enumerate() {
        let x = x_mid(i) - bar_w / 2.0;
        let hc = r.correct as f64 * scale;
        let hi = r.incorrect as f64 * scale;
        let base = top2 + PANEL;
        if hc > 0.0 {
            let _ = writeln!(
                svg,
                r##"<rect x="{x:.1}" y="{:.1}" width="{bar_w:.1}" height="{hc:.1}" fill="#2e8b57"/>"##,
                base - hc
            );
        }
        if hi > 0.0 {
            let _ = writeln!(
                svg,
                r##"<rect x="{x:.1}" y="{:.1}" width="{bar_w:.1}" height="{hi:.1}" fill="#c0392b"/>"##,
                base - hc - hi
            );
        }
    }

    // Shared day labels.
    let every = (days / 15).max(1);
    for (i, r) in series.rows.iter().enumerate().step_by(every) {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            x_mid(i),
            top2 + PANEL + 16.0,
            r.day
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">day</text>"#,
        LEFT + plot_w / 2.0,
        top2 + PANEL + 36.0
    );
    svg.push_str("</svg>\n");
    svg
}

fn axes(svg: &mut String, top: f64, plot_w: f64) {
    let _ = writeln!(
        svg,
        r##"<path d="M{LEFT},{top} V{} H{}" fill="none" stroke="#333"/>"##,
        top + PANEL,
        LEFT + plot_w
    );
}
