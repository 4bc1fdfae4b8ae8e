//! Minimal SVG line plots for headless report generation.
//!
//! No display server, no plotting dependency: each plot is a standalone
//! SVG with axes, tick labels, and one polyline per series.

use crate::error::{Result, TiltwingError};
use std::fmt::Write as _;

pub struct Series<'a> {
    pub label: &'a str,
    pub points: &'a [(f64, f64)],
}

const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#7f7f7f",
];
const W: f64 = 720.0;
const H: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

fn nice_ticks(min: f64, max: f64, target: usize) -> Vec<f64> {
    let span = (max - min).max(1e-12);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = mag
        * if norm < 1.5 {
            1.0
        } else if norm < 3.5 {
            2.0
        } else if norm < 7.5 {
            5.0
        } else {
            10.0
        };
    let mut t = (min / step).ceil() * step;
    let mut out = Vec::new();
    while t <= max + 1e-9 * span {
        out.push(t);
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if a >= 1000.0 || a < 0.01 {
        format!("{v:.1e}")
    } else if a >= 10.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Renders an SVG line plot. Series with fewer than two points are drawn
/// as markers.
pub fn line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series<'_>],
) -> Result<String> {
    if series.iter().all(|s| s.points.is_empty()) {
        return Err(TiltwingError::InvalidScenario(
            "nothing to plot: all series empty".into(),
        ));
    }
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in s.points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    if !(x_min.is_finite() && y_min.is_finite()) {
        return Err(TiltwingError::NonFinite("plot data"));
    }
    if x_max - x_min < 1e-12 {
        x_min -= 0.5;
        x_max += 0.5;
    }
    let pad = 0.05 * (y_max - y_min).max(1e-12);
    y_min -= pad;
    y_max += pad;

    let px = |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * (W - MARGIN_L - MARGIN_R);
    let py = |y: f64| H - MARGIN_B - (y - y_min) / (y_max - y_min) * (H - MARGIN_T - MARGIN_B);

    let mut svg = String::new();
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">
<rect width="{W}" height="{H}" fill="white"/>
<text x="{tx}" y="22" font-family="sans-serif" font-size="16" text-anchor="middle">{title}</text>
"#,
        tx = W / 2.0,
    );
    // Axes.
    let _ = write!(
        svg,
        r#"<line x1="{l}" y1="{t}" x2="{l}" y2="{b}" stroke="black"/>
<line x1="{l}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>
"#,
        l = MARGIN_L,
        r = W - MARGIN_R,
        t = MARGIN_T,
        b = H - MARGIN_B,
    );
    for t in nice_ticks(x_min, x_max, 8) {
        let x = px(t);
        let _ = write!(
            svg,
            r#"<line x1="{x:.1}" y1="{b}" x2="{x:.1}" y2="{b2}" stroke="black"/>
<text x="{x:.1}" y="{ty}" font-family="sans-serif" font-size="11" text-anchor="middle">{lab}</text>
"#,
            b = H - MARGIN_B,
            b2 = H - MARGIN_B + 5.0,
            ty = H - MARGIN_B + 18.0,
            lab = fmt_tick(t),
        );
    }
    for t in nice_ticks(y_min, y_max, 6) {
        let y = py(t);
        let _ = write!(
            svg,
            r#"<line x1="{l2}" y1="{y:.1}" x2="{l}" y2="{y:.1}" stroke="black"/>
<text x="{lx}" y="{ly:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{lab}</text>
"#,
            l = MARGIN_L,
            l2 = MARGIN_L - 5.0,
            lx = MARGIN_L - 8.0,
            ly = y + 4.0,
            lab = fmt_tick(t),
        );
    }
    let _ = write!(
        svg,
        r#"<text x="{xc}" y="{yb}" font-family="sans-serif" font-size="13" text-anchor="middle">{x_label}</text>
<text x="16" y="{ym}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {ym})">{y_label}</text>
"#,
        xc = (MARGIN_L + W - MARGIN_R) / 2.0,
        yb = H - 10.0,
        ym = (MARGIN_T + H - MARGIN_B) / 2.0,
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        if s.points.len() >= 2 {
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
                .collect();
            let _ = write!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>
"#,
                pts.join(" "),
            );
        } else {
            for &(x, y) in s.points {
                let _ = write!(
                    svg,
                    r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{color}"/>
"#,
                    px(x),
                    py(y),
                );
            }
        }
        // Legend entry.
        let ly = MARGIN_T + 16.0 * i as f64;
        let _ = write!(
            svg,
            r#"<line x1="{x0}" y1="{ly:.1}" x2="{x1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>
<text x="{xt}" y="{yt:.1}" font-family="sans-serif" font-size="12">{label}</text>
"#,
            x0 = W - MARGIN_R - 160.0,
            x1 = W - MARGIN_R - 135.0,
            xt = W - MARGIN_R - 130.0,
            yt = ly + 4.0,
            label = s.label,
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn produces_valid_looking_svg() {
        let pts: Vec<(f64, f64)> = (0..100).map(|i| (i as f64, (i as f64 * 0.1).sin())).collect();
        let svg = line_plot(
            "test",
            "t [s]",
            "y",
            &[Series {
                label: "sine",
                points: &pts,
            }],
        )
        .unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("sine"));
    }

    #[test]
    fn single_point_becomes_marker() {
        let svg = line_plot(
            "p",
            "x",
            "y",
            &[Series {
                label: "pt",
                points: &[(1.0, 2.0)],
            }],
        )
        .unwrap();
        assert!(svg.contains("circle"));
    }

    #[test]
    fn rejects_empty_input() {
        assert!(line_plot("e", "x", "y", &[Series { label: "none", points: &[] }]).is_err());
    }

    #[test]
    fn ticks_cover_the_range() {
        let t = nice_ticks(0.0, 90.0, 8);
        assert!(t.len() >= 5);
        assert!(t[0] >= 0.0 && *t.last().unwrap() <= 90.0 + 1e-9);
    }
}
