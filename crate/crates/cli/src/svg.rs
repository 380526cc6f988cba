//! Minimal static line plots. Each series also carries its exact data in a
//! `data-points` attribute so a plot can be checked against its CSV.

use std::fmt::Write;

use polsqueeze::kv::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Solid,
    Dashed,
    Markers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, style: Style) -> Self {
        Self {
            label: label.into(),
            points,
            style,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 30.0, 40.0, 60.0); // left, right, top, bottom
const COLORS: [&str; 6] = ["#1f5fa8", "#c0392b", "#2e8b57", "#8e44ad", "#d68910", "#555555"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * (1.0 + lo.abs()) {
        let pad = 0.5 * (1.0 + lo.abs()) * 0.1;
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

impl Plot {
    pub fn to_svg(&self) -> String {
        let (l, r, t, b) = MARGIN;
        let all = || self.series.iter().flat_map(|s| s.points.iter());
        let (x0, x1) = range(all().map(|p| p.0));
        let (y0, y1) = range(all().map(|p| p.1));
        let px = |x: f64| l + (x - x0) / (x1 - x0) * (WIDTH - l - r);
        let py = |y: f64| HEIGHT - b - (y - y0) / (y1 - y0) * (HEIGHT - t - b);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(&self.title));
        // axes with five ticks each
        let _ = writeln!(
            s,
            r#"<path d="M{l} {t} V{} H{}" fill="none" stroke="black"/>"#,
            HEIGHT - b,
            WIDTH - r
        );
        for k in 0..=4 {
            let fx = x0 + (x1 - x0) * k as f64 / 4.0;
            let fy = y0 + (y1 - y0) * k as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<line x1="{0:.2}" y1="{1}" x2="{0:.2}" y2="{2}" stroke="black"/><text x="{0:.2}" y="{3}" text-anchor="middle">{4:.3}</text>"#,
                px(fx),
                HEIGHT - b,
                HEIGHT - b + 5.0,
                HEIGHT - b + 18.0,
                fx
            );
            let _ = writeln!(
                s,
                r#"<line x1="{0}" y1="{1:.2}" x2="{2}" y2="{1:.2}" stroke="black"/><text x="{3}" y="{4:.2}" text-anchor="end">{5:.3}</text>"#,
                l - 5.0,
                py(fy),
                l,
                l - 8.0,
                py(fy) + 4.0,
                fy
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            (l + WIDTH - r) / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
            (t + HEIGHT - b) / 2.0,
            escape(&self.y_label)
        );

        for (i, series) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let data: Vec<String> = series.points.iter().map(|(x, y)| format!("{},{}", fmt_f64(*x), fmt_f64(*y))).collect();
            let screen: Vec<String> = series
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let _ = write!(s, r#"<g data-label="{}" data-points="{}">"#, escape(&series.label), data.join(" "));
            match series.style {
                Style::Solid | Style::Dashed => {
                    let dash = if series.style == Style::Dashed { r#" stroke-dasharray="6 4""# } else { "" };
                    let _ = write!(
                        s,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                        screen.join(" ")
                    );
                }
                Style::Markers => {
                    for p in &screen {
                        let (x, y) = p.split_once(',').expect("formatted pair");
                        let _ = write!(s, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
                    }
                }
            }
            let _ = writeln!(s, "</g>");
            // legend entry
            let ly = t + 10.0 + 18.0 * i as f64;
            let lx = WIDTH - r - 170.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Reads back the `data-points` of every series, in order.
pub fn series_data(svg: &str) -> Vec<(String, Vec<(f64, f64)>)> {
    let mut out = Vec::new();
    for chunk in svg.split("<g data-label=\"").skip(1) {
        let Some((label, rest)) = chunk.split_once('"') else { continue };
        let Some(start) = rest.find("data-points=\"") else { continue };
        let rest = &rest[start + 13..];
        let Some(end) = rest.find('"') else { continue };
        let pts = rest[..end]
            .split_whitespace()
            .filter_map(|p| {
                let (x, y) = p.split_once(',')?;
                Some((x.parse().ok()?, y.parse().ok()?))
            })
            .collect();
        out.push((label.to_string(), pts));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_survives_the_plot() {
        let pts = vec![(0.0, 1.0), (0.5, 0.55), (1.0, 1.45)];
        let plot = Plot {
            title: "t <&>".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series::new("a", pts.clone(), Style::Markers), Series::new("b", pts.clone(), Style::Dashed)],
        };
        let svg = plot.to_svg();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("t &lt;&amp;&gt;"));
        let back = series_data(&svg);
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].1, pts);
        assert_eq!(back[1].0, "b");
    }

    #[test]
    fn flat_series_does_not_divide_by_zero() {
        let plot = Plot {
            title: String::new(),
            x_label: String::new(),
            y_label: String::new(),
            series: vec![Series::new("flat", vec![(0.0, 1.0), (1.0, 1.0)], Style::Solid)],
        };
        assert!(!plot.to_svg().contains("NaN"));
    }
}
