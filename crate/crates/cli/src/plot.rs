//! Minimal self-contained SVG line charts (no external assets).

use std::fmt::Write as _;

pub struct Series {
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
}

/// Horizontal shaded band across the full x range (used for spectral gaps).
pub struct Band {
    pub y_low: f64,
    pub y_high: f64,
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub bands: Vec<Band>,
}

const W: f64 = 800.0;
const H: f64 = 520.0;
const ML: f64 = 70.0;
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 50.0;

pub const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

impl Chart {
    pub fn to_svg(&self) -> String {
        let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for &(x, y) in &s.points {
                x_min = x_min.min(x);
                x_max = x_max.max(x);
                y_min = y_min.min(y);
                y_max = y_max.max(y);
            }
        }
        for b in &self.bands {
            y_min = y_min.min(b.y_low);
            y_max = y_max.max(b.y_high);
        }
        if !x_min.is_finite() {
            x_min = 0.0;
            x_max = 1.0;
        }
        if !y_min.is_finite() {
            y_min = 0.0;
            y_max = 1.0;
        }
        if x_max == x_min {
            x_max = x_min + 1.0;
        }
        if y_max == y_min {
            y_max = y_min + 1.0;
        }
        let pad = 0.04 * (y_max - y_min);
        let (y_min, y_max) = (y_min - pad, y_max + pad);

        let px = |x: f64| ML + (x - x_min) / (x_max - x_min) * (W - ML - MR);
        let py = |y: f64| H - MB - (y - y_min) / (y_max - y_min) * (H - MT - MB);

        let mut svg = String::new();
        let _ = write!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        );
        let _ = write!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);

        for b in &self.bands {
            let y_top = py(b.y_high);
            let height = (py(b.y_low) - y_top).max(0.5);
            let _ = write!(
                svg,
                r##"<rect x="{ML}" y="{y_top:.2}" width="{:.2}" height="{height:.2}" fill="#cccccc" fill-opacity="0.5"/>"##,
                W - ML - MR
            );
        }

        for s in &self.series {
            let mut path = String::new();
            for (i, &(x, y)) in s.points.iter().enumerate() {
                let cmd = if i == 0 { 'M' } else { 'L' };
                let _ = write!(path, "{cmd}{:.2},{:.2} ", px(x), py(y));
            }
            let _ = write!(
                svg,
                r#"<path d="{path}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                s.color
            );
        }

        // frame and extreme tick labels
        let _ = write!(
            svg,
            r#"<rect x="{ML}" y="{MT}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            W - ML - MR,
            H - MT - MB
        );
        let text = |svg: &mut String, x: f64, y: f64, anchor: &str, t: &str| {
            let _ = write!(
                svg,
                r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="13" text-anchor="{anchor}">{t}</text>"#
            );
        };
        text(&mut svg, W / 2.0, MT - 14.0, "middle", &self.title);
        text(&mut svg, W / 2.0, H - 12.0, "middle", &self.x_label);
        let _ = write!(
            svg,
            r#"<text x="16" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            self.y_label
        );
        text(&mut svg, ML, H - MB + 18.0, "middle", &format!("{x_min:.3}"));
        text(&mut svg, W - MR, H - MB + 18.0, "middle", &format!("{x_max:.3}"));
        text(&mut svg, ML - 6.0, H - MB, "end", &format!("{y_min:.3}"));
        text(&mut svg, ML - 6.0, MT + 6.0, "end", &format!("{y_max:.3}"));

        svg.push_str("</svg>\n");
        svg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_wellformed_svg() {
        let chart = Chart {
            title: "test".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series {
                points: vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.5)],
                color: PALETTE[0],
            }],
            bands: vec![Band {
                y_low: 0.2,
                y_high: 0.4,
            }],
        };
        let svg = chart.to_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("<path"));
        assert!(svg.contains("rect"));
    }
}
