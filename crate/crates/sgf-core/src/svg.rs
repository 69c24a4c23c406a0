//! Self-contained SVG line plots; no plotting dependency required downstream.

use std::fmt::Write;

/// Render one series as an SVG polyline with axes and tick labels.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, ys: &[f64]) -> String {
    let (w, h) = (860.0, 480.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 50.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);

    let finite: Vec<f64> = ys.iter().copied().filter(|y| y.is_finite()).collect();
    let (ymin, ymax) = if finite.is_empty() {
        (0.0, 1.0)
    } else {
        let lo = finite.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if (hi - lo).abs() < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        }
    };
    let n = ys.len().max(2) as f64;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        w / 2.0,
        title
    );
    // axes
    let _ = writeln!(
        svg,
        r#"<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{}" stroke="black"/>"#,
        mt + ph
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{ml}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        mt + ph,
        ml + pw,
        mt + ph
    );
    // y ticks
    for i in 0..=4 {
        let frac = i as f64 / 4.0;
        let y = mt + ph * (1.0 - frac);
        let value = ymin + frac * (ymax - ymin);
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{y}" x2="{ml}" y2="{y}" stroke="black"/>"#,
            ml - 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{value:.3}</text>"#,
            ml - 8.0,
            y + 4.0
        );
    }
    // x ticks
    for i in 0..=4 {
        let frac = i as f64 / 4.0;
        let x = ml + pw * frac;
        let value = frac * (n - 1.0);
        let _ = writeln!(
            svg,
            r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black"/>"#,
            mt + ph,
            mt + ph + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{value:.0}</text>"#,
            mt + ph + 18.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        ml + pw / 2.0,
        h - 12.0,
        x_label
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        mt + ph / 2.0,
        mt + ph / 2.0,
        y_label
    );
    // polyline
    let mut points = String::new();
    for (i, &y) in ys.iter().enumerate() {
        if !y.is_finite() {
            continue;
        }
        let px = ml + pw * (i as f64 / (n - 1.0));
        let py = mt + ph * (1.0 - (y - ymin) / (ymax - ymin));
        let _ = write!(points, "{px:.2},{py:.2} ");
    }
    let _ = writeln!(
        svg,
        r##"<polyline fill="none" stroke="#1f6fb2" stroke-width="1.5" points="{}"/>"##,
        points.trim_end()
    );
    let _ = writeln!(svg, "</svg>");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_is_well_formed() {
        let ys: Vec<f64> = (0..100).map(|i| (i as f64 / 10.0).sin()).collect();
        let svg = line_plot("test", "episode", "value", &ys);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("polyline"));
    }

    #[test]
    fn constant_and_empty_series_do_not_panic() {
        assert!(line_plot("c", "x", "y", &[2.0; 10]).contains("polyline"));
        assert!(line_plot("e", "x", "y", &[]).contains("svg"));
    }
}
