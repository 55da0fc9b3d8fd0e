//! Deterministic SVG line chart of predicted against actual flow.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;

fn polyline(values: &[f64], lo: f64, hi: f64) -> String {
    let span = if hi > lo { hi - lo } else { 1.0 };
    let step = if values.len() > 1 {
        (WIDTH - 2.0 * MARGIN) / (values.len() - 1) as f64
    } else {
        0.0
    };
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = MARGIN + step * i as f64;
            let y = HEIGHT - MARGIN - (v - lo) / span * (HEIGHT - 2.0 * MARGIN);
            format!("{x:.2},{y:.2}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Two labelled series over a shared time axis.
pub fn forecast_svg(predicted: &[f64], actual: &[f64], title: &str) -> Result<String> {
    if predicted.len() != actual.len() {
        return Err(Error::dim("forecast_svg", &[predicted.len()], &[actual.len()]));
    }
    if predicted.is_empty() {
        return Err(Error::Domain("nothing to plot: series are empty".into()));
    }
    let all = predicted.iter().chain(actual);
    let lo = all.clone().fold(f64::INFINITY, |a, v| a.min(*v));
    let hi = all.fold(f64::NEG_INFINITY, |a, v| a.max(*v));
    let title = title.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{MARGIN}" y="24" font-family="sans-serif" font-size="14">{title}</text>"#);
    let (x0, x1, y0) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{MARGIN}" x2="{x0}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">time step</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(svg, r#"<text x="4" y="{}" font-family="sans-serif" font-size="11">{lo:.1}</text>"#, y0);
    let _ = writeln!(svg, r#"<text x="4" y="{}" font-family="sans-serif" font-size="11">{hi:.1}</text>"#, MARGIN + 4.0);
    for (name, values, colour, y) in [("actual", actual, "#1f77b4", 40.0), ("predicted", predicted, "#d62728", 56.0)] {
        let _ = writeln!(
            svg,
            r#"<polyline id="{name}" fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            polyline(values, lo, hi)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{y}" font-family="sans-serif" font-size="12" fill="{colour}">{name}</text>"#,
            WIDTH - MARGIN - 80.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn render_forecast_svg(predicted: &[f64], actual: &[f64], title: &str, path: &Path) -> Result<()> {
    let svg = forecast_svg(predicted, actual, title)?;
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(svg: &str, id: &str) -> String {
        let start = svg.find(&format!("id=\"{id}\"")).unwrap();
        let rest = &svg[start..];
        let p = rest.find("points=\"").unwrap() + 8;
        rest[p..p + rest[p..].find('"').unwrap()].to_string()
    }

    #[test]
    fn empty_series_rejected() {
        assert!(matches!(forecast_svg(&[], &[], "x"), Err(Error::Domain(_))));
        assert!(forecast_svg(&[1.0], &[1.0, 2.0], "x").is_err());
    }

    #[test]
    fn identical_series_coincide() {
        let v = [3.0, 5.0, 4.0, 9.0];
        let svg = forecast_svg(&v, &v, "S001").unwrap();
        assert_eq!(points(&svg, "actual"), points(&svg, "predicted"));
        assert!(svg.contains(">actual<") && svg.contains(">predicted<"));
    }

    #[test]
    fn bytes_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
        render_forecast_svg(&[1.0, 2.0], &[1.5, 2.5], "t", &a).unwrap();
        render_forecast_svg(&[1.0, 2.0], &[1.5, 2.5], "t", &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert!(render_forecast_svg(&[1.0], &[1.0], "t", &dir.path().join("no/such/dir.svg")).is_err());
    }
}
