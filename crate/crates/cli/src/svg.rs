//! Imbalance-plane plots as standalone SVG.
//!
//! Output is a pure function of the input points: coordinates are printed
//! with a fixed number of decimals and nothing depends on time or locale.

use std::fmt::Write;

use imbal_core::PlanePoint;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 64.0;
const PLOT: f64 = SIZE - 2.0 * MARGIN;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SvgError {
    #[error("no points to plot")]
    Empty,
    #[error("point {label:?} has a value outside [0, 2]")]
    OutOfRange { label: String },
}

/// Axis extent: the unit square, widened to 2 when a point lies beyond 1.
fn extent(points: &[PlanePoint]) -> f64 {
    let max = points.iter().flat_map(|p| [p.delta_ab, p.delta_ba]).fold(0.0, f64::max);
    if max > 1.0 {
        2.0
    } else {
        1.0
    }
}

/// Pixel position of a plane point, `x = Δ(A→B)` and `y = Δ(B→A)`.
pub fn to_pixels(delta_ab: f64, delta_ba: f64, extent: f64) -> (f64, f64) {
    (MARGIN + delta_ab / extent * PLOT, MARGIN + PLOT - delta_ba / extent * PLOT)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn emit_svg(points: &[PlanePoint]) -> Result<String, SvgError> {
    if points.is_empty() {
        return Err(SvgError::Empty);
    }
    if let Some(p) = points.iter().find(|p| ![p.delta_ab, p.delta_ba].iter().all(|v| (0.0..=2.0).contains(v))) {
        return Err(SvgError::OutOfRange { label: p.label.clone() });
    }
    let ext = extent(points);
    let (x0, y1) = to_pixels(0.0, 0.0, ext);
    let (x1, y0) = to_pixels(ext, ext, ext);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect class="axes" x="{x0:.2}" y="{y0:.2}" width="{PLOT:.2}" height="{PLOT:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line class="diagonal" x1="{x0:.2}" y1="{y1:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="gray" stroke-dasharray="4 4"/>"#
    );
    for i in 0..=4 {
        let v = ext * i as f64 / 4.0;
        let (x, y) = to_pixels(v, v, ext);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{v:.2}</text>"#, y1 + 18.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"#, x0 - 6.0, y + 4.0);
    }
    let _ =
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Δ(A→B)</text>"#, (x0 + x1) / 2.0, SIZE - 16.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">Δ(B→A)</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    for p in points {
        let (x, y) = to_pixels(p.delta_ab, p.delta_ba, ext);
        let _ = writeln!(s, r#"<circle class="marker" cx="{x:.2}" cy="{y:.2}" r="4" fill="black"/>"#);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x + 6.0, y - 6.0, escape(&p.label));
    }
    s.push_str("</svg>\n");
    Ok(s)
}
