//! Static SVG plots of 2D inputs: points sized by mass, the curve, and the
//! stop balls.

use std::fmt::Write as _;

use menger_core::nets::StopRecord;
use menger_core::{FiniteMetricSpace, Measure, PointId};

const SIZE: f64 = 800.0;
const MARGIN: f64 = 40.0;

pub fn render(
    space: &FiniteMetricSpace,
    measure: &Measure,
    path: &[PointId],
    stops: &[StopRecord],
) -> Result<String, String> {
    let coords = space
        .coordinates()
        .ok_or("plotting requires coordinates")?;
    if coords.first().is_some_and(|c| c.len() < 2) {
        return Err("plotting requires at least two coordinates per point".into());
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for c in coords {
        for k in 0..2 {
            lo[k] = lo[k].min(c[k]);
            hi[k] = hi[k].max(c[k]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    // y grows upwards in the data and downwards on screen
    let map = |p: &[f64]| {
        (
            MARGIN + (p[0] - lo[0]) * scale,
            SIZE - MARGIN - (p[1] - lo[1]) * scale,
        )
    };

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();

    out.push_str(r##"<g fill="none" stroke="#d62728" stroke-width="1" stroke-dasharray="4 3">"##);
    out.push('\n');
    for s in stops {
        let (x, y) = map(&coords[s.center.0]);
        writeln!(out, r#"<circle cx="{x:.3}" cy="{y:.3}" r="{:.3}"/>"#, s.radius() * scale).unwrap();
    }
    out.push_str("</g>\n");

    let max_w = measure.weights().iter().copied().fold(0.0, f64::max);
    out.push_str(r##"<g fill="#1f77b4" fill-opacity="0.6">"##);
    out.push('\n');
    for (c, w) in coords.iter().zip(measure.weights()) {
        let (x, y) = map(c);
        let r = if max_w > 0.0 { 1.0 + 3.0 * (w / max_w).sqrt() } else { 1.0 };
        writeln!(out, r#"<circle cx="{x:.3}" cy="{y:.3}" r="{r:.3}"/>"#).unwrap();
    }
    out.push_str("</g>\n");

    if path.len() > 1 {
        let pts: Vec<String> = path
            .iter()
            .map(|p| {
                let (x, y) = map(&coords[p.0]);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        writeln!(
            out,
            r##"<polyline fill="none" stroke="#111111" stroke-width="1.5" points="{}"/>"##,
            pts.join(" ")
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    Ok(out)
}
