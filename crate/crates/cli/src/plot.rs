//! Boundary sampling of planar sets and a minimal SVG writer.

use std::f64::consts::PI;
use std::fmt::Write as _;

use invkit::{HPolyhedron, PiecewiseSemiEllipsoid, Result};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub label: String,
    pub points: Vec<[f64; 2]>,
}

/// `d(θ)/gauge(S, d(θ))` at `θ = 2πk/n`; directions of infinite extent are skipped.
pub fn boundary_points(set: &PiecewiseSemiEllipsoid, n: usize) -> Result<Vec<[f64; 2]>> {
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let t = 2.0 * PI * k as f64 / n as f64;
        let d = DVector::from_column_slice(&[t.cos(), t.sin()]);
        let g = set.gauge(&d)?;
        if g.is_finite() && g.value() > 0.0 {
            let x = d / g.value();
            out.push([x[0], x[1]]);
        }
    }
    Ok(out)
}

pub fn polytope_points(p: &HPolyhedron, n: usize) -> Result<Vec<[f64; 2]>> {
    boundary_points(&PiecewiseSemiEllipsoid::from_polytope(p)?, n)
}

const STYLES: [&str; 4] = [
    "fill:none;stroke:#444444;stroke-width:1.5;stroke-dasharray:6,4",
    "fill:none;stroke:#1f77b4;stroke-width:1.5",
    "fill:#d62728;fill-opacity:0.25;stroke:#d62728;stroke-width:2",
    "fill:none;stroke:#2ca02c;stroke-width:1.5;stroke-dasharray:2,2",
];

/// SVG 1.1 document with one closed polygon per curve, in the given order.
pub fn to_svg(curves: &[Curve]) -> String {
    let all = curves.iter().flat_map(|c| c.points.iter());
    let r = all
        .map(|p| p[0].abs().max(p[1].abs()))
        .fold(1e-9_f64, f64::max)
        * 1.1;
    let size = 480.0;
    let scale = size / (2.0 * r);
    let map = |p: &[f64; 2]| ((p[0] + r) * scale, (r - p[1]) * scale);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#
    );
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let (ox, oy) = map(&[0.0, 0.0]);
    let _ = writeln!(
        s,
        r##"  <line x1="0" y1="{oy:.3}" x2="{size}" y2="{oy:.3}" style="stroke:#bbbbbb;stroke-width:0.5"/>"##
    );
    let _ = writeln!(
        s,
        r##"  <line x1="{ox:.3}" y1="0" x2="{ox:.3}" y2="{size}" style="stroke:#bbbbbb;stroke-width:0.5"/>"##
    );
    for (k, c) in curves.iter().enumerate() {
        let pts: Vec<String> = c
            .points
            .iter()
            .map(|p| {
                let (x, y) = map(p);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"  <polygon points="{}" style="{}"><title>{}</title></polygon>"#,
            pts.join(" "),
            STYLES[k % STYLES.len()],
            escape(&c.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
