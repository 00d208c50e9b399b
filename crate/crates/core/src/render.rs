//! SVG figures of laid-out patterns in the Poincare disk.
//!
//! Coordinates are printed with 9 significant digits, so identical inputs
//! give byte-identical documents.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::delaunay::Circle;
use crate::layout::{CirclePattern2D, HypLayout, Tile};

#[derive(Debug, Clone)]
pub struct RenderOptions {
    /// Pixel size of the square figure.
    pub size: u32,
    pub vertex_circles: bool,
    pub face_circles: bool,
    /// Draw tile copies' circles as well as their edges.
    pub tile_circles: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { size: 800, vertex_circles: true, face_circles: false, tile_circles: false }
    }
}

/// Formats with 9 significant digits in plain decimal notation.
pub fn fmt9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (8 - mag).clamp(0, 20) as usize;
    let s = format!("{x:.decimals$}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// Formats with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn pt(z: Complex64) -> String {
    // SVG's y axis points down.
    format!("{} {}", fmt9(z.re), fmt9(-z.im))
}

/// Path data of the geodesic segment from `p` to `q`.
pub fn geodesic_path(p: Complex64, q: Complex64) -> String {
    let cross = p.re * q.im - p.im * q.re;
    let scale = p.norm().max(q.norm()).max(1e-300);
    if cross.abs() <= 1e-12 * scale * scale {
        return format!("M {} L {}", pt(p), pt(q));
    }
    // The geodesic lies on the circle through p, q and the inverse of p.
    let anchor = if p.norm() > 1e-9 { p } else { q };
    let other = if p.norm() > 1e-9 { q } else { p };
    let inv = anchor / anchor.norm_sqr();
    let c = crate::delaunay::circumcircle(anchor, other, inv);
    let sweep = if cross > 0.0 { 0 } else { 1 };
    format!("M {} A {} {} 0 0 {} {}", pt(p), fmt9(c.radius), fmt9(c.radius), sweep, pt(q))
}

fn circle_el(out: &mut String, c: &Circle, class: &str) {
    let _ = writeln!(out, r#"<circle class="{class}" cx="{}" cy="{}" r="{}"/>"#, fmt9(c.center.re), fmt9(-c.center.im), fmt9(c.radius));
}

fn triangle_el(out: &mut String, t: &[Complex64; 3], class: &str) {
    let d = format!(
        "{} {} {}",
        geodesic_path(t[0], t[1]),
        geodesic_path(t[1], t[2]),
        geodesic_path(t[2], t[0])
    );
    let _ = writeln!(out, r#"<path class="{class}" d="{d}"/>"#);
}

fn map_circle(c: &Circle, t: &Tile) -> Circle {
    // Images of three points determine the image circle.
    let pts: Vec<Complex64> = (0..3).map(|k| t.isometry.apply(c.center + Complex64::from_polar(c.radius, k as f64 * 2.0 * std::f64::consts::PI / 3.0))).collect();
    crate::delaunay::circumcircle(pts[0], pts[1], pts[2])
}

/// Renders the fundamental domain, tile copies and circles.
pub fn render_svg(pattern: &CirclePattern2D, layout: &HypLayout, copies: &[Tile], opts: &RenderOptions) -> String {
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{0}" height="{0}" viewBox="-1.02 -1.02 2.04 2.04">"#,
        opts.size
    );
    let _ = writeln!(
        out,
        "<style>path,circle{{fill:none;vector-effect:non-scaling-stroke}} .disk{{stroke:#000;stroke-width:1.5}} .tile{{stroke:#999;stroke-width:0.5}} .domain{{stroke:#000;stroke-width:1}} .boundary{{stroke:#c00;stroke-width:2}} .vertex{{stroke:#06c;stroke-width:1}} .face{{stroke:#393;stroke-width:0.7}} .tilecircle{{stroke:#9bd;stroke-width:0.4}}</style>"
    );
    let _ = writeln!(out, r#"<defs><clipPath id="disk"><circle cx="0" cy="0" r="1"/></clipPath></defs>"#);
    let _ = writeln!(out, r#"<circle class="disk" cx="0" cy="0" r="1"/>"#);
    let _ = writeln!(out, r#"<g clip-path="url(#disk)">"#);
    let domain = layout.triangles();
    let _ = writeln!(out, "<g id=\"tiles\">");
    for t in copies.iter().filter(|t| !t.word.is_empty()) {
        for tri in &domain {
            let img = [t.isometry.apply(tri[0]), t.isometry.apply(tri[1]), t.isometry.apply(tri[2])];
            triangle_el(&mut out, &img, "tile");
        }
        if opts.tile_circles {
            for vc in pattern.vertex_circles.iter().filter(|v| v.radius > 0.0) {
                circle_el(&mut out, &map_circle(&vc.euclid, t), "tilecircle");
            }
        }
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, "<g id=\"domain\">");
    for tri in &domain {
        triangle_el(&mut out, tri, "domain");
    }
    for pr in &layout.pairings {
        for &(f, i) in &pr.sides {
            if let Some(p) = layout.positions[f] {
                let _ = writeln!(out, r#"<path class="boundary" d="{}"/>"#, geodesic_path(p[i], p[(i + 1) % 3]));
            }
        }
    }
    for &(f, i) in &layout.boundary {
        if let Some(p) = layout.positions[f] {
            let _ = writeln!(out, r#"<path class="boundary" d="{}"/>"#, geodesic_path(p[i], p[(i + 1) % 3]));
        }
    }
    let _ = writeln!(out, "</g>");
    if opts.vertex_circles {
        let _ = writeln!(out, "<g id=\"vertex-circles\">");
        for vc in pattern.vertex_circles.iter().filter(|v| v.radius > 0.0) {
            circle_el(&mut out, &vc.euclid, "vertex");
        }
        let _ = writeln!(out, "</g>");
    }
    if opts.face_circles {
        let _ = writeln!(out, "<g id=\"face-circles\">");
        for fc in &pattern.face_circles {
            circle_el(&mut out, &fc.euclid, "face");
        }
        let _ = writeln!(out, "</g>");
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, "</svg>");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_digit_format() {
        assert_eq!(fmt9(0.0), "0");
        assert_eq!(fmt9(-0.0), "0");
        assert_eq!(fmt9(1.0), "1");
        assert_eq!(fmt9(0.123456789123), "0.123456789");
        assert_eq!(fmt9(-12.5), "-12.5");
        assert_eq!(fmt9(1.5e-12), "0.0000000000015");
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn geodesics() {
        let straight = geodesic_path(Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0));
        assert!(straight.contains(" L "));
        let arc = geodesic_path(Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.5));
        assert!(arc.contains(" A "));
    }

    #[test]
    fn empty_document_is_valid() {
        let layout = HypLayout {
            positions: vec![],
            frames: vec![],
            seed_face: 0,
            parent: vec![],
            interior: vec![],
            pairings: vec![],
            boundary: vec![],
        };
        let svg = render_svg(&CirclePattern2D::default(), &layout, &[], &RenderOptions::default());
        assert!(svg.starts_with("<?xml"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg, render_svg(&CirclePattern2D::default(), &layout, &[], &RenderOptions::default()));
    }
}
