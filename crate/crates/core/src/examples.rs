//! Built-in example data sets.
//!
//! The Lawson surface is the genus-2 double cover of the sphere branched over
//! the six sixth roots of unity. Cutting the sphere along the six meridians
//! through the midpoints between the roots gives six lunes; each lifts to a
//! square whose corners are the two preimages of each pole. Vertices are
//! `0, 1` (north pole) and `2, 3` (south pole).
//!
//! The same curve `μ² = λ⁶ − 1` is also built from points on the sphere: the
//! Delaunay pattern of the six roots, the six midpoints between them and the
//! two poles, lifted through the double cover branched at the roots.
//!
//! The octahedron examples are sphere data for the doubling construction,
//! with the north pole `4` as the vertex at infinity.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::branchcover::{hyperelliptic, LiftedAngleData};
use crate::cellcomplex::{CellComplex, Regularity};
use crate::data::AngleData;
use crate::delaunay::{from_stereographic, spherical_delaunay, DelaunayPattern, SpherePoint};

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 5] = ["lawson-squares", "lawson-centers", "lawson-curve", "octahedron", "octahedron-pi2"];

/// The six squares: face cycles and side labels.
fn lawson_square_gluing() -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let label = |k: usize, sheet: usize| 2 * (k % 6) + sheet;
    let mut faces = Vec::new();
    let mut labels = Vec::new();
    for k in 0..6 {
        faces.push(if k % 2 == 0 { vec![2, 1, 3, 0] } else { vec![2, 0, 3, 1] });
        labels.push(vec![label(k + 5, 0), label(k, 1), label(k + 5, 1), label(k, 0)]);
    }
    (faces, labels)
}

/// Six unit squares, all four vertices hyper-ideal, right angles on every edge.
pub fn lawson_squares() -> AngleData {
    let (faces, labels) = lawson_square_gluing();
    let c = CellComplex::from_glued(4, faces, labels, vec![true; 4], Regularity::Regular).expect("valid gluing");
    let theta = vec![PI / 2.0; c.n_edges()];
    AngleData::uniform(c, theta).expect("consistent sizes")
}

/// The squares with an ideal vertex at each centre. The square sides become
/// redundant, leaving quadrilaterals `(centre, corner, centre, corner)` with
/// right angles on every spoke.
pub fn lawson_centers() -> AngleData {
    let sq = lawson_squares().complex;
    let mut faces = Vec::new();
    for e in sq.edges() {
        let (f, i) = e.sides[0];
        let (g, _) = e.sides[1];
        let u = sq.face(f)[i];
        let v = sq.face(f)[(i + 1) % 4];
        faces.push(vec![4 + f, u, 4 + g, v]);
    }
    let c = crate::cellcomplex::build_complex(&crate::cellcomplex::ComplexInput {
        faces,
        v1: vec![0, 1, 2, 3],
        identifications: Vec::new(),
        regularity: Some(Regularity::Regular),
    })
    .expect("valid complex");
    let theta = vec![PI / 2.0; c.n_edges()];
    AngleData::uniform(c, theta).expect("consistent sizes")
}

/// Roots `0..6`, midpoints `6..12`, then `λ = 0` and `λ = ∞`.
pub fn curve_points() -> Vec<SpherePoint> {
    let on_circle = |k: usize| from_stereographic(Some(Complex64::from_polar(1.0, k as f64 * PI / 6.0)));
    let mut pts: Vec<SpherePoint> = (0..6).map(|k| on_circle(2 * k)).collect();
    pts.extend((0..6).map(|k| on_circle(2 * k + 1)));
    pts.push(from_stereographic(Some(Complex64::new(0.0, 0.0))));
    pts.push(from_stereographic(None));
    pts
}

/// Delaunay pattern of [`curve_points`].
pub fn curve_base() -> DelaunayPattern {
    spherical_delaunay(&curve_points()).expect("distinct unit points")
}

/// Genus-2 lift of [`curve_base`] branched over the six roots.
pub fn lawson_curve() -> LiftedAngleData {
    hyperelliptic(&curve_base(), &[0, 1, 2, 3, 4, 5]).expect("valid cover")
}

/// Sphere data for the doubling construction.
#[derive(Debug, Clone)]
pub struct SphereExample {
    pub complex: CellComplex,
    pub theta: Vec<f64>,
    pub k_inf: usize,
}

fn octahedron_complex(v1: &[usize]) -> CellComplex {
    let pts = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]];
    let c = spherical_delaunay(&pts).expect("octahedron").complex;
    c.with_v1((0..6).map(|k| v1.contains(&k)).collect())
}

/// Both poles hyper-ideal, `π/3` on the edges at the poles and `2π/3` on the
/// equator.
pub fn octahedron() -> SphereExample {
    let complex = octahedron_complex(&[4, 5]);
    let theta = complex
        .edges()
        .iter()
        .map(|e| if e.ends.contains(&4) || e.ends.contains(&5) { PI / 3.0 } else { 2.0 * PI / 3.0 })
        .collect();
    SphereExample { complex, theta, k_inf: 4 }
}

/// Right angles everywhere with only the north pole hyper-ideal. The loop
/// around the north pole is tight, so no pattern realizes this data.
pub fn octahedron_right_angles() -> SphereExample {
    let complex = octahedron_complex(&[4]);
    let theta = vec![PI / 2.0; complex.n_edges()];
    SphereExample { complex, theta, k_inf: 4 }
}

#[derive(Debug, Clone)]
pub enum Example {
    Surface(AngleData),
    Sphere(SphereExample),
}

pub fn by_name(name: &str) -> Option<Example> {
    Some(match name {
        "lawson-squares" => Example::Surface(lawson_squares()),
        "lawson-centers" => Example::Surface(lawson_centers()),
        "lawson-curve" => Example::Surface(lawson_curve().to_angle_data().expect("consistent sizes")),
        "octahedron" => Example::Sphere(octahedron()),
        "octahedron-pi2" => Example::Sphere(octahedron_right_angles()),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lawson_squares_shape() {
        let d = lawson_squares();
        let c = &d.complex;
        assert_eq!((c.n_vertices(), c.n_edges(), c.n_faces()), (4, 12, 6));
        assert_eq!(c.genus(), 2);
        for v in 0..4 {
            assert_eq!(c.vertex_degree(v), 6);
        }
        let t = c.subtriangulate();
        assert_eq!(t.complex.n_edges(), 18);
        assert_eq!(t.complex.n_faces(), 12);
    }

    #[test]
    fn lawson_centers_shape() {
        let d = lawson_centers();
        let c = &d.complex;
        assert_eq!((c.n_vertices(), c.n_edges(), c.n_faces()), (10, 24, 12));
        assert_eq!(c.genus(), 2);
        for v in 4..10 {
            assert_eq!(c.vertex_degree(v), 4);
            assert!(!c.is_v1(v));
        }
    }

    #[test]
    fn every_name_resolves() {
        for name in NAMES {
            assert!(by_name(name).is_some(), "{name}");
        }
        assert!(by_name("nope").is_none());
    }

    #[test]
    fn curve_shape() {
        let l = lawson_curve();
        assert_eq!(l.genus(), 2);
        let d = l.to_angle_data().unwrap();
        assert!(d.cone.iter().all(|&t| t == 2.0 * PI));
        assert_eq!(d.complex.v1_vertices().len(), 6);
    }

    #[test]
    fn octahedron_data() {
        let o = octahedron();
        assert!(o.complex.is_v1(4) && o.complex.is_v1(5));
        // Equality at the equator vertices.
        for k in 0..4 {
            let s: f64 = o.complex.vertex_edges(k).iter().map(|&e| PI - o.theta[e]).sum();
            assert!((s - 2.0 * PI).abs() < 1e-12);
        }
    }
}
