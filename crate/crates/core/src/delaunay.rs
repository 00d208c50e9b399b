//! Delaunay circle patterns: on the round sphere via the convex hull, and on
//! flat cone surfaces via intrinsic edge flips.
//!
//! Intersection angles follow the lens convention: the angle between the arcs
//! bounding the common region of two face circles. Cocircular neighbours give
//! `pi`; for planar circles `cos theta = (d^2 - r1^2 - r2^2) / (2 r1 r2)`.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cellcomplex::{build_complex, CellComplex, ComplexError, ComplexInput, Regularity};
use crate::data::AngleData;

/// Tolerance for coplanar facets and cocircular flips.
pub const COCIRCULAR_TOL: f64 = 1e-9;
/// Points closer than this are rejected as duplicates.
pub const DUPLICATE_TOL: f64 = 1e-12;
const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DelaunayError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("points {0} and {1} coincide")]
    DuplicatePoint(usize, usize),
    #[error("flipping did not terminate within {budget} flips")]
    NonConvergence { budget: usize },
    #[error("circles do not intersect")]
    Disjoint,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

pub type SpherePoint = [f64; 3];

/// A Delaunay cell complex with intersection angles per edge.
#[derive(Debug, Clone)]
pub struct DelaunayPattern {
    pub complex: CellComplex,
    pub theta: Vec<f64>,
    /// Cone angle of the input metric per vertex (`2 pi` on the sphere).
    pub metric_cone: Vec<f64>,
    /// Vertex pairs of diagonals removed when merging cocircular faces.
    pub redundant: Vec<[usize; 2]>,
    /// Number of flips performed (intrinsic construction only).
    pub flips: usize,
}

impl DelaunayPattern {
    /// Angle data for uniformization: the target cone angle is `2 pi` at
    /// every vertex, whatever the input metric.
    pub fn into_angle_data(self) -> Result<AngleData, ComplexError> {
        AngleData::uniform(self.complex, self.theta)
    }
}

// ---------------------------------------------------------------------------
// Circles

/// A circle in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
}

/// The section of the unit sphere by the plane `normal . x = offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereCircle {
    pub normal: [f64; 3],
    pub offset: f64,
}

/// Lens angle of two intersecting planar circles, in `(0, pi]`.
pub fn circle_intersection_angle(c1: &Circle, c2: &Circle) -> Result<f64, DelaunayError> {
    let (r1, r2) = (c1.radius, c2.radius);
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(DelaunayError::InvalidInput("radius must be positive".into()));
    }
    let d = (c1.center - c2.center).norm();
    let cos = (d * d - r1 * r1 - r2 * r2) / (2.0 * r1 * r2);
    angle_from_cos(cos)
}

/// Lens angle of two intersecting circles on the unit sphere, each oriented
/// towards the side `normal . x < offset`.
pub fn sphere_circle_angle(c1: &SphereCircle, c2: &SphereCircle) -> Result<f64, DelaunayError> {
    let (n, d) = (unit(c1.normal), c1.offset);
    let (m, e) = (unit(c2.normal), c2.offset);
    if d.abs() >= 1.0 || e.abs() >= 1.0 {
        return Err(DelaunayError::InvalidInput("plane misses the sphere".into()));
    }
    let cos = (d * e - dot(n, m)) / ((1.0 - d * d).sqrt() * (1.0 - e * e).sqrt());
    angle_from_cos(cos)
}

fn angle_from_cos(cos: f64) -> Result<f64, DelaunayError> {
    if !cos.is_finite() || cos > 1.0 + 1e-12 || cos < -1.0 - 1e-9 {
        return Err(DelaunayError::Disjoint);
    }
    if cos >= 1.0 {
        return Err(DelaunayError::Disjoint);
    }
    Ok(cos.max(-1.0).acos())
}

// ---------------------------------------------------------------------------
// Point input

/// A point given either as a unit 3-vector or in the stereographic chart.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChartPoint {
    Complex([f64; 2]),
    Infinity(InfinityToken),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum InfinityToken {
    #[serde(rename = "inf")]
    Inf,
}

/// Point-set file: either `{"points": [[x,y,z], ...]}` or
/// `{"complex": [[re,im], "inf", ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSetInput {
    Points { points: Vec<[f64; 3]> },
    Complex { complex: Vec<ChartPoint> },
}

impl PointSetInput {
    pub fn to_sphere(&self) -> Vec<SpherePoint> {
        match self {
            PointSetInput::Points { points } => points.clone(),
            PointSetInput::Complex { complex } => complex
                .iter()
                .map(|p| match p {
                    ChartPoint::Complex([re, im]) => from_stereographic(Some(Complex64::new(*re, *im))),
                    ChartPoint::Infinity(_) => from_stereographic(None),
                })
                .collect(),
        }
    }
}

/// Inverse stereographic projection; `None` is the point at infinity, sent to
/// the north pole. Inverse of `z = (x + i y) / (1 - x3)`.
pub fn from_stereographic(w: Option<Complex64>) -> SpherePoint {
    match w {
        None => [0.0, 0.0, 1.0],
        Some(w) => {
            let n2 = w.norm_sqr();
            let s = n2 + 1.0;
            [2.0 * w.re / s, 2.0 * w.im / s, (n2 - 1.0) / s]
        }
    }
}

/// Stereographic projection from the north pole; `None` at the pole.
pub fn to_stereographic(p: SpherePoint) -> Option<Complex64> {
    let den = 1.0 - p[2];
    if den.abs() < 1e-300 {
        None
    } else {
        Some(Complex64::new(p[0] / den, p[1] / den))
    }
}

// ---------------------------------------------------------------------------
// Spherical Delaunay

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn unit(a: [f64; 3]) -> [f64; 3] {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Outward unit normal and offset of the plane through three points.
fn plane(p: &[SpherePoint], a: usize, b: usize, c: usize) -> ([f64; 3], f64) {
    let n = unit(cross(sub(p[b], p[a]), sub(p[c], p[a])));
    (n, dot(n, p[a]))
}

/// Delaunay subdivision of points on the unit sphere: the faces of their
/// convex hull, with coplanar facets merged into polygons.
pub fn spherical_delaunay(points: &[SpherePoint]) -> Result<DelaunayPattern, DelaunayError> {
    let n = points.len();
    if n < 4 {
        return Err(DelaunayError::DegenerateInput(format!("{n} points; at least 4 required")));
    }
    for (i, p) in points.iter().enumerate() {
        if p.iter().any(|x| !x.is_finite()) || (norm(*p) - 1.0).abs() > UNIT_TOL {
            return Err(DelaunayError::InvalidInput(format!("point {i} is not a unit vector")));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if norm(sub(points[i], points[j])) < DUPLICATE_TOL {
                return Err(DelaunayError::DuplicatePoint(i, j));
            }
        }
    }
    let faces = hull_faces(points)?;
    let complex = CellComplex::from_faces(faces, &[])?;
    let circles: Vec<SphereCircle> = complex
        .faces()
        .iter()
        .map(|f| {
            let (normal, offset) = plane(points, f[0], f[1], f[2]);
            SphereCircle { normal, offset }
        })
        .collect();
    let mut theta = Vec::with_capacity(complex.n_edges());
    for e in complex.edges() {
        theta.push(sphere_circle_angle(&circles[e.sides[0].0], &circles[e.sides[1].0])?);
    }
    let mut redundant = Vec::new();
    for f in complex.faces() {
        for k in 2..f.len() - 1 {
            redundant.push([f[0], f[k]]);
        }
    }
    let cone = vec![2.0 * PI; n];
    Ok(DelaunayPattern { complex, theta, metric_cone: cone, redundant, flips: 0 })
}

/// Gift wrapping over hull edges. Faces are ccw seen from outside.
fn hull_faces(p: &[SpherePoint]) -> Result<Vec<Vec<usize>>, DelaunayError> {
    let n = p.len();
    // The nearest neighbour of point 0 spans a hull edge.
    let b = (1..n)
        .min_by(|&x, &y| norm(sub(p[x], p[0])).total_cmp(&norm(sub(p[y], p[0]))))
        .expect("n >= 4");
    let mut faces: Vec<Vec<usize>> = Vec::new();
    let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
    let mut queue = vec![(b, 0)];
    while let Some((x, y)) = queue.pop() {
        // Find the face containing the directed side y -> x.
        if owner.contains_key(&(y, x)) {
            continue;
        }
        let face = wrap(p, y, x)?;
        if face.len() == n {
            return Err(DelaunayError::DegenerateInput("all points lie on one circle".into()));
        }
        let id = faces.len();
        for k in 0..face.len() {
            let s = (face[k], face[(k + 1) % face.len()]);
            if owner.insert(s, id).is_some() {
                return Err(DelaunayError::DegenerateInput("hull facets overlap; points are nearly cocircular".into()));
            }
            queue.push(s);
        }
        faces.push(face);
        if faces.len() > 2 * n {
            return Err(DelaunayError::DegenerateInput("hull construction did not close".into()));
        }
    }
    Ok(faces)
}

/// The hull face containing the directed side `a -> b`, as a ccw polygon
/// starting at `a`.
fn wrap(p: &[SpherePoint], a: usize, b: usize) -> Result<Vec<usize>, DelaunayError> {
    let n = p.len();
    let mut c = (0..n).find(|&k| k != a && k != b).expect("n >= 3");
    for k in 0..n {
        if k == a || k == b || k == c {
            continue;
        }
        let nrm = cross(sub(p[b], p[a]), sub(p[c], p[a]));
        if dot(sub(p[k], p[a]), nrm) > 0.0 {
            c = k;
        }
    }
    let (nrm, off) = plane(p, a, b, c);
    let mut on: Vec<usize> = (0..n).filter(|&k| (dot(nrm, p[k]) - off).abs() <= COCIRCULAR_TOL).collect();
    for k in [a, b, c] {
        if !on.contains(&k) {
            on.push(k);
        }
    }
    // Sort around the normal, counterclockwise seen from outside.
    let centre = [nrm[0] * off, nrm[1] * off, nrm[2] * off];
    let e1 = unit(sub(p[a], centre));
    let e2 = cross(nrm, e1);
    let ang = |k: usize| {
        let v = sub(p[k], centre);
        let t = dot(v, e2).atan2(dot(v, e1));
        if t < -1e-15 {
            t + 2.0 * PI
        } else {
            t.max(0.0)
        }
    };
    on.sort_by(|&x, &y| ang(x).total_cmp(&ang(y)).then(x.cmp(&y)));
    if on[0] != a || on[1] != b {
        return Err(DelaunayError::DegenerateInput(format!("hull side {a}->{b} is not a polygon side")));
    }
    Ok(on)
}

/// A projection pole far from every face circle, chosen among Fibonacci
/// sphere samples.
pub fn stereographic_pole(circles: &[SphereCircle]) -> SpherePoint {
    const SAMPLES: usize = 257;
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut best = ([0.0, 0.0, 1.0], f64::NEG_INFINITY);
    for k in 0..SAMPLES {
        let z = 1.0 - 2.0 * (k as f64 + 0.5) / SAMPLES as f64;
        let r = (1.0 - z * z).sqrt();
        let t = golden * k as f64;
        let cand = [r * t.cos(), r * t.sin(), z];
        let clearance = circles
            .iter()
            .map(|c| (dot(unit(c.normal), cand) - c.offset).abs())
            .fold(f64::INFINITY, f64::min);
        if clearance > best.1 {
            best = (cand, clearance);
        }
    }
    best.0
}

/// Intersection angles recomputed through a stereographic projection: each
/// face circle is fitted through three projected vertices and the planar lens
/// angle measured, flipping orientation when the pole lies in a face's cap.
pub fn stereographic_angles(points: &[SpherePoint], pattern: &DelaunayPattern) -> Result<Vec<f64>, DelaunayError> {
    let c = &pattern.complex;
    let circles: Vec<SphereCircle> = c
        .faces()
        .iter()
        .map(|f| {
            let (normal, offset) = plane(points, f[0], f[1], f[2]);
            SphereCircle { normal, offset }
        })
        .collect();
    let pole = stereographic_pole(&circles);
    // Orthonormal frame with the pole as third axis.
    let helper = if pole[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = unit(cross(helper, pole));
    let e2 = cross(pole, e1);
    let project = |x: SpherePoint| {
        let q = [dot(x, e1), dot(x, e2), dot(x, pole)];
        to_stereographic(q).expect("pole avoids every input point")
    };
    let planar: Vec<(Circle, f64)> = c
        .faces()
        .iter()
        .zip(&circles)
        .map(|(f, sc)| {
            let circ = circumcircle(project(points[f[0]]), project(points[f[1]]), project(points[f[2]]));
            let sign = if dot(unit(sc.normal), pole) > sc.offset { 1.0 } else { -1.0 };
            (circ, sign)
        })
        .collect();
    let mut out = Vec::with_capacity(c.n_edges());
    for e in c.edges() {
        let (c1, s1) = planar[e.sides[0].0];
        let (c2, s2) = planar[e.sides[1].0];
        let d = (c1.center - c2.center).norm();
        let cos = s1 * s2 * (d * d - c1.radius * c1.radius - c2.radius * c2.radius) / (2.0 * c1.radius * c2.radius);
        out.push(angle_from_cos(cos)?);
    }
    Ok(out)
}

/// Circle through three planar points.
pub fn circumcircle(a: Complex64, b: Complex64, c: Complex64) -> Circle {
    let (b, c) = (b - a, c - a);
    let d = 2.0 * (b.re * c.im - b.im * c.re);
    let (nb, nc) = (b.norm_sqr(), c.norm_sqr());
    let ux = (c.im * nb - b.im * nc) / d;
    let uy = (b.re * nc - c.re * nb) / d;
    let u = Complex64::new(ux, uy);
    Circle { center: a + u, radius: u.norm() }
}

// ---------------------------------------------------------------------------
// Flat cone surfaces

/// A triangulated surface with a Euclidean length per edge.
#[derive(Debug, Clone)]
pub struct FlatConeSurface {
    pub complex: CellComplex,
    pub lengths: Vec<f64>,
}

/// Serialized flat surface: a triangulated complex plus `lengths` per edge.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FlatSurfaceInput {
    #[serde(flatten)]
    pub complex: ComplexInput,
    pub lengths: Vec<f64>,
}

impl FlatConeSurface {
    pub fn new(complex: CellComplex, lengths: Vec<f64>) -> Result<Self, DelaunayError> {
        if lengths.len() != complex.n_edges() {
            return Err(DelaunayError::InvalidInput(format!("{} lengths for {} edges", lengths.len(), complex.n_edges())));
        }
        for f in 0..complex.n_faces() {
            let es = complex.face_edges(f);
            if es.len() != 3 {
                return Err(DelaunayError::InvalidInput(format!("face {f} is not a triangle")));
            }
            let l = [lengths[es[0]], lengths[es[1]], lengths[es[2]]];
            if l.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(DelaunayError::InvalidInput(format!("face {f} has a non-positive length")));
            }
            for k in 0..3 {
                if l[k] >= l[(k + 1) % 3] + l[(k + 2) % 3] {
                    return Err(DelaunayError::InvalidInput(format!("face {f} violates the triangle inequality")));
                }
            }
        }
        Ok(FlatConeSurface { complex, lengths })
    }

    pub fn from_input(input: &FlatSurfaceInput) -> Result<Self, DelaunayError> {
        let complex = build_complex(&input.complex)?;
        Self::new(complex, input.lengths.clone())
    }

    /// Sum of corner angles at each vertex.
    pub fn cone_angles(&self) -> Vec<f64> {
        let mut cone = vec![0.0; self.complex.n_vertices()];
        for (f, vs) in self.complex.faces().iter().enumerate() {
            let es = self.complex.face_edges(f);
            let l = [self.lengths[es[0]], self.lengths[es[1]], self.lengths[es[2]]];
            for k in 0..3 {
                cone[vs[k]] += corner_angle(l, k);
            }
        }
        cone
    }
}

/// Euclidean angle at position `k` of a triangle whose side `i` runs from
/// vertex `i` to vertex `i + 1`; it is opposite side `k + 1`.
pub fn corner_angle(l: [f64; 3], k: usize) -> f64 {
    let c = l[(k + 1) % 3];
    let a = l[k];
    let b = l[(k + 2) % 3];
    let s = 0.5 * (a + b + c);
    let num = (s - a) * (s - b);
    let den = s * (s - c);
    if num <= 0.0 {
        return 0.0;
    }
    if den <= 0.0 {
        return PI;
    }
    2.0 * (num / den).sqrt().atan()
}

/// Mutable triangle mesh used during flipping.
struct Mesh {
    verts: Vec<[usize; 3]>,
    edges_of: Vec<[usize; 3]>,
    sides: Vec<[(usize, usize); 2]>,
    len: Vec<f64>,
}

impl Mesh {
    fn lengths(&self, f: usize) -> [f64; 3] {
        let e = self.edges_of[f];
        [self.len[e[0]], self.len[e[1]], self.len[e[2]]]
    }

    fn opposite_sum(&self, e: usize) -> f64 {
        self.sides[e].iter().map(|&(f, i)| corner_angle(self.lengths(f), (i + 2) % 3)).sum()
    }

    fn flippable(&self, e: usize) -> bool {
        self.sides[e][0].0 != self.sides[e][1].0
    }

    fn violation(&self, e: usize) -> Option<f64> {
        let v = self.opposite_sum(e) - PI;
        (v > COCIRCULAR_TOL && self.flippable(e)).then_some(v)
    }

    fn violations(&self) -> usize {
        (0..self.len.len()).filter(|&e| self.violation(e).is_some()).count()
    }

    /// Replaces edge `e` by the other diagonal of its quadrilateral. Returns
    /// the four edges bounding the quadrilateral.
    fn flip(&mut self, e: usize) -> [usize; 4] {
        let [(f, i), (g, j)] = self.sides[e];
        let vf = self.verts[f];
        let vg = self.verts[g];
        let (u, v, x) = (vf[i], vf[(i + 1) % 3], vf[(i + 2) % 3]);
        let y = vg[(j + 2) % 3];
        let ef = self.edges_of[f];
        let eg = self.edges_of[g];
        let (e1, e2) = (ef[(i + 1) % 3], ef[(i + 2) % 3]);
        let (e3, e4) = (eg[(j + 1) % 3], eg[(j + 2) % 3]);
        let angle_u = corner_angle(self.lengths(f), i) + corner_angle(self.lengths(g), (j + 1) % 3);
        let (lx, ly) = (self.len[e2], self.len[e3]);
        let new_len = (lx * lx + ly * ly - 2.0 * lx * ly * angle_u.cos()).max(0.0).sqrt();
        // Old side positions and where they move.
        let moves = [
            ((f, (i + 2) % 3), (f, 0)), // e2: x -> u
            ((g, (j + 1) % 3), (f, 1)), // e3: u -> y
            ((g, (j + 2) % 3), (g, 0)), // e4: y -> v
            ((f, (i + 1) % 3), (g, 1)), // e1: v -> x
        ];
        let mut touched: Vec<usize> = vec![e1, e2, e3, e4];
        touched.sort_unstable();
        touched.dedup();
        for &t in &touched {
            for s in self.sides[t].iter_mut() {
                if let Some(&(_, to)) = moves.iter().find(|(from, _)| from == s) {
                    *s = to;
                }
            }
        }
        self.verts[f] = [x, u, y];
        self.edges_of[f] = [e2, e3, e];
        self.verts[g] = [y, v, x];
        self.edges_of[g] = [e4, e1, e];
        self.sides[e] = [(f, 2), (g, 2)];
        self.len[e] = new_len;
        [e1, e2, e3, e4]
    }
}

/// Outcome details of the flip algorithm.
#[derive(Debug, Clone, Default)]
pub struct FlipLog {
    /// Flipped edge ids in order.
    pub flipped: Vec<usize>,
    /// Number of violating edges after each flip.
    pub violation_counts: Vec<usize>,
}

#[derive(PartialEq)]
struct Key(f64);
impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Intrinsic Delaunay triangulation of a flat cone surface by edge flips,
/// with cocircular triangles merged into polygonal faces.
pub fn intrinsic_delaunay_flat(s: &FlatConeSurface) -> Result<DelaunayPattern, DelaunayError> {
    intrinsic_delaunay_flat_logged(s).map(|(p, _)| p)
}

/// As [`intrinsic_delaunay_flat`], also returning the flip log.
pub fn intrinsic_delaunay_flat_logged(s: &FlatConeSurface) -> Result<(DelaunayPattern, FlipLog), DelaunayError> {
    let c = &s.complex;
    let mut mesh = Mesh {
        verts: c.faces().iter().map(|f| [f[0], f[1], f[2]]).collect(),
        edges_of: (0..c.n_faces()).map(|f| { let e = c.face_edges(f); [e[0], e[1], e[2]] }).collect(),
        sides: c.edges().iter().map(|e| e.sides).collect(),
        len: s.lengths.clone(),
    };
    let n_edges = mesh.len.len();
    let budget = 50 * n_edges;
    let mut version = vec![0usize; n_edges];
    let mut heap: BinaryHeap<(Key, Reverse<usize>, usize)> = BinaryHeap::new();
    for e in 0..n_edges {
        if let Some(v) = mesh.violation(e) {
            heap.push((Key(v), Reverse(e), 0));
        }
    }
    let mut log = FlipLog::default();
    while let Some((_, Reverse(e), ver)) = heap.pop() {
        if ver != version[e] || mesh.violation(e).is_none() {
            continue;
        }
        if log.flipped.len() >= budget {
            return Err(DelaunayError::NonConvergence { budget });
        }
        let around = mesh.flip(e);
        log.flipped.push(e);
        log.violation_counts.push(mesh.violations());
        let mut touched = vec![e];
        touched.extend(around);
        touched.sort_unstable();
        touched.dedup();
        for t in touched {
            version[t] += 1;
            if let Some(v) = mesh.violation(t) {
                heap.push((Key(v), Reverse(t), version[t]));
            }
        }
    }

    let faces: Vec<Vec<usize>> = mesh.verts.iter().map(|v| v.to_vec()).collect();
    let labels: Vec<Vec<usize>> = mesh.edges_of.iter().map(|e| e.to_vec()).collect();
    let flat = FlatConeSurface {
        complex: CellComplex::from_glued(c.n_vertices(), faces, labels, vec![false; c.n_vertices()], Regularity::Surface)?,
        lengths: Vec::new(),
    };
    // from_glued renumbers edges by first appearance.
    let mut order = Vec::with_capacity(n_edges);
    let mut seen = HashSet::new();
    for row in &mesh.edges_of {
        for &e in row {
            if seen.insert(e) {
                order.push(e);
            }
        }
    }
    let lengths: Vec<f64> = order.iter().map(|&e| mesh.len[e]).collect();
    let tri = FlatConeSurface { lengths, ..flat };
    let cone = tri.cone_angles();
    let v1: Vec<bool> = cone.iter().map(|&t| (t - 2.0 * PI).abs() > COCIRCULAR_TOL).collect();
    let tri_c = tri.complex.with_v1(v1);

    let mut sums = vec![0.0; tri_c.n_edges()];
    for (e, edge) in tri_c.edges().iter().enumerate() {
        for &(f, i) in &edge.sides {
            let es = tri_c.face_edges(f);
            let l = [tri.lengths[es[0]], tri.lengths[es[1]], tri.lengths[es[2]]];
            sums[e] += corner_angle(l, (i + 2) % 3);
        }
    }
    let removed: Vec<bool> = sums.iter().map(|&t| (t - PI).abs() <= COCIRCULAR_TOL).collect();
    let redundant: Vec<[usize; 2]> = tri_c
        .edges()
        .iter()
        .zip(&removed)
        .filter(|(_, &r)| r)
        .map(|(e, _)| e.ends)
        .collect();
    let mut merged = None;
    let mut last_err = None;
    for reg in [Regularity::Strong, Regularity::Regular, Regularity::Surface] {
        match tri_c.merge_faces(&removed, reg) {
            Ok(m) => {
                merged = Some(m);
                break;
            }
            Err(e) => last_err = Some(e),
        }
    }
    let (complex, map) = match merged {
        Some(m) => m,
        None => return Err(last_err.expect("some attempt failed").into()),
    };
    let mut theta = vec![0.0; complex.n_edges()];
    for (old, new) in map.iter().enumerate() {
        if let Some(k) = new {
            theta[*k] = sums[old];
        }
    }
    let pattern = DelaunayPattern { complex, theta, metric_cone: cone, redundant, flips: log.flipped.len() };
    Ok((pattern, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn octahedron() -> Vec<SpherePoint> {
        vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<SpherePoint> {
        (0..n)
            .map(|_| loop {
                let p = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let r = norm(p);
                if r > 0.1 && r < 1.0 {
                    break [p[0] / r, p[1] / r, p[2] / r];
                }
            })
            .collect()
    }

    /// No input point lies strictly inside any face's empty cap.
    fn empty_caps(points: &[SpherePoint], pat: &DelaunayPattern) -> bool {
        pat.complex.faces().iter().all(|f| {
            let (n, d) = plane(points, f[0], f[1], f[2]);
            points.iter().all(|p| dot(n, *p) - d <= 1e-10)
        })
    }

    #[test]
    fn octahedron_right_angles() {
        let pts = octahedron();
        let pat = spherical_delaunay(&pts).unwrap();
        assert_eq!(pat.complex.n_faces(), 8);
        assert_eq!(pat.complex.n_edges(), 12);
        for t in &pat.theta {
            assert!((t - PI / 2.0).abs() < 1e-12, "{t}");
        }
        let st = stereographic_angles(&pts, &pat).unwrap();
        for (a, b) in st.iter().zip(&pat.theta) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn tetrahedron_symmetric_angles() {
        let s = 1.0 / 3f64.sqrt();
        let pts = vec![[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
        let pat = spherical_delaunay(&pts).unwrap();
        assert_eq!(pat.complex.n_faces(), 4);
        // Face planes have offset -1/3 and normals at dot -1/3.
        let expected = ((1.0f64 / 9.0 + 1.0 / 3.0) / (8.0 / 9.0)).acos();
        for t in &pat.theta {
            assert!((t - expected).abs() < 1e-12, "{t} vs {expected}");
        }
        assert!((expected - PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cocircular_quad_merges() {
        let h = 0.3f64;
        let r = (1.0 - h * h).sqrt();
        let pts = vec![[r, 0.0, h], [0.0, r, h], [-r, 0.0, h], [0.0, -r, h], [0.0, 0.0, -1.0]];
        let pat = spherical_delaunay(&pts).unwrap();
        assert_eq!(pat.complex.n_faces(), 5);
        assert_eq!(pat.redundant.len(), 1);
        let quads = pat.complex.faces().iter().filter(|f| f.len() == 4).count();
        assert_eq!(quads, 1);
        assert!(pat.theta.iter().all(|&t| t > 0.0 && t < PI));
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut pts = octahedron();
        pts.push([1.0, 0.0, 0.0]);
        assert!(matches!(spherical_delaunay(&pts), Err(DelaunayError::DuplicatePoint(0, 6))));
        let ring: Vec<SpherePoint> = (0..6).map(|k| {
            let t = k as f64 * PI / 3.0;
            [t.cos(), t.sin(), 0.0]
        }).collect();
        assert!(matches!(spherical_delaunay(&ring), Err(DelaunayError::DegenerateInput(_))));
        assert!(matches!(spherical_delaunay(&pts[..3]), Err(DelaunayError::DegenerateInput(_))));
        assert!(matches!(spherical_delaunay(&[[2.0, 0.0, 0.0]; 4]), Err(DelaunayError::InvalidInput(_))));
    }

    #[test]
    fn random_inputs_satisfy_empty_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let pts = random_points(&mut rng, 20);
            let pat = spherical_delaunay(&pts).unwrap();
            assert_eq!(pat.complex.euler_characteristic(), 2);
            assert!(empty_caps(&pts, &pat));
            let st = stereographic_angles(&pts, &pat).unwrap();
            for (a, b) in st.iter().zip(&pat.theta) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn chart_input_roundtrip() {
        let json = r#"{"complex": [[1,0],[0,1],[-1,0],[0,-1],[0,0],"inf"]}"#;
        let input: PointSetInput = serde_json::from_str(json).unwrap();
        let pts = input.to_sphere();
        assert_eq!(pts[5], [0.0, 0.0, 1.0]);
        assert_eq!(pts[4], [0.0, 0.0, -1.0]);
        let w = Complex64::new(0.3, -2.0);
        let back = to_stereographic(from_stereographic(Some(w))).unwrap();
        assert!((back - w).norm() < 1e-14);
        let pat = spherical_delaunay(&pts).unwrap();
        assert!(pat.theta.iter().all(|t| (t - PI / 2.0).abs() < 1e-12));
    }

    /// Lens angle measured from the arcs: tangent of each circle at an
    /// intersection point, pointing into the other disk.
    fn arc_oracle(c1: &Circle, c2: &Circle) -> f64 {
        let d = (c2.center - c1.center).norm();
        let (r1, r2) = (c1.radius, c2.radius);
        let x = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
        let h = (r1 * r1 - x * x).sqrt();
        let dir = (c2.center - c1.center) / d;
        let p = c1.center + dir * x + dir * Complex64::i() * h;
        let tangent_into = |c: &Circle, other: &Circle| {
            let t = (p - c.center) * Complex64::i() / c.radius;
            let eps = 1e-6;
            let ahead = c.center + (p - c.center) * Complex64::from_polar(1.0, eps);
            if (ahead - other.center).norm() < other.radius { t } else { -t }
        };
        let t1 = tangent_into(c1, c2);
        let t2 = tangent_into(c2, c1);
        (t1.conj() * t2).arg().abs()
    }

    #[test]
    fn planar_angle_convention() {
        let unit_at = |x: f64| Circle { center: Complex64::new(x, 0.0), radius: 1.0 };
        let a = circle_intersection_angle(&unit_at(0.0), &unit_at(1.0)).unwrap();
        assert!((a - 2.0 * PI / 3.0).abs() < 1e-14);
        assert!((a - arc_oracle(&unit_at(0.0), &unit_at(1.0))).abs() < 1e-9);
        let o = circle_intersection_angle(&unit_at(0.0), &unit_at(2f64.sqrt())).unwrap();
        assert!((o - PI / 2.0).abs() < 1e-14);
        let same = circle_intersection_angle(&unit_at(0.0), &unit_at(0.0)).unwrap();
        assert!((same - PI).abs() < 1e-7);
        assert!(matches!(circle_intersection_angle(&unit_at(0.0), &unit_at(3.0)), Err(DelaunayError::Disjoint)));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let c1 = Circle { center: Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), radius: rng.gen_range(0.5..2.0) };
            let c2 = Circle { center: Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), radius: rng.gen_range(0.5..2.0) };
            let d = (c1.center - c2.center).norm();
            if d < (c1.radius - c2.radius).abs() + 1e-3 || d > c1.radius + c2.radius - 1e-3 {
                continue;
            }
            let a = circle_intersection_angle(&c1, &c2).unwrap();
            assert!((a - arc_oracle(&c1, &c2)).abs() < 1e-9);
        }
    }

    fn torus(long: f64) -> FlatConeSurface {
        // Parallelogram torus split along one diagonal; labels a, b, c.
        let c = CellComplex::from_glued(1, vec![vec![0, 0, 0], vec![0, 0, 0]], vec![vec![0, 1, 2], vec![2, 0, 1]], vec![false], Regularity::Surface).unwrap();
        FlatConeSurface::new(c, vec![1.0, 1.0, long]).unwrap()
    }

    #[test]
    fn equilateral_torus_is_delaunay() {
        let (pat, log) = intrinsic_delaunay_flat_logged(&torus(1.0)).unwrap();
        assert!(log.flipped.is_empty());
        assert_eq!(pat.complex.n_faces(), 2);
        for t in &pat.theta {
            assert!((t - 2.0 * PI / 3.0).abs() < 1e-12);
        }
        assert!(pat.metric_cone.iter().all(|c| (c - 2.0 * PI).abs() < 1e-12));
    }

    #[test]
    fn one_flip_repairs_long_diagonal() {
        let (pat, log) = intrinsic_delaunay_flat_logged(&torus(3f64.sqrt())).unwrap();
        assert_eq!(log.flipped.len(), 1);
        assert_eq!(pat.complex.n_edges(), 3);
        for t in &pat.theta {
            assert!((t - 2.0 * PI / 3.0).abs() < 1e-9, "{t}");
        }
    }

    #[test]
    fn square_torus_merges_to_one_square() {
        let (pat, _) = intrinsic_delaunay_flat_logged(&torus(2f64.sqrt())).unwrap();
        assert_eq!(pat.complex.n_faces(), 1);
        assert_eq!(pat.complex.n_edges(), 2);
        assert_eq!(pat.redundant.len(), 1);
        for t in &pat.theta {
            assert!((t - PI / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lawson_flat_squares() {
        let sq = crate::examples::lawson_squares().complex;
        let tri = sq.subtriangulate();
        let lengths: Vec<f64> = (0..tri.complex.n_edges()).map(|e| if tri.is_diagonal(e) { 2f64.sqrt() } else { 1.0 }).collect();
        let s = FlatConeSurface::new(tri.complex.clone(), lengths).unwrap();
        let (pat, log) = intrinsic_delaunay_flat_logged(&s).unwrap();
        assert!(log.flipped.is_empty());
        assert_eq!(pat.redundant.len(), 6);
        assert_eq!((pat.complex.n_vertices(), pat.complex.n_edges(), pat.complex.n_faces()), (4, 12, 6));
        for t in &pat.theta {
            assert!((t - PI / 2.0).abs() < 1e-12);
        }
        for v in 0..4 {
            assert!(pat.complex.is_v1(v));
            assert!((pat.metric_cone[v] - 3.0 * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn flips_preserve_edges_and_settle() {
        // A skewed torus needing several flips.
        let s = {
            let c = CellComplex::from_glued(1, vec![vec![0, 0, 0], vec![0, 0, 0]], vec![vec![0, 1, 2], vec![2, 0, 1]], vec![false], Regularity::Surface).unwrap();
            // Lattice vectors (1,0) and (3.2, 0.9): sides 1, |(3.2,0.9)-(1,0)|... use
            // a = (1,0), b = (2.2,0.9), c = a + b.
            let a = 1.0f64;
            let b = (2.2f64 * 2.2 + 0.81).sqrt();
            let cc = (3.2f64 * 3.2 + 0.81).sqrt();
            FlatConeSurface::new(c, vec![a, b, cc]).unwrap()
        };
        let (pat, log) = intrinsic_delaunay_flat_logged(&s).unwrap();
        assert!(log.flipped.len() >= 2);
        assert_eq!(pat.complex.n_edges() + pat.redundant.len(), 3);
        let tail = &log.violation_counts[log.violation_counts.len().saturating_sub(10)..];
        assert!(tail.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*log.violation_counts.last().unwrap(), 0);
        assert!(pat.theta.iter().all(|&t| t > 0.0 && t <= PI + 1e-12));
    }

    #[test]
    fn rejects_broken_triangle() {
        let c = CellComplex::from_glued(1, vec![vec![0, 0, 0], vec![0, 0, 0]], vec![vec![0, 1, 2], vec![2, 0, 1]], vec![false], Regularity::Surface).unwrap();
        assert!(matches!(FlatConeSurface::new(c, vec![1.0, 1.0, 2.5]), Err(DelaunayError::InvalidInput(_))));
    }
}
