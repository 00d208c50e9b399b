//! Development of a solved pattern in the Poincare disk: triangle layout,
//! holonomy, Fuchsian generators, vertex and face circles, and tiling.
//!
//! Isometries are stored as SU(1,1) matrices `[[a, b], [conj b, conj a]]`
//! acting by `z -> (a z + b) / (conj(b) z + conj(a))`, and reported as
//! SL(2,R) matrices of the upper half plane through the Cayley transform
//! `w = (z - i) / (z + i)`.

use std::collections::VecDeque;

use num_complex::Complex64;
use thiserror::Error;

use crate::cellcomplex::CellComplex;
use crate::delaunay::Circle;
use crate::energy::{EnergyError, Problem};
use crate::hypkernel::{psi, triangle_beta, KernelError};

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("shared edge length mismatch {mismatch:e} exceeds tolerance")]
    NumericalDrift { mismatch: f64 },
    #[error("generator for edge {edge} misses its partner by {residual:e}")]
    PairingMismatch { edge: usize, residual: f64 },
    #[error("face circle of face {face} is degenerate")]
    OrthocircleFailure { face: usize },
    #[error("invalid layout input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

/// Shared-edge mismatch tolerated during development.
pub const DRIFT_TOL: f64 = 1e-7;
/// Residual tolerated when checking a generator against its pairing.
pub const PAIRING_TOL: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Disk isometries

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isometry {
    pub a: Complex64,
    pub b: Complex64,
}

impl Isometry {
    pub const IDENTITY: Isometry = Isometry { a: Complex64::new(1.0, 0.0), b: Complex64::new(0.0, 0.0) };

    /// Translation along the diameter through `p`, sending `0` to `p`.
    pub fn translation(p: Complex64) -> Self {
        let s = 1.0 / (1.0 - p.norm_sqr()).sqrt();
        Isometry { a: Complex64::new(s, 0.0), b: p * s }
    }

    /// Rotation by `phi` about the origin.
    pub fn rotation(phi: f64) -> Self {
        Isometry { a: Complex64::from_polar(1.0, 0.5 * phi), b: Complex64::new(0.0, 0.0) }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.b.conj() * z + self.a.conj())
    }

    /// `self * other`: apply `other` first.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry { a: self.a * other.a + self.b * other.b.conj(), b: self.a * other.b + self.b * other.a.conj() }
    }

    pub fn inverse(&self) -> Isometry {
        Isometry { a: self.a.conj(), b: -self.b }
    }

    pub fn det(&self) -> f64 {
        self.a.norm_sqr() - self.b.norm_sqr()
    }

    pub fn trace(&self) -> f64 {
        2.0 * self.a.re
    }

    /// Distance to `other` as matrices, up to the sign ambiguity.
    pub fn distance(&self, other: &Isometry) -> f64 {
        let plus = (self.a - other.a).norm().max((self.b - other.b).norm());
        let minus = (self.a + other.a).norm().max((self.b + other.b).norm());
        plus.min(minus)
    }

    /// The isometry sending `0` to `p` and the positive real direction to the
    /// direction of the geodesic from `p` towards `q`.
    pub fn frame(p: Complex64, q: Complex64) -> Self {
        let phi = ((q - p) / (Complex64::new(1.0, 0.0) - p.conj() * q)).arg();
        Isometry::translation(p).compose(&Isometry::rotation(phi))
    }

    /// Upper half plane matrix `[[a, b], [c, d]]` with determinant 1 and the
    /// first nonzero entry positive.
    pub fn to_sl2r(&self) -> [[f64; 2]; 2] {
        // K^{-1} M K with K = [[1, -i], [1, i]].
        let (a, b) = (self.a, self.b);
        let (c, d) = (b.conj(), a.conj());
        let i = Complex64::i();
        // M K
        let mk = [[a + b, -i * a + i * b], [c + d, -i * c + i * d]];
        // K^{-1} = 1/(2i) [[i, i], [-1, 1]]
        let s = Complex64::new(0.0, 2.0).inv();
        let r = [
            [s * (i * mk[0][0] + i * mk[1][0]), s * (i * mk[0][1] + i * mk[1][1])],
            [s * (-mk[0][0] + mk[1][0]), s * (-mk[0][1] + mk[1][1])],
        ];
        let mut m = [[r[0][0].re, r[0][1].re], [r[1][0].re, r[1][1].re]];
        let first = m.iter().flatten().copied().find(|x| x.abs() > 1e-15).unwrap_or(1.0);
        if first < 0.0 {
            for row in m.iter_mut() {
                for x in row.iter_mut() {
                    *x = -*x;
                }
            }
        }
        m
    }
}

/// Hyperbolic distance in the disk.
pub fn disk_distance(p: Complex64, q: Complex64) -> f64 {
    let t = (p - q).norm() / (Complex64::new(1.0, 0.0) - p.conj() * q).norm();
    2.0 * t.min(1.0).atanh()
}

/// Angle at `p` from the geodesic towards `q` to the geodesic towards `r`,
/// counterclockwise in `[0, 2 pi)`.
pub fn disk_angle(p: Complex64, q: Complex64, r: Complex64) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    let dq = (q - p) / (one - p.conj() * q);
    let dr = (r - p) / (one - p.conj() * r);
    (dr / dq).arg().rem_euclid(2.0 * std::f64::consts::PI)
}

/// Euclidean circle of the hyperbolic circle with centre `p` and radius `r`.
pub fn hyperbolic_circle(p: Complex64, r: f64) -> Circle {
    let rho = (0.5 * r).tanh();
    let u = if p.norm() > 0.0 { p / p.norm() } else { Complex64::new(1.0, 0.0) };
    let t = Isometry::translation(p);
    let x = t.apply(u * rho);
    let y = t.apply(-u * rho);
    Circle { center: (x + y) * 0.5, radius: 0.5 * (x - y).norm() }
}

// ---------------------------------------------------------------------------
// Decorated metric

/// Edge lengths and vertex radii of a solved problem.
#[derive(Debug, Clone)]
pub struct DecoratedMetric {
    pub lengths: Vec<f64>,
    pub radii: Vec<f64>,
}

impl DecoratedMetric {
    pub fn from_solution(p: &Problem, x: &[f64]) -> Result<Self, LayoutError> {
        if x.len() != p.dim() {
            return Err(LayoutError::InvalidInput(format!("expected {} variables, got {}", p.dim(), x.len())));
        }
        let (a, b) = p.layout.split(x);
        let (lengths, radii) = psi(p.complex(), &a, &b)?;
        Ok(DecoratedMetric { lengths, radii })
    }

    fn face_lengths(&self, c: &CellComplex, f: usize) -> [f64; 3] {
        let e = c.face_edges(f);
        [self.lengths[e[0]], self.lengths[e[1]], self.lengths[e[2]]]
    }
}

/// Corners of face `f` with vertex 0 at the origin and vertex 1 on the
/// positive real axis.
fn canonical(c: &CellComplex, m: &DecoratedMetric, f: usize) -> [Complex64; 3] {
    let l = m.face_lengths(c, f);
    let beta = triangle_beta(l);
    [
        Complex64::new(0.0, 0.0),
        Complex64::new((0.5 * l[0]).tanh(), 0.0),
        Complex64::from_polar((0.5 * l[2]).tanh(), beta[0]),
    ]
}

/// Frame of face `g` glued across its side `j` to side `i` of face `f`,
/// given the frame of `f`.
fn attach(c: &CellComplex, m: &DecoratedMetric, frame_f: &Isometry, f: usize, i: usize, g: usize, j: usize) -> Isometry {
    let cf = canonical(c, m, f);
    let cg = canonical(c, m, g);
    let p = frame_f.apply(cf[i]);
    let q = frame_f.apply(cf[(i + 1) % 3]);
    // Side j of g runs from q to p.
    let target = Isometry::frame(q, p);
    let source = Isometry::frame(cg[j], cg[(j + 1) % 3]);
    target.compose(&source.inverse())
}

// ---------------------------------------------------------------------------
// Development

#[derive(Debug, Clone, Default)]
pub struct LayoutOptions {
    /// Seed the development at a face around this vertex, placed at the origin.
    pub seed_vertex: Option<usize>,
    /// Restrict the development to these faces (must be connected).
    pub faces: Option<Vec<bool>>,
}

/// A co-tree edge of the development: two boundary sides of the domain that
/// are glued on the surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pairing {
    pub edge: usize,
    /// The two sides `(face, index)` of the edge.
    pub sides: [(usize, usize); 2],
}

#[derive(Debug, Clone)]
pub struct HypLayout {
    /// Corner positions per face (`None` for faces not laid out).
    pub positions: Vec<Option<[Complex64; 3]>>,
    /// Isometry from each face's canonical placement to its position.
    pub frames: Vec<Option<Isometry>>,
    pub seed_face: usize,
    /// Parent face and crossed edge in the development tree.
    pub parent: Vec<Option<(usize, usize)>>,
    /// Edges glued inside the domain.
    pub interior: Vec<bool>,
    /// Edges between two laid faces that are cut.
    pub pairings: Vec<Pairing>,
    /// Edges with exactly one laid face (restricted layouts only).
    pub boundary: Vec<(usize, usize)>,
}

/// Develops the triangulation `c` with metric `m` in the disk by a
/// breadth-first walk over adjacent faces.
pub fn develop(c: &CellComplex, m: &DecoratedMetric, opts: &LayoutOptions) -> Result<HypLayout, LayoutError> {
    if c.faces().iter().any(|f| f.len() != 3) {
        return Err(LayoutError::InvalidInput("development needs a triangulation".into()));
    }
    if m.lengths.len() != c.n_edges() || m.radii.len() != c.n_vertices() {
        return Err(LayoutError::InvalidInput("metric does not match the complex".into()));
    }
    let active = opts.faces.clone().unwrap_or_else(|| vec![true; c.n_faces()]);
    if active.len() != c.n_faces() {
        return Err(LayoutError::InvalidInput("face mask has wrong length".into()));
    }
    let (seed_face, corner) = match opts.seed_vertex {
        Some(v) => {
            if v >= c.n_vertices() {
                return Err(LayoutError::InvalidInput(format!("seed vertex {v} out of range")));
            }
            c.vertex_corners(v)
                .into_iter()
                .filter(|&(f, _)| active[f])
                .min()
                .ok_or_else(|| LayoutError::InvalidInput(format!("no laid face at vertex {v}")))?
        }
        None => {
            let f = (0..c.n_faces()).find(|&f| active[f]).ok_or_else(|| LayoutError::InvalidInput("no faces".into()))?;
            let k = (0..3).min_by_key(|&k| c.face(f)[k]).expect("three corners");
            (f, k)
        }
    };
    // Seed frame: the chosen corner at the origin, its lower-id edge along
    // the positive real axis.
    let can = canonical(c, m, seed_face);
    let to_corner = Isometry::frame(can[corner], can[(corner + 1) % 3]);
    let out_edge = c.face_edges(seed_face)[corner];
    let in_edge = c.face_edges(seed_face)[(corner + 2) % 3];
    let beta = triangle_beta(m.face_lengths(c, seed_face))[corner];
    let spin = if out_edge <= in_edge { 0.0 } else { -beta };
    let seed_frame = Isometry::rotation(spin).compose(&to_corner.inverse());

    let nf = c.n_faces();
    let mut frames: Vec<Option<Isometry>> = vec![None; nf];
    let mut parent = vec![None; nf];
    let mut interior = vec![false; c.n_edges()];
    frames[seed_face] = Some(seed_frame);
    let mut queue = VecDeque::from([seed_face]);
    while let Some(f) = queue.pop_front() {
        let ff = frames[f].expect("queued faces are placed");
        for i in 0..3 {
            let (g, j) = c.twin(f, i);
            if !active[g] || frames[g].is_some() {
                continue;
            }
            frames[g] = Some(attach(c, m, &ff, f, i, g, j));
            parent[g] = Some((f, c.face_edges(f)[i]));
            interior[c.face_edges(f)[i]] = true;
            queue.push_back(g);
        }
    }
    if (0..nf).any(|f| active[f] && frames[f].is_none()) {
        return Err(LayoutError::InvalidInput("laid faces are not connected".into()));
    }
    let positions: Vec<Option<[Complex64; 3]>> = (0..nf)
        .map(|f| {
            frames[f].map(|fr| {
                let can = canonical(c, m, f);
                [fr.apply(can[0]), fr.apply(can[1]), fr.apply(can[2])]
            })
        })
        .collect();
    // Re-measure every laid edge and every glued edge.
    let mut worst: f64 = 0.0;
    for f in 0..nf {
        if let Some(p) = positions[f] {
            for i in 0..3 {
                let e = c.face_edges(f)[i];
                worst = worst.max((disk_distance(p[i], p[(i + 1) % 3]) - m.lengths[e]).abs());
            }
        }
    }
    for (e, edge) in c.edges().iter().enumerate() {
        if interior[e] {
            let [(f, i), (g, j)] = edge.sides;
            let (pf, pg) = (positions[f].unwrap(), positions[g].unwrap());
            worst = worst.max((pf[i] - pg[(j + 1) % 3]).norm()).max((pf[(i + 1) % 3] - pg[j]).norm());
        }
    }
    if worst > DRIFT_TOL {
        return Err(LayoutError::NumericalDrift { mismatch: worst });
    }
    let mut pairings = Vec::new();
    let mut boundary = Vec::new();
    for (e, edge) in c.edges().iter().enumerate() {
        let [(f, i), (g, j)] = edge.sides;
        match (active[f], active[g]) {
            (true, true) if !interior[e] => {
                let (pf, pg) = (positions[f].unwrap(), positions[g].unwrap());
                let gap = (pf[i] - pg[(j + 1) % 3]).norm().max((pf[(i + 1) % 3] - pg[j]).norm());
                if gap < 1e-9 {
                    // Sides already coincide: the edge closes a loop around a
                    // vertex inside the domain.
                    interior[e] = true;
                } else {
                    pairings.push(Pairing { edge: e, sides: [(f, i), (g, j)] });
                }
            }
            (true, false) => boundary.push((f, i)),
            (false, true) => boundary.push((g, j)),
            _ => {}
        }
    }
    Ok(HypLayout { positions, frames, seed_face, parent, interior, pairings, boundary })
}

impl HypLayout {
    /// Sum of laid-out corner angles at each vertex.
    pub fn corner_angle_sums(&self, c: &CellComplex) -> Vec<f64> {
        let mut sums = vec![0.0; c.n_vertices()];
        for (f, p) in self.positions.iter().enumerate() {
            if let Some(p) = p {
                for k in 0..3 {
                    sums[c.face(f)[k]] += disk_angle(p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
                }
            }
        }
        sums
    }

    /// Largest deviation of a laid-out edge from its prescribed length.
    pub fn edge_residual(&self, c: &CellComplex, m: &DecoratedMetric) -> f64 {
        let mut worst: f64 = 0.0;
        for (f, p) in self.positions.iter().enumerate() {
            if let Some(p) = p {
                for i in 0..3 {
                    let e = c.face_edges(f)[i];
                    worst = worst.max((disk_distance(p[i], p[(i + 1) % 3]) - m.lengths[e]).abs());
                }
            }
        }
        worst
    }

    /// Hyperbolic-to-Euclidean triangle outlines of the domain.
    pub fn triangles(&self) -> Vec<[Complex64; 3]> {
        self.positions.iter().flatten().copied().collect()
    }
}

/// Transition isometry accumulated by walking once counterclockwise around
/// `v` through its faces; the identity (up to sign) at smooth vertices.
pub fn holonomy(c: &CellComplex, m: &DecoratedMetric, v: usize) -> Isometry {
    let corners = c.vertex_corners(v);
    let mut frame = Isometry::IDENTITY;
    let mut cur = corners[0];
    loop {
        let (f, i) = cur;
        // The next corner ccw lies across side i - 1 of f.
        let k = (i + 2) % 3;
        let (g, j) = c.twin(f, k);
        frame = attach(c, m, &frame, f, k, g, j);
        cur = (g, j);
        if cur == corners[0] {
            break;
        }
    }
    frame
}

// ---------------------------------------------------------------------------
// Fuchsian generators

#[derive(Debug, Clone)]
pub struct FuchsianGenerator {
    pub pairing: Pairing,
    /// Maps side 1 of the pairing onto side 0.
    pub isometry: Isometry,
    /// Largest endpoint residual of the mapped side.
    pub residual: f64,
}

impl FuchsianGenerator {
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        self.isometry.to_sl2r()
    }
}

/// One generator per pairing of the domain, mapping the second side of each
/// cut edge onto the first.
pub fn fuchsian_generators(layout: &HypLayout) -> Result<Vec<FuchsianGenerator>, LayoutError> {
    let mut out = Vec::with_capacity(layout.pairings.len());
    for pr in &layout.pairings {
        let [(f, i), (g, j)] = pr.sides;
        let pf = layout.positions[f].expect("paired faces are laid");
        let pg = layout.positions[g].expect("paired faces are laid");
        let (u, v) = (pf[i], pf[(i + 1) % 3]);
        let (v2, u2) = (pg[j], pg[(j + 1) % 3]);
        if (disk_distance(u, v) - disk_distance(u2, v2)).abs() > PAIRING_TOL {
            return Err(LayoutError::PairingMismatch { edge: pr.edge, residual: (disk_distance(u, v) - disk_distance(u2, v2)).abs() });
        }
        let iso = Isometry::frame(u, v).compose(&Isometry::frame(u2, v2).inverse());
        let residual = (iso.apply(u2) - u).norm().max((iso.apply(v2) - v).norm());
        if residual > PAIRING_TOL {
            return Err(LayoutError::PairingMismatch { edge: pr.edge, residual });
        }
        out.push(FuchsianGenerator { pairing: *pr, isometry: iso, residual });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Circles

#[derive(Debug, Clone)]
pub struct VertexCircle {
    pub vertex: usize,
    /// Hyperbolic centre and radius.
    pub center: Complex64,
    pub radius: f64,
    pub euclid: Circle,
}

#[derive(Debug, Clone)]
pub struct FaceCircle {
    /// Face of the merged complex.
    pub face: usize,
    /// Triangle it was computed from.
    pub triangle: usize,
    pub euclid: Circle,
}

#[derive(Debug, Clone, Default)]
pub struct CirclePattern2D {
    pub vertex_circles: Vec<VertexCircle>,
    pub face_circles: Vec<FaceCircle>,
    /// Largest mismatch between face circles of triangles of one merged face.
    pub redundant_residual: f64,
    /// Largest orthogonality residual between a face circle and the vertex
    /// circles of its triangle.
    pub orthogonality_residual: f64,
}

/// The circle orthogonal to three circles (point circles allowed): centre at
/// their radical centre.
pub fn orthocircle(cs: [Circle; 3]) -> Option<Circle> {
    let p = |c: &Circle| c.center.norm_sqr() - c.radius * c.radius;
    // 2 (c_k - c_0) . m = p_k - p_0
    let d1 = cs[1].center - cs[0].center;
    let d2 = cs[2].center - cs[0].center;
    let r1 = p(&cs[1]) - p(&cs[0]);
    let r2 = p(&cs[2]) - p(&cs[0]);
    let det = 2.0 * (d1.re * d2.im - d1.im * d2.re);
    let scale = d1.norm() * d2.norm();
    if det.abs() <= 1e-14 * scale.max(1e-300) {
        return None;
    }
    let mx = (r1 * d2.im - r2 * d1.im) / det;
    let my = (d1.re * r2 - d2.re * r1) / det;
    let m = Complex64::new(mx, my);
    let r2 = (m - cs[0].center).norm_sqr() - cs[0].radius * cs[0].radius;
    if !(r2 > 0.0) || !r2.is_finite() {
        return None;
    }
    Some(Circle { center: m, radius: r2.sqrt() })
}

/// Cosine of the angle between two circles; zero when orthogonal. For a
/// point circle, the scaled distance of the point from the other circle.
pub fn orthogonality_residual(face: &Circle, vertex: &Circle) -> f64 {
    let d2 = (face.center - vertex.center).norm_sqr();
    if vertex.radius == 0.0 {
        (d2.sqrt() - face.radius).abs()
    } else {
        (d2 - face.radius * face.radius - vertex.radius * vertex.radius).abs() / (2.0 * face.radius * vertex.radius)
    }
}

/// Vertex circles at every laid corner and one face circle per face of the
/// merged complex. `face_parent` maps triangles to merged faces.
pub fn circles(layout: &HypLayout, m: &DecoratedMetric, c: &CellComplex, face_parent: &[usize]) -> Result<CirclePattern2D, LayoutError> {
    let mut out = CirclePattern2D::default();
    let mut seen: Vec<(usize, Complex64)> = Vec::new();
    let mut first_of_face: std::collections::BTreeMap<usize, Circle> = std::collections::BTreeMap::new();
    for (t, pos) in layout.positions.iter().enumerate() {
        let Some(pos) = pos else { continue };
        let mut vc = [Circle { center: Complex64::new(0.0, 0.0), radius: 0.0 }; 3];
        for k in 0..3 {
            let v = c.face(t)[k];
            let euclid = if m.radii[v] > 0.0 { hyperbolic_circle(pos[k], m.radii[v]) } else { Circle { center: pos[k], radius: 0.0 } };
            vc[k] = euclid;
            if !seen.iter().any(|&(w, p)| w == v && (p - pos[k]).norm() < 1e-9) {
                seen.push((v, pos[k]));
                out.vertex_circles.push(VertexCircle { vertex: v, center: pos[k], radius: m.radii[v], euclid });
            }
        }
        let fc = orthocircle(vc).ok_or(LayoutError::OrthocircleFailure { face: t })?;
        for circle in &vc {
            out.orthogonality_residual = out.orthogonality_residual.max(orthogonality_residual(&fc, circle));
        }
        let parent = face_parent[t];
        match first_of_face.get(&parent) {
            Some(prev) => {
                // Only comparable when laid in the same copy of the face.
                let d = (prev.center - fc.center).norm().max((prev.radius - fc.radius).abs());
                if d < 1e-3 {
                    out.redundant_residual = out.redundant_residual.max(d);
                }
            }
            None => {
                first_of_face.insert(parent, fc);
                out.face_circles.push(FaceCircle { face: parent, triangle: t, euclid: fc });
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Tiling

#[derive(Debug, Clone)]
pub struct Tile {
    /// Word in the generators: `+k` for generator `k - 1`, `-k` for its inverse.
    pub word: Vec<i64>,
    pub isometry: Isometry,
}

/// Group elements given by reduced words of length at most `depth`,
/// deduplicated by matrix distance.
pub fn tile(gens: &[FuchsianGenerator], depth: usize) -> Vec<Tile> {
    let mut letters: Vec<(i64, Isometry)> = Vec::new();
    for (k, g) in gens.iter().enumerate() {
        letters.push((k as i64 + 1, g.isometry));
        letters.push((-(k as i64 + 1), g.isometry.inverse()));
    }
    let mut tiles = vec![Tile { word: Vec::new(), isometry: Isometry::IDENTITY }];
    let mut frontier = vec![0usize];
    for _ in 0..depth {
        let mut next = Vec::new();
        for &t in &frontier {
            let last = tiles[t].word.last().copied();
            for &(s, iso) in &letters {
                if last == Some(-s) {
                    continue;
                }
                let m = tiles[t].isometry.compose(&iso);
                if tiles.iter().any(|x| x.isometry.distance(&m) < 1e-9) {
                    continue;
                }
                let mut word = tiles[t].word.clone();
                word.push(s);
                tiles.push(Tile { word, isometry: m });
                next.push(tiles.len() - 1);
            }
        }
        frontier = next;
    }
    tiles
}

/// Klein model coordinates of a disk point.
pub fn to_klein(z: Complex64) -> Complex64 {
    z * (2.0 / (1.0 + z.norm_sqr()))
}

/// Whether `p` lies strictly inside the geodesic triangle `t`, with margin.
pub fn inside_triangle(t: &[Complex64; 3], p: Complex64, margin: f64) -> bool {
    let k = [to_klein(t[0]), to_klein(t[1]), to_klein(t[2])];
    let q = to_klein(p);
    let cross = |a: Complex64, b: Complex64, c: Complex64| (b - a).re * (c - a).im - (b - a).im * (c - a).re;
    let area = cross(k[0], k[1], k[2]);
    let s = area.signum();
    (0..3).all(|i| s * cross(k[i], k[(i + 1) % 3], q) / area.abs() > margin)
}

/// Interior sample points of a geodesic triangle, in the disk.
pub fn sample_points(t: &[Complex64; 3]) -> Vec<Complex64> {
    let k = [to_klein(t[0]), to_klein(t[1]), to_klein(t[2])];
    let weights = [[1.0, 1.0, 1.0], [4.0, 1.0, 1.0], [1.0, 4.0, 1.0], [1.0, 1.0, 4.0], [2.0, 2.0, 1.0], [1.0, 2.0, 2.0], [2.0, 1.0, 2.0]];
    weights
        .iter()
        .map(|w| {
            let s = w[0] + w[1] + w[2];
            let q = (k[0] * w[0] + k[1] * w[1] + k[2] * w[2]) / s;
            // Klein to disk.
            q / (1.0 + (1.0 - q.norm_sqr()).max(0.0).sqrt())
        })
        .collect()
}

/// Number of sample points of one tile found strictly inside another tile.
pub fn overlap_count(domain: &[[Complex64; 3]], tiles: &[Tile]) -> usize {
    let copies: Vec<Vec<[Complex64; 3]>> = tiles
        .iter()
        .map(|t| domain.iter().map(|tri| [t.isometry.apply(tri[0]), t.isometry.apply(tri[1]), t.isometry.apply(tri[2])]).collect())
        .collect();
    let mut hits = 0;
    for (a, ca) in copies.iter().enumerate() {
        let samples: Vec<Complex64> = ca.iter().flat_map(sample_points).collect();
        for (b, cb) in copies.iter().enumerate() {
            if a == b {
                continue;
            }
            for p in &samples {
                if cb.iter().any(|t| inside_triangle(t, *p, 1e-9)) {
                    hits += 1;
                }
            }
        }
    }
    hits
}
