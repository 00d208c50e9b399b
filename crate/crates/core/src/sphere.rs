//! Hyper-ideal circle patterns on the Riemann sphere by doubling.
//!
//! Removing the open star of a hyper-ideal vertex `k∞` leaves a disk bounded
//! by the loop `σ`. Two copies glued along `σ` form a sphere whose angle data
//! doubles `θ` on `σ` and prescribes `Θ_i = 2θ_{ik∞}` at the vertices of `σ`.
//! The solution of that problem is symmetric under the swap of the copies;
//! one copy laid out in the Poincaré disk is a pattern with convex geodesic
//! boundary. The unit circle becomes the vertex circle of `k∞` and the
//! boundary geodesics become the face circles of the faces around `k∞`.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::cellcomplex::{CellComplex, ComplexError};
use crate::delaunay::{circumcircle, Circle};
use crate::energy::{EnergyError, Problem};
use crate::hypkernel::{self, KernelError};
use crate::layout::{circles, develop, orthogonality_residual, CirclePattern2D, DecoratedMetric, HypLayout, Isometry, LayoutError, LayoutOptions};
use crate::validator::{check_schlenker, PolytopeReport, ValidatorOptions};
use crate::optimizer::{default_init, minimize, ReducedField, SolveError, SolveOptions, SolveResult};

/// Involution residual above which a converged doubled solution is rejected.
pub const SYMMETRY_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SphereError {
    #[error("complex is not a sphere (Euler characteristic {0})")]
    NotSphere(i64),
    #[error("vertex {0} is ideal; doubling at an ideal vertex needs the Euclidean variant, which is not supported")]
    KInfNotV1(usize),
    #[error("the faces around vertex {0} do not form an embedded disk")]
    NotDisk(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("doubled angle data fails admissibility condition(s) {}", failed_conditions(report))]
    NotAdmissible { report: Box<PolytopeReport> },
    #[error("solution collapsed (shortest edge {min_length:.3e})")]
    Degenerate { min_length: f64 },
    #[error("doubled solution is not symmetric (residual {residual:.3e})")]
    SymmetryResidualTooLarge { residual: f64 },
    #[error("no realization: {source}; smallest admissibility slack {min_slack:.3e}, largest |variable| {max_abs:.3e}")]
    NotRealized { source: SolveError, min_slack: f64, max_abs: f64 },
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

fn failed_conditions(r: &PolytopeReport) -> String {
    let flags = [r.condition2, r.condition3, r.condition4];
    let failed: Vec<String> = (2..).zip(flags).filter(|(_, ok)| !ok).map(|(k, _)| k.to_string()).collect();
    failed.join(", ")
}

/// Edge length below which a solution counts as collapsed to a point.
pub const COLLAPSE_TOL: f64 = 1e-5;

/// Cell maps of the swap of the two copies.
#[derive(Debug, Clone, PartialEq)]
pub struct Involution {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
    pub faces: Vec<usize>,
}

/// The doubled sphere `C_σ` with its angle data.
#[derive(Debug, Clone)]
pub struct DoubledData {
    pub complex: CellComplex,
    /// `θ̃`: `θ` off `σ`, `2θ` on `σ`.
    pub theta: Vec<f64>,
    /// `Θ`: `2θ_{ik∞}` on `σ`, `2π` elsewhere.
    pub target: Vec<f64>,
    /// Vertices of `σ` in cyclic order; they are vertices `0..sigma.len()`.
    pub sigma: Vec<usize>,
    pub sigma_edges: Vec<usize>,
    pub vertex_origin: Vec<usize>,
    pub edge_origin: Vec<usize>,
    pub face_origin: Vec<usize>,
    /// Copy of each face: `0` or `1`.
    pub face_copy: Vec<u8>,
    pub involution: Involution,
    pub k_inf: usize,
}

impl DoubledData {
    pub fn on_sigma(&self, v: usize) -> bool {
        v < self.sigma.len()
    }
}

/// Builds the doubled complex across the link of `k_inf`.
pub fn double(c: &CellComplex, theta: &[f64], k_inf: usize) -> Result<DoubledData, SphereError> {
    if theta.len() != c.n_edges() {
        return Err(SphereError::InvalidInput(format!("{} angles for {} edges", theta.len(), c.n_edges())));
    }
    if c.euler_characteristic() != 2 {
        return Err(SphereError::NotSphere(c.euler_characteristic()));
    }
    if k_inf >= c.n_vertices() {
        return Err(SphereError::InvalidInput(format!("vertex {k_inf} out of range")));
    }
    if !c.is_v1(k_inf) {
        return Err(SphereError::KInfNotV1(k_inf));
    }
    let at_k: Vec<bool> = (0..c.n_faces()).map(|f| c.face(f).contains(&k_inf)).collect();
    let mut on_sigma = vec![false; c.n_edges()];
    let mut sigma_nbrs: HashMap<usize, Vec<usize>> = HashMap::new();
    for (e, edge) in c.edges().iter().enumerate() {
        let (af, ag) = (at_k[edge.sides[0].0], at_k[edge.sides[1].0]);
        let touches = edge.ends.contains(&k_inf);
        if af && ag && !touches || !(af && ag) && touches {
            return Err(SphereError::NotDisk(k_inf));
        }
        if af != ag {
            on_sigma[e] = true;
            sigma_nbrs.entry(edge.ends[0]).or_default().push(edge.ends[1]);
            sigma_nbrs.entry(edge.ends[1]).or_default().push(edge.ends[0]);
        }
    }
    if sigma_nbrs.values().any(|n| n.len() != 2) || sigma_nbrs.is_empty() {
        return Err(SphereError::NotDisk(k_inf));
    }
    // Walk σ once, starting from its lowest vertex.
    let start = *sigma_nbrs.keys().min().unwrap();
    let mut sigma = vec![start];
    let mut prev = start;
    let mut cur = sigma_nbrs[&start].iter().copied().min().unwrap();
    while cur != start {
        sigma.push(cur);
        let n = &sigma_nbrs[&cur];
        let next = if n[0] == prev { n[1] } else { n[0] };
        prev = cur;
        cur = next;
        if sigma.len() > sigma_nbrs.len() {
            return Err(SphereError::NotDisk(k_inf));
        }
    }
    if sigma.len() != sigma_nbrs.len() {
        return Err(SphereError::NotDisk(k_inf));
    }

    // σ first, then the other vertices of copy 0, then their twins.
    let s = sigma.len();
    let mut id_a = vec![usize::MAX; c.n_vertices()];
    for (k, &v) in sigma.iter().enumerate() {
        id_a[v] = k;
    }
    let rest: Vec<usize> = (0..c.n_vertices()).filter(|&v| v != k_inf && id_a[v] == usize::MAX).collect();
    for (k, &v) in rest.iter().enumerate() {
        id_a[v] = s + k;
    }
    let m = rest.len();
    let id_b = |v: usize| if id_a[v] < s { id_a[v] } else { id_a[v] + m };
    let n_vertices = s + 2 * m;
    let mut vertex_origin = vec![0; n_vertices];
    for v in (0..c.n_vertices()).filter(|&v| v != k_inf) {
        vertex_origin[id_a[v]] = v;
        vertex_origin[id_b(v)] = v;
    }

    let kept: Vec<usize> = (0..c.n_faces()).filter(|&f| !at_k[f]).collect();
    let ne = c.n_edges();
    let mut faces = Vec::new();
    let mut labels = Vec::new();
    for &f in &kept {
        faces.push(c.face(f).iter().map(|&v| id_a[v]).collect::<Vec<_>>());
        labels.push(c.face_edges(f).to_vec());
    }
    for &f in &kept {
        let vs = c.face(f);
        let es = c.face_edges(f);
        let n = vs.len();
        faces.push((0..n).map(|k| id_b(vs[(n - k) % n])).collect::<Vec<_>>());
        labels.push((0..n).map(|k| es[(2 * n - k - 1) % n]).map(|e| if on_sigma[e] { e } else { ne + e }).collect::<Vec<_>>());
    }
    let v1: Vec<bool> = vertex_origin.iter().map(|&v| c.is_v1(v)).collect();
    let complex = CellComplex::from_glued_best(n_vertices, faces, labels.clone(), v1)?;

    let nk = kept.len();
    let mut by_label: HashMap<usize, usize> = HashMap::new();
    for (f, lab) in labels.iter().enumerate() {
        for (i, &l) in lab.iter().enumerate() {
            by_label.insert(l, complex.face_edges(f)[i]);
        }
    }
    let mut edge_origin = vec![0; complex.n_edges()];
    let mut inv_edges = vec![0; complex.n_edges()];
    for (&l, &e) in &by_label {
        let orig = l % ne;
        edge_origin[e] = orig;
        let twin = if on_sigma[orig] { l } else if l < ne { l + ne } else { l - ne };
        inv_edges[e] = by_label[&twin];
    }
    let inv_vertices: Vec<usize> = (0..n_vertices).map(|v| if v < s { v } else if v < s + m { v + m } else { v - m }).collect();
    let inv_faces: Vec<usize> = (0..2 * nk).map(|f| if f < nk { f + nk } else { f - nk }).collect();
    let face_origin: Vec<usize> = (0..2 * nk).map(|f| kept[f % nk]).collect();
    let face_copy: Vec<u8> = (0..2 * nk).map(|f| u8::from(f >= nk)).collect();

    let theta_tilde: Vec<f64> = edge_origin.iter().map(|&e| if on_sigma[e] { 2.0 * theta[e] } else { theta[e] }).collect();
    let spoke: HashMap<usize, usize> = c.vertex_edges(k_inf).into_iter().map(|e| (c.other_end(e, k_inf), e)).collect();
    let target: Vec<f64> = (0..n_vertices)
        .map(|v| match (v < s, spoke.get(&vertex_origin[v])) {
            (true, Some(&e)) => 2.0 * theta[e],
            _ => 2.0 * PI,
        })
        .collect();
    let sigma_edges: Vec<usize> = (0..complex.n_edges()).filter(|&e| on_sigma[edge_origin[e]]).collect();
    Ok(DoubledData {
        complex,
        theta: theta_tilde,
        target,
        sigma: (0..s).collect(),
        sigma_edges,
        vertex_origin,
        edge_origin,
        face_origin,
        face_copy,
        involution: Involution { vertices: inv_vertices, edges: inv_edges, faces: inv_faces },
        k_inf,
    })
}

/// The minimization problem of the doubled data.
pub fn doubled_problem(dd: &DoubledData) -> Result<Problem, SphereError> {
    let mut p = Problem::new(&dd.complex, &dd.theta, &dd.target)?;
    p.doubled = true;
    Ok(p)
}

/// Image of every variable of `p` under the swap of the copies.
pub fn variable_involution(dd: &DoubledData, p: &Problem) -> Vec<usize> {
    let tri = &p.tri;
    let tc = &tri.complex;
    let mut key_of: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let mut parent_of = vec![usize::MAX; tc.n_edges()];
    for t in 0..tc.n_faces() {
        for &e in tc.face_edges(t) {
            parent_of[e] = tri.face_parent[t];
        }
    }
    let key = |parent: usize, ends: [usize; 2]| (parent, ends[0].min(ends[1]), ends[0].max(ends[1]));
    for e in tri.n_base_edges..tc.n_edges() {
        key_of.insert(key(parent_of[e], tc.edge(e).ends), e);
    }
    let inv = &dd.involution;
    let mut pair: Vec<usize> = (0..tc.n_edges())
        .map(|e| {
            if e < tri.n_base_edges {
                inv.edges[e]
            } else {
                let [a, b] = tc.edge(e).ends;
                key_of[&key(inv.faces[parent_of[e]], [inv.vertices[a], inv.vertices[b]])]
            }
        })
        .collect();
    for &v in p.layout.hyper_vertices() {
        pair.push(p.layout.b_slot(inv.vertices[v]).expect("the swap preserves V1"));
    }
    pair
}

fn fold_classes(pair: &[usize]) -> (Vec<usize>, usize) {
    let mut class = vec![usize::MAX; pair.len()];
    let mut n = 0;
    for i in 0..pair.len() {
        if class[i] == usize::MAX {
            class[i] = n;
            class[pair[i]] = n;
            n += 1;
        }
    }
    (class, n)
}

/// Smallest slack of the admissibility constraints at `x`.
fn te_slack(p: &Problem, x: &[f64]) -> f64 {
    let (a, b) = p.layout.split(x);
    let c = p.complex();
    let mut slack = f64::INFINITY;
    for e in 0..c.n_edges() {
        if p.layout.edge_is_hyper(e) {
            slack = slack.min(a[e]);
        }
    }
    for &v in p.layout.hyper_vertices() {
        slack = slack.min(b[v]);
    }
    if let Ok((l, r)) = hypkernel::psi(c, &a, &b) {
        for (e, edge) in c.edges().iter().enumerate() {
            slack = slack.min(l[e] - r[edge.ends[0]] - r[edge.ends[1]]);
        }
    }
    slack
}

#[derive(Debug, Clone, Default)]
pub struct SphereOptions {
    pub solve: SolveOptions,
    /// Solve for one variable per pair of swapped variables.
    pub fold_symmetry: bool,
    /// Admissibility check of the doubled data before solving.
    pub validator: ValidatorOptions,
}

/// A circle of the spherical pattern with the side that is its disc.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiscCircle {
    pub center: [f64; 2],
    pub radius: f64,
    /// The disc is the bounded side.
    pub bounded: bool,
}

impl DiscCircle {
    fn new(c: &Circle, bounded: bool) -> Self {
        DiscCircle { center: [c.center.re, c.center.im], radius: c.radius, bounded }
    }
    fn circle(&self) -> Circle {
        Circle { center: Complex64::new(self.center[0], self.center[1]), radius: self.radius }
    }
}

/// Lens angle of two oriented discs.
pub fn disc_angle(a: &DiscCircle, b: &DiscCircle) -> f64 {
    let d2 = (a.center[0] - b.center[0]).powi(2) + (a.center[1] - b.center[1]).powi(2);
    let sign = if a.bounded == b.bounded { 1.0 } else { -1.0 };
    let cos = sign * (d2 - a.radius * a.radius - b.radius * b.radius) / (2.0 * a.radius * b.radius);
    cos.clamp(-1.0, 1.0).acos()
}

/// The pattern on the sphere, drawn in the chart of the disk.
#[derive(Debug, Clone, Serialize)]
pub struct SpherePattern {
    /// Per vertex of the input complex; radius 0 for ideal vertices.
    pub vertex_circles: Vec<DiscCircle>,
    /// Per face of the input complex.
    pub face_circles: Vec<DiscCircle>,
    /// Intersection angle re-measured on every edge of the input complex.
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct SphereResiduals {
    /// Largest `|Σ α − θ̃|` over the edges of the doubled triangulation.
    pub angle: f64,
    /// Largest `|Σ β − Θ|` over the hyper-ideal vertices of the doubled sphere.
    pub cone: f64,
    /// Largest gap between swapped variables.
    pub symmetry: f64,
    /// Largest `|θ_measured − θ|` over all edges.
    pub theta: f64,
    /// Largest `|θ_measured − θ|` over the edges of `σ`.
    pub sigma_split: f64,
    /// Largest gap between an interior angle of the boundary polygon and `θ_{ik∞}`.
    pub boundary_angles: f64,
    /// Largest orthogonality defect between face and vertex circles.
    pub orthogonality: f64,
    /// Largest defect of a boundary vertex lying on its boundary geodesics.
    pub boundary_geodesics: f64,
}

#[derive(Debug, Clone)]
pub struct SphereRealization {
    pub doubled: DoubledData,
    pub problem: Problem,
    pub solution: SolveResult,
    pub metric: DecoratedMetric,
    /// One copy, laid out in the disk.
    pub layout: HypLayout,
    pub half: CirclePattern2D,
    pub pattern: SpherePattern,
    pub residuals: SphereResiduals,
}

fn geodesic_circle(p: Complex64, q: Complex64) -> Option<Circle> {
    let cross = p.re * q.im - p.im * q.re;
    if cross.abs() < 1e-9 {
        return None;
    }
    let anchor = if p.norm() >= q.norm() { p } else { q };
    Some(circumcircle(p, q, anchor / anchor.norm_sqr()))
}

fn transform_layout(layout: &mut HypLayout, g: &Isometry) {
    for p in layout.positions.iter_mut().flatten() {
        for z in p.iter_mut() {
            *z = g.apply(*z);
        }
    }
    for fr in layout.frames.iter_mut().flatten() {
        *fr = g.compose(fr);
    }
}

/// Solves the doubled problem, lays out one copy and assembles the pattern
/// on the sphere.
pub fn realize_on_sphere(c: &CellComplex, theta: &[f64], k_inf: usize, opts: &SphereOptions) -> Result<SphereRealization, SphereError> {
    if let Some(e) = theta.iter().position(|&t| !(t > 0.0 && t <= PI)) {
        return Err(SphereError::InvalidInput(format!("angle of edge {e} outside (0, π]")));
    }
    let dd = double(c, theta, k_inf)?;
    let report = check_schlenker(&dd.complex, &dd.theta, &dd.target, &opts.validator)
        .map_err(|e| SphereError::InvalidInput(e.to_string()))?;
    // Doubled angles on σ may exceed π; only the input must lie in (0, π].
    if !(report.condition2 && report.condition3 && report.condition4) {
        return Err(SphereError::NotAdmissible { report: Box::new(report) });
    }
    let p = doubled_problem(&dd)?;
    let pair = variable_involution(&dd, &p);
    let x0 = default_init(&p)?;
    let outcome = if opts.fold_symmetry {
        let (class_of, n_reduced) = fold_classes(&pair);
        let rf = ReducedField { inner: &p, class_of, n_reduced };
        minimize(&rf, rf.reduce(&x0), &opts.solve).map(|mut r| {
            r.x_star = rf.expand(&r.x_star);
            r
        })
    } else {
        minimize(&p, x0, &opts.solve)
    };
    let solution = match outcome {
        Ok(r) => r,
        Err(source) => {
            let x = match &source {
                SolveError::MaxIterExceeded { best } => Some(best.x_star.clone()),
                SolveError::LineSearchFailure { at } => Some(at.x_star.clone()),
                _ => None,
            };
            return Err(match x {
                Some(mut x) => {
                    if x.len() != p.dim() {
                        let (class_of, n_reduced) = fold_classes(&pair);
                        x = ReducedField { inner: &p, class_of, n_reduced }.expand(&x);
                    }
                    SphereError::NotRealized {
                        source,
                        min_slack: te_slack(&p, &x),
                        max_abs: x.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
                    }
                }
                None => SphereError::Solve(source),
            });
        }
    };
    let x = &solution.x_star;
    let symmetry = (0..x.len()).map(|i| (x[i] - x[pair[i]]).abs()).fold(0.0, f64::max);
    if symmetry > SYMMETRY_TOL {
        return Err(SphereError::SymmetryResidualTooLarge { residual: symmetry });
    }
    let metric = DecoratedMetric::from_solution(&p, x)?;
    let min_length = metric.lengths.iter().copied().fold(f64::INFINITY, f64::min);
    if min_length < COLLAPSE_TOL {
        return Err(SphereError::Degenerate { min_length });
    }
    let tc = p.complex();
    let mask: Vec<bool> = p.tri.face_parent.iter().map(|&f| dd.face_copy[f] == 0).collect();
    let seed_vertex = (dd.sigma.len()..tc.n_vertices()).find(|&v| dd.involution.vertices[v] != v && v < dd.involution.vertices[v]);
    let mut layout = develop(tc, &metric, &LayoutOptions { seed_vertex, faces: Some(mask) })?;

    // Boundary sides of the half, grouped by the face around k∞ they face.
    let mut outer_face: Vec<(usize, usize, usize)> = Vec::new();
    for &(t, i) in &layout.boundary {
        let e = tc.face_edges(t)[i];
        let orig = dd.edge_origin[e];
        let [(f, _), (g, _)] = c.edge(orig).sides;
        let outer = if c.face(f).contains(&k_inf) { f } else { g };
        outer_face.push((outer, t, i));
    }
    outer_face.sort_unstable();
    let geodesics_ok = |layout: &HypLayout| {
        outer_face.iter().all(|&(_, t, i)| {
            let pos = layout.positions[t].unwrap();
            geodesic_circle(pos[i], pos[(i + 1) % 3]).is_some()
        })
    };
    if !geodesics_ok(&layout) {
        transform_layout(&mut layout, &Isometry::translation(Complex64::new(0.1, 0.07)));
        if !geodesics_ok(&layout) {
            return Err(SphereError::Layout(LayoutError::InvalidInput("boundary geodesic through the origin".into())));
        }
    }
    let half = circles(&layout, &metric, tc, &p.tri.face_parent)?;

    // Vertex circles of the input complex.
    let unit = DiscCircle { center: [0.0, 0.0], radius: 1.0, bounded: false };
    let mut vertex_circles = vec![unit; c.n_vertices()];
    let mut placed = vec![false; c.n_vertices()];
    for vc in &half.vertex_circles {
        let v = dd.vertex_origin[vc.vertex];
        if !placed[v] {
            placed[v] = true;
            vertex_circles[v] = DiscCircle::new(&vc.euclid, true);
        }
    }
    // Face circles: laid faces keep their circles, faces around k∞ become
    // their boundary geodesics with the disc away from the polygon.
    let mut face_circles: Vec<Option<DiscCircle>> = vec![None; c.n_faces()];
    for fc in &half.face_circles {
        face_circles[dd.face_origin[fc.face]] = Some(DiscCircle::new(&fc.euclid, true));
    }
    let mut boundary_geodesics: f64 = 0.0;
    for &(outer, t, i) in &outer_face {
        let pos = layout.positions[t].unwrap();
        let (pa, pb) = (pos[i], pos[(i + 1) % 3]);
        let circle = geodesic_circle(pa, pb).expect("checked above");
        let inside = (pos[(i + 2) % 3] - circle.center).norm() < circle.radius;
        let disc = DiscCircle::new(&circle, !inside);
        match face_circles[outer] {
            None => face_circles[outer] = Some(disc),
            Some(prev) => {
                // Further sides of the same face lie on the same geodesic.
                let pc = prev.circle();
                for z in [pa, pb] {
                    boundary_geodesics = boundary_geodesics.max(((z - pc.center).norm() - pc.radius).abs());
                }
            }
        }
    }
    let face_circles: Vec<DiscCircle> = face_circles
        .into_iter()
        .enumerate()
        .map(|(f, d)| d.ok_or_else(|| SphereError::InvalidInput(format!("face {f} has no circle"))))
        .collect::<Result<_, _>>()?;

    let mut measured = vec![0.0; c.n_edges()];
    let mut res = SphereResiduals { symmetry, ..Default::default() };
    let (alpha, beta) = p.angle_sums(x)?;
    for (s, t) in alpha.iter().zip(&p.theta_tilde) {
        res.angle = res.angle.max((s - t).abs());
    }
    for &v in p.layout.hyper_vertices() {
        res.cone = res.cone.max((beta[v] - p.cone[v]).abs());
    }
    for (e, edge) in c.edges().iter().enumerate() {
        let [(f, _), (g, _)] = edge.sides;
        measured[e] = disc_angle(&face_circles[f], &face_circles[g]);
        let gap = (measured[e] - theta[e]).abs();
        res.theta = res.theta.max(gap);
        if c.face(f).contains(&k_inf) != c.face(g).contains(&k_inf) {
            res.sigma_split = res.sigma_split.max(gap);
        }
    }
    for f in 0..c.n_faces() {
        for &v in c.face(f) {
            let vc = vertex_circles[v].circle();
            res.orthogonality = res.orthogonality.max(orthogonality_residual(&face_circles[f].circle(), &vc));
        }
    }
    res.orthogonality = res.orthogonality.max(half.orthogonality_residual);
    let sums = layout.corner_angle_sums(tc);
    let spokes: HashMap<usize, usize> = c.vertex_edges(k_inf).into_iter().map(|e| (c.other_end(e, k_inf), e)).collect();
    for &v in &dd.sigma {
        let expected = spokes.get(&dd.vertex_origin[v]).map_or(PI, |&e| theta[e]);
        res.boundary_angles = res.boundary_angles.max((sums[v] - expected).abs());
    }
    res.boundary_geodesics = boundary_geodesics;

    Ok(SphereRealization {
        doubled: dd,
        problem: p,
        solution,
        metric,
        layout,
        half,
        pattern: SpherePattern { vertex_circles, face_circles, theta: measured },
        residuals: res,
    })
}
