//! Finite branched covers of a spherical cell complex, specified by
//! monodromy permutations at branch vertices.
//!
//! The sphere is cut along a breadth-first spanning tree of its edge graph,
//! rooted at the lowest-numbered vertex that is not a branch point. Each tree
//! edge `p -> c` (parent to child) carries a sheet permutation applied when
//! crossing it from right to left. Going counterclockwise around a vertex `c`
//! one crosses its child edges in rotation order and then its parent edge;
//! the parent permutation is chosen so that this loop acts by the prescribed
//! monodromy `sigma_c`. The loop around the root must then act as `sigma_root`
//! (the identity unless the root is branched), which for commuting monodromy
//! is equivalent to the product of all permutations being the identity.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cellcomplex::{CellComplex, ComplexError};
use crate::data::AngleData;
use crate::delaunay::DelaunayPattern;

#[derive(Debug, Error)]
pub enum CoverError {
    #[error("cover is disconnected: monodromy does not act transitively on sheets")]
    DisconnectedCover,
    #[error("monodromy product is not the identity: {0}")]
    MonodromyProductNotIdentity(String),
    #[error("branch point {0} is not a vertex of the base complex")]
    BranchPointNotVertex(usize),
    #[error("odd number ({0}) of branch vertices")]
    OddBranchCount(usize),
    #[error("invalid cover spec: {0}")]
    InvalidSpec(String),
    #[error("Riemann-Hurwitz count failed: chi = {chi}, expected {expected}")]
    RiemannHurwitz { chi: i64, expected: i64 },
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

/// Monodromy at one branch vertex. `perm[s - 1]` is the image of sheet `s`
/// under a small counterclockwise loop; sheets are numbered from 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub vertex: usize,
    pub perm: Vec<usize>,
}

/// Cover spec file: `{ "sheets": N, "branch": [{ "vertex": k, "perm": [..] }] }`.
/// Branch points are listed in counterclockwise order of their
/// stereographic argument; the product of the listed permutations, composed
/// in that order, must be the identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverSpec {
    pub sheets: usize,
    #[serde(default)]
    pub branch: Vec<BranchPoint>,
}

/// Angle data on the covering surface together with the projection.
#[derive(Debug, Clone)]
pub struct LiftedAngleData {
    pub complex: CellComplex,
    /// Pulled-back intersection angle per lifted edge.
    pub theta: Vec<f64>,
    /// Cone angle `2 pi N_k` of the lifted spherical metric per vertex.
    pub metric_cone: Vec<f64>,
    /// Ramification index per lifted vertex.
    pub ramification: Vec<usize>,
    pub vertex_base: Vec<usize>,
    /// Base edge and sheet of side 0 per lifted edge.
    pub edge_base: Vec<(usize, usize)>,
    /// Base face and sheet per lifted face.
    pub face_base: Vec<(usize, usize)>,
    /// Deck involution on faces, edges and vertices (two-sheeted covers).
    pub deck: Option<Deck>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deck {
    pub faces: Vec<usize>,
    pub edges: Vec<usize>,
    pub vertices: Vec<usize>,
}

impl LiftedAngleData {
    pub fn genus(&self) -> usize {
        self.complex.genus()
    }

    /// Angle data for uniformization, with target cone angle `2 pi` at every
    /// vertex.
    pub fn to_angle_data(&self) -> Result<AngleData, ComplexError> {
        AngleData::uniform(self.complex.clone(), self.theta.clone())
    }
}

type Perm = Vec<usize>;

fn identity(n: usize) -> Perm {
    (0..n).collect()
}

/// `(a * b)(s) = a(b(s))`.
fn compose(a: &Perm, b: &Perm) -> Perm {
    b.iter().map(|&s| a[s]).collect()
}

fn inverse(a: &Perm) -> Perm {
    let mut inv = vec![0; a.len()];
    for (s, &t) in a.iter().enumerate() {
        inv[t] = s;
    }
    inv
}

fn cycle_type(a: &Perm) -> Vec<usize> {
    let mut seen = vec![false; a.len()];
    let mut out = Vec::new();
    for s in 0..a.len() {
        if !seen[s] {
            let mut len = 0;
            let mut t = s;
            while !seen[t] {
                seen[t] = true;
                t = a[t];
                len += 1;
            }
            out.push(len);
        }
    }
    out.sort_unstable();
    out
}

fn find(p: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while p[r] != r {
        r = p[r];
    }
    let mut y = x;
    while p[y] != r {
        let n = p[y];
        p[y] = r;
        y = n;
    }
    r
}

fn union(p: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(p, a), find(p, b));
    if ra != rb {
        p[ra.max(rb)] = ra.min(rb);
    }
}

/// Checks the spec and converts permutations to zero-based sheets.
fn validate(base: &CellComplex, spec: &CoverSpec) -> Result<Vec<Option<Perm>>, CoverError> {
    let n = spec.sheets;
    if n == 0 {
        return Err(CoverError::InvalidSpec("sheet count must be positive".into()));
    }
    let mut sigma: Vec<Option<Perm>> = vec![None; base.n_vertices()];
    for bp in &spec.branch {
        if bp.vertex >= base.n_vertices() {
            return Err(CoverError::BranchPointNotVertex(bp.vertex));
        }
        if bp.perm.len() != n {
            return Err(CoverError::InvalidSpec(format!("permutation at vertex {} has length {}, expected {n}", bp.vertex, bp.perm.len())));
        }
        let p: Perm = bp.perm.iter().map(|&s| s.wrapping_sub(1)).collect();
        let mut hit = vec![false; n];
        for &s in &p {
            if s >= n || hit[s] {
                return Err(CoverError::InvalidSpec(format!("entry list at vertex {} is not a permutation of 1..{n}", bp.vertex)));
            }
            hit[s] = true;
        }
        if sigma[bp.vertex].is_some() {
            return Err(CoverError::InvalidSpec(format!("vertex {} listed twice", bp.vertex)));
        }
        sigma[bp.vertex] = Some(p);
    }
    let product = spec.branch.iter().fold(identity(n), |acc, bp| {
        let p: Perm = bp.perm.iter().map(|&s| s - 1).collect();
        compose(&p, &acc)
    });
    if product != identity(n) {
        return Err(CoverError::MonodromyProductNotIdentity(format!("product in listed order is {:?}", product.iter().map(|s| s + 1).collect::<Vec<_>>())));
    }
    // Transitivity of the generated group.
    let mut parent: Vec<usize> = (0..n).collect();
    for p in sigma.iter().flatten() {
        for (s, &t) in p.iter().enumerate() {
            union(&mut parent, s, t);
        }
    }
    if (0..n).any(|s| find(&mut parent, s) != find(&mut parent, 0)) {
        return Err(CoverError::DisconnectedCover);
    }
    Ok(sigma)
}

/// Lifts a spherical Delaunay pattern through the cover described by `spec`.
pub fn lift(base: &DelaunayPattern, spec: &CoverSpec) -> Result<LiftedAngleData, CoverError> {
    lift_complex(&base.complex, &base.theta, spec)
}

/// Lifts a sphere complex with edge angles through the cover described by
/// `spec`.
pub fn lift_complex(base: &CellComplex, theta: &[f64], spec: &CoverSpec) -> Result<LiftedAngleData, CoverError> {
    if base.euler_characteristic() != 2 {
        return Err(CoverError::InvalidSpec("base complex is not a sphere".into()));
    }
    if theta.len() != base.n_edges() {
        return Err(CoverError::InvalidSpec("angle count differs from edge count".into()));
    }
    let n = spec.sheets;
    let sigma = validate(base, spec)?;
    let id = identity(n);
    let sig = |v: usize| sigma[v].clone().unwrap_or_else(|| id.clone());

    // Breadth-first spanning tree.
    let root = (0..base.n_vertices()).find(|&v| sigma[v].is_none()).unwrap_or(0);
    let nv = base.n_vertices();
    let mut parent_edge: Vec<Option<usize>> = vec![None; nv];
    let mut order = vec![root];
    let mut seen = vec![false; nv];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for e in base.vertex_edges(v) {
            let w = base.other_end(e, v);
            if !seen[w] {
                seen[w] = true;
                parent_edge[w] = Some(e);
                order.push(w);
                queue.push_back(w);
            }
        }
    }
    let is_child_edge = |v: usize, e: usize| {
        let w = base.other_end(e, v);
        w != v && parent_edge[w] == Some(e)
    };
    // Permutation per tree edge, solved from the leaves up.
    let mut pi: Vec<Option<Perm>> = vec![None; base.n_edges()];
    let around = |v: usize, pi: &[Option<Perm>]| {
        // Child edges in ccw order, starting after the parent edge.
        let edges = base.vertex_edges(v);
        let start = parent_edge[v].and_then(|pe| edges.iter().position(|&e| e == pe)).map_or(0, |k| k + 1);
        let mut p = identity(n);
        for k in 0..edges.len() {
            let e = edges[(start + k) % edges.len()];
            if is_child_edge(v, e) {
                p = compose(pi[e].as_ref().expect("children solved first"), &p);
            }
        }
        p
    };
    for &c in order.iter().rev() {
        if let Some(pe) = parent_edge[c] {
            let p = around(c, &pi);
            pi[pe] = Some(compose(&p, &inverse(&sig(c))));
        }
    }
    let at_root = around(root, &pi);
    let root_ok = if sigma[root].is_some() { cycle_type(&at_root) == cycle_type(&sig(root)) } else { at_root == id };
    if !root_ok {
        return Err(CoverError::MonodromyProductNotIdentity(format!("loop around vertex {root} acts as {:?}", at_root.iter().map(|s| s + 1).collect::<Vec<_>>())));
    }

    // Sheet map from the face of side 0 to the face of side 1, per edge.
    let tau: Vec<Perm> = (0..base.n_edges())
        .map(|e| match &pi[e] {
            None => id.clone(),
            Some(p) => {
                let edge = base.edge(e);
                let child = if parent_edge[edge.ends[1]] == Some(e) { edge.ends[1] } else { edge.ends[0] };
                // Side 0 runs ends[0] -> ends[1]; it lies left of p -> c when
                // it runs parent to child.
                if edge.ends[1] == child {
                    inverse(p)
                } else {
                    p.clone()
                }
            }
        })
        .collect();

    // Corners (f, s, i) flattened and unioned across glued sides.
    let face_offset: Vec<usize> = base
        .faces()
        .iter()
        .scan(0, |acc, f| {
            let o = *acc;
            *acc += f.len();
            Some(o)
        })
        .collect();
    let per_sheet: usize = base.faces().iter().map(|f| f.len()).sum();
    let corner = |f: usize, s: usize, i: usize| s * per_sheet + face_offset[f] + i % base.face(f).len();
    let mut uf: Vec<usize> = (0..n * per_sheet).collect();
    for (e, edge) in base.edges().iter().enumerate() {
        let [(f, i), (g, j)] = edge.sides;
        for s in 0..n {
            let t = tau[e][s];
            union(&mut uf, corner(f, s, i), corner(g, t, j + 1));
            union(&mut uf, corner(f, s, i + 1), corner(g, t, j));
        }
    }
    // Vertex ids ordered by base vertex, then by smallest corner.
    let mut classes: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut root_min: BTreeMap<usize, usize> = BTreeMap::new();
    for s in 0..n {
        for (f, face) in base.faces().iter().enumerate() {
            for i in 0..face.len() {
                let k = corner(f, s, i);
                let r = find(&mut uf, k);
                let m = root_min.entry(r).or_insert(k);
                *m = (*m).min(k);
            }
        }
    }
    let mut vertex_of_root: BTreeMap<usize, usize> = BTreeMap::new();
    for s in 0..n {
        for (f, face) in base.faces().iter().enumerate() {
            for (i, &v) in face.iter().enumerate() {
                let r = find(&mut uf, corner(f, s, i));
                classes.entry((v, root_min[&r])).or_default().push(r);
            }
        }
    }
    let mut vertex_base = Vec::new();
    let mut ramification = Vec::new();
    for (&(v, _), members) in &classes {
        let r = members[0];
        vertex_of_root.insert(r, vertex_base.len());
        vertex_base.push(v);
        ramification.push(members.len() / base.vertex_degree(v));
    }

    let mut faces = Vec::with_capacity(n * base.n_faces());
    let mut labels = Vec::with_capacity(n * base.n_faces());
    let mut face_base = Vec::with_capacity(n * base.n_faces());
    for f in 0..base.n_faces() {
        for s in 0..n {
            let len = base.face(f).len();
            faces.push((0..len).map(|i| vertex_of_root[&find(&mut uf, corner(f, s, i))]).collect::<Vec<_>>());
            labels.push(
                (0..len)
                    .map(|i| {
                        let e = base.face_edges(f)[i];
                        let sheet0 = if base.edge(e).sides[0] == (f, i) { s } else { inverse(&tau[e])[s] };
                        e * n + sheet0
                    })
                    .collect::<Vec<_>>(),
            );
            face_base.push((f, s));
        }
    }
    let v1: Vec<bool> = ramification.iter().map(|&k| k >= 2).collect();
    let n_lifted = vertex_base.len();
    let complex = CellComplex::from_glued_best(n_lifted, faces, labels, v1)?;

    let edge_base: Vec<(usize, usize)> = complex
        .edges()
        .iter()
        .map(|edge| {
            let (lf, li) = edge.sides[0];
            let (f, s) = face_base[lf];
            let e = base.face_edges(f)[li];
            let sheet0 = if base.edge(e).sides[0] == (f, li) { s } else { inverse(&tau[e])[s] };
            (e, sheet0)
        })
        .collect();
    let theta: Vec<f64> = edge_base.iter().map(|&(e, _)| theta[e]).collect();
    let metric_cone: Vec<f64> = ramification.iter().map(|&k| 2.0 * PI * k as f64).collect();

    let expected = n as i64 * base.euler_characteristic() - ramification.iter().map(|&k| k as i64 - 1).sum::<i64>();
    if complex.euler_characteristic() != expected {
        return Err(CoverError::RiemannHurwitz { chi: complex.euler_characteristic(), expected });
    }

    let deck = (n == 2).then(|| deck_involution(&complex, &face_base));
    Ok(LiftedAngleData { complex, theta, metric_cone, ramification, vertex_base, edge_base, face_base, deck })
}

/// Sheet swap of a two-sheeted cover.
fn deck_involution(c: &CellComplex, face_base: &[(usize, usize)]) -> Deck {
    let index: BTreeMap<(usize, usize), usize> = face_base.iter().enumerate().map(|(k, &fs)| (fs, k)).collect();
    let faces: Vec<usize> = face_base.iter().map(|&(f, s)| index[&(f, 1 - s)]).collect();
    let mut vertices = vec![usize::MAX; c.n_vertices()];
    let mut edges = vec![usize::MAX; c.n_edges()];
    for (lf, &g) in faces.iter().enumerate() {
        for (i, &v) in c.face(lf).iter().enumerate() {
            vertices[v] = c.face(g)[i];
            edges[c.face_edges(lf)[i]] = c.face_edges(g)[i];
        }
    }
    Deck { faces, edges, vertices }
}

/// Two-sheeted cover branched over `branch_vertices`, with the transposition
/// as monodromy at each.
pub fn hyperelliptic(base: &DelaunayPattern, branch_vertices: &[usize]) -> Result<LiftedAngleData, CoverError> {
    let spec = hyperelliptic_spec(branch_vertices)?;
    lift(base, &spec)
}

pub fn hyperelliptic_spec(branch_vertices: &[usize]) -> Result<CoverSpec, CoverError> {
    if branch_vertices.len() % 2 == 1 {
        return Err(CoverError::OddBranchCount(branch_vertices.len()));
    }
    if branch_vertices.len() < 4 {
        return Err(CoverError::InvalidSpec("at least four branch vertices are required".into()));
    }
    Ok(CoverSpec { sheets: 2, branch: branch_vertices.iter().map(|&vertex| BranchPoint { vertex, perm: vec![2, 1] }).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delaunay::{from_stereographic, spherical_delaunay, SpherePoint};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn curve_base() -> DelaunayPattern {
        let mut pts: Vec<SpherePoint> = (0..12)
            .map(|k| from_stereographic(Some(Complex64::from_polar(1.0, k as f64 * PI / 6.0))))
            .collect();
        // Roots first, then midpoints.
        let roots: Vec<_> = (0..6).map(|k| pts[2 * k]).collect();
        let mids: Vec<_> = (0..6).map(|k| pts[2 * k + 1]).collect();
        pts = roots.into_iter().chain(mids).collect();
        pts.push(from_stereographic(Some(Complex64::new(0.0, 0.0))));
        pts.push(from_stereographic(None));
        spherical_delaunay(&pts).unwrap()
    }

    #[test]
    fn six_roots_give_genus_two() {
        let base = curve_base();
        assert_eq!((base.complex.n_edges(), base.complex.n_faces()), (36, 24));
        let lifted = hyperelliptic(&base, &[0, 1, 2, 3, 4, 5]).unwrap();
        let c = &lifted.complex;
        assert_eq!((c.n_vertices(), c.n_edges(), c.n_faces()), (22, 72, 48));
        assert_eq!(lifted.genus(), 2);
        assert_eq!(c.v1_vertices().len(), 6);
        for v in c.v1_vertices() {
            assert!((lifted.metric_cone[v] - 4.0 * PI).abs() < 1e-15);
            assert!(lifted.vertex_base[v] < 6);
        }
        let deck = lifted.deck.as_ref().unwrap();
        for v in 0..c.n_vertices() {
            assert_eq!(deck.vertices[deck.vertices[v]], v);
            assert_eq!(deck.vertices[v] == v, c.is_v1(v));
        }
        for e in 0..c.n_edges() {
            assert_eq!(deck.edges[deck.edges[e]], e);
            assert_eq!(lifted.theta[deck.edges[e]], lifted.theta[e]);
        }
    }

    #[test]
    fn trivial_cover_is_the_base() {
        let base = curve_base();
        let lifted = lift(&base, &CoverSpec { sheets: 1, branch: vec![] }).unwrap();
        assert_eq!(lifted.complex.n_vertices(), base.complex.n_vertices());
        assert_eq!(lifted.complex.n_edges(), base.complex.n_edges());
        assert_eq!(lifted.genus(), 0);
        assert!(lifted.metric_cone.iter().all(|&c| c == 2.0 * PI));
        assert!(lifted.deck.is_none());
    }

    #[test]
    fn odd_transpositions_rejected() {
        let base = curve_base();
        let spec = CoverSpec { sheets: 2, branch: (0..5).map(|v| BranchPoint { vertex: v, perm: vec![2, 1] }).collect() };
        assert!(matches!(lift(&base, &spec), Err(CoverError::MonodromyProductNotIdentity(_))));
        assert!(matches!(hyperelliptic(&base, &[0, 1, 2]), Err(CoverError::OddBranchCount(3))));
    }

    #[test]
    fn bad_specs_rejected() {
        let base = curve_base();
        let far = CoverSpec { sheets: 2, branch: vec![BranchPoint { vertex: 99, perm: vec![2, 1] }] };
        assert!(matches!(lift(&base, &far), Err(CoverError::BranchPointNotVertex(99))));
        let split = CoverSpec { sheets: 3, branch: (0..4).map(|v| BranchPoint { vertex: v, perm: vec![2, 1, 3] }).collect() };
        assert!(matches!(lift(&base, &split), Err(CoverError::DisconnectedCover)));
        let notperm = CoverSpec { sheets: 2, branch: vec![BranchPoint { vertex: 0, perm: vec![1, 1] }] };
        assert!(matches!(lift(&base, &notperm), Err(CoverError::InvalidSpec(_))));
    }

    #[test]
    fn four_branch_points_give_torus() {
        let base = curve_base();
        let lifted = hyperelliptic(&base, &[0, 2, 3, 5]).unwrap();
        assert_eq!(lifted.genus(), 1);
    }

    #[test]
    fn cube_corners_give_genus_three() {
        let s = 1.0 / 3f64.sqrt();
        let mut pts: Vec<SpherePoint> = Vec::new();
        for &x in &[-s, s] {
            for &y in &[-s, s] {
                for &z in &[-s, s] {
                    pts.push([x, y, z]);
                }
            }
        }
        for k in 0..3 {
            for sign in [-1.0, 1.0] {
                let mut p = [0.0; 3];
                p[k] = sign;
                pts.push(p);
            }
        }
        let base = spherical_delaunay(&pts).unwrap();
        let lifted = hyperelliptic(&base, &(0..8).collect::<Vec<_>>()).unwrap();
        assert_eq!(lifted.genus(), 3);
        // Brute-force cell count of two glued sheets.
        let b = &base.complex;
        assert_eq!(lifted.complex.n_vertices(), 2 * b.n_vertices() - 8);
        assert_eq!(lifted.complex.n_edges(), 2 * b.n_edges());
        assert_eq!(lifted.complex.n_faces(), 2 * b.n_faces());
    }

    #[test]
    fn cyclic_triple_cover() {
        let base = curve_base();
        let spec = CoverSpec { sheets: 3, branch: [0, 2, 4].iter().map(|&v| BranchPoint { vertex: v, perm: vec![2, 3, 1] }).collect() };
        let lifted = lift(&base, &spec).unwrap();
        assert_eq!(lifted.genus(), 1);
        for v in lifted.complex.v1_vertices() {
            assert_eq!(lifted.ramification[v], 3);
            assert!((lifted.metric_cone[v] - 6.0 * PI).abs() < 1e-15);
        }
        // Fibre cardinality.
        let mut fibre = vec![0; base.complex.n_vertices()];
        for (v, &b) in lifted.vertex_base.iter().enumerate() {
            fibre[b] += lifted.ramification[v];
        }
        assert!(fibre.iter().all(|&k| k == 3));
        let mut faces = vec![0; base.complex.n_faces()];
        for &(f, _) in &lifted.face_base {
            faces[f] += 1;
        }
        assert!(faces.iter().all(|&k| k == 3));
    }

    #[test]
    fn pullback_angles_are_exact() {
        let base = curve_base();
        let lifted = hyperelliptic(&base, &[0, 1, 2, 3, 4, 5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let e = rng.gen_range(0..lifted.complex.n_edges());
            let (b, _) = lifted.edge_base[e];
            assert_eq!(lifted.theta[e].to_bits(), base.theta[b].to_bits());
            let ends = lifted.complex.edge(e).ends.map(|v| lifted.vertex_base[v]);
            let bends = base.complex.edge(b).ends;
            assert!(ends == bends || ends == [bends[1], bends[0]]);
        }
    }

    #[test]
    fn spec_json_roundtrip() {
        let json = r#"{"sheets": 2, "branch": [{"vertex": 0, "perm": [2, 1]}, {"vertex": 3, "perm": [2, 1]}]}"#;
        let spec: CoverSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.branch.len(), 2);
        assert_eq!(serde_json::from_str::<CoverSpec>(&serde_json::to_string(&spec).unwrap()).unwrap(), spec);
    }
}
