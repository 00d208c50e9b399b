//! Oriented cell complexes on closed surfaces, their duals, the
//! vertex/face subdivision and fan subtriangulation.
//!
//! Faces are vertex cycles listed counterclockwise as seen from the
//! outside of the surface. Side `i` of face `f` runs from `faces[f][i]` to
//! `faces[f][i + 1]`. Edges carry stable ids and may join the same pair of
//! vertices more than once when the complex is built from an explicit
//! gluing.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComplexError {
    #[error("edge {edge:?} is shared by {count} face sides (expected 2)")]
    NonManifoldEdge { edge: (usize, usize), count: usize },
    #[error("vertex {vertex} has a link made of {cycles} cycles")]
    NonManifoldVertex { vertex: usize, cycles: usize },
    #[error("strong regularity violated: {detail}")]
    StrongRegularityViolation { detail: String },
    #[error("bad face cycle in face {face}: {detail}")]
    BadCycle { face: usize, detail: String },
    #[error("face sides glued along edge {edge} run in the same direction")]
    InconsistentOrientation { edge: usize },
    #[error("complex is not connected")]
    Disconnected,
    #[error("invalid complex input: {0}")]
    InvalidInput(String),
}

/// How strict the ingest check is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regularity {
    /// Any closed oriented surface gluing; loops and repeated face vertices allowed.
    Surface,
    /// Faces have distinct vertices and edges have distinct endpoints.
    Regular,
    /// Regular, and any two closed cells meet in a single closed cell or not at all.
    Strong,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Endpoints; `ends[0]` is the start of the first side.
    pub ends: [usize; 2],
    /// The two (face, side) incidences, first one in face order.
    pub sides: [(usize, usize); 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellComplex {
    n_vertices: usize,
    faces: Vec<Vec<usize>>,
    face_edges: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    v1: Vec<bool>,
    regularity: Regularity,
}

/// Serialized complex description.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ComplexInput {
    pub faces: Vec<Vec<usize>>,
    #[serde(default)]
    pub v1: Vec<usize>,
    /// Explicit side pairings `[[f, i], [g, j]]`; remaining sides pair by vertex pair.
    #[serde(default)]
    pub identifications: Vec<[[usize; 2]; 2]>,
    /// Ingest strictness; defaults to `strong`.
    #[serde(default)]
    pub regularity: Option<Regularity>,
}

/// Builds a complex from its serialized description.
pub fn build_complex(input: &ComplexInput) -> Result<CellComplex, ComplexError> {
    let n_vertices = input
        .faces
        .iter()
        .flatten()
        .copied()
        .max()
        .map(|m| m + 1)
        .unwrap_or(0);
    let n_vertices = input.v1.iter().map(|&v| v + 1).fold(n_vertices, usize::max);
    let labels = side_labels(&input.faces, &input.identifications)?;
    let mut v1 = vec![false; n_vertices];
    for &v in &input.v1 {
        v1[v] = true;
    }
    CellComplex::from_glued(
        n_vertices,
        input.faces.clone(),
        labels,
        v1,
        input.regularity.unwrap_or(Regularity::Strong),
    )
}

/// Assigns edge labels to face sides: explicit identifications first, then
/// the remaining sides paired by unordered vertex pair.
fn side_labels(
    faces: &[Vec<usize>],
    identifications: &[[[usize; 2]; 2]],
) -> Result<Vec<Vec<usize>>, ComplexError> {
    let mut labels: Vec<Vec<Option<usize>>> = faces.iter().map(|f| vec![None; f.len()]).collect();
    let mut next = 0usize;
    for pair in identifications {
        for &[f, i] in pair {
            if f >= faces.len() || i >= faces[f].len() {
                return Err(ComplexError::InvalidInput(format!(
                    "identification refers to missing side ({f}, {i})"
                )));
            }
            if labels[f][i].is_some() {
                return Err(ComplexError::InvalidInput(format!(
                    "side ({f}, {i}) is identified twice"
                )));
            }
        }
        let [[f, i], [g, j]] = *pair;
        if (f, i) == (g, j) {
            return Err(ComplexError::InvalidInput(format!(
                "side ({f}, {i}) identified with itself"
            )));
        }
        labels[f][i] = Some(next);
        labels[g][j] = Some(next);
        next += 1;
    }
    // Pair leftover sides by vertex pair, in face order.
    let mut by_pair: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    for (f, face) in faces.iter().enumerate() {
        for i in 0..face.len() {
            if labels[f][i].is_some() {
                continue;
            }
            let (a, b) = (face[i], face[(i + 1) % face.len()]);
            let key = (a.min(b), a.max(b));
            let entry = by_pair.entry(key).or_default();
            if entry.is_empty() {
                order.push(key);
            }
            entry.push((f, i));
        }
    }
    for key in order {
        let sides = &by_pair[&key];
        if sides.len() != 2 {
            return Err(ComplexError::NonManifoldEdge { edge: key, count: sides.len() });
        }
        for &(f, i) in sides {
            labels[f][i] = Some(next);
        }
        next += 1;
    }
    Ok(labels
        .into_iter()
        .map(|l| l.into_iter().map(|x| x.expect("every side labelled")).collect())
        .collect())
}

impl CellComplex {
    /// Builds a complex from face cycles whose edges are determined by vertex
    /// pairs, enforcing strong regularity.
    pub fn from_faces(faces: Vec<Vec<usize>>, v1: &[usize]) -> Result<Self, ComplexError> {
        build_complex(&ComplexInput { faces, v1: v1.to_vec(), ..Default::default() })
    }

    /// As [`CellComplex::from_glued`], using the strongest regularity level
    /// the gluing satisfies.
    pub fn from_glued_best(n_vertices: usize, faces: Vec<Vec<usize>>, labels: Vec<Vec<usize>>, v1: Vec<bool>) -> Result<Self, ComplexError> {
        let mut last = None;
        for reg in [Regularity::Strong, Regularity::Regular, Regularity::Surface] {
            match Self::from_glued(n_vertices, faces.clone(), labels.clone(), v1.clone(), reg) {
                Ok(c) => return Ok(c),
                Err(e) => last = Some(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    /// Builds a complex from face cycles and per-side edge labels.
    ///
    /// Labels need not be contiguous; they are renumbered in order of first
    /// appearance.
    pub fn from_glued(
        n_vertices: usize,
        faces: Vec<Vec<usize>>,
        labels: Vec<Vec<usize>>,
        v1: Vec<bool>,
        regularity: Regularity,
    ) -> Result<Self, ComplexError> {
        if faces.is_empty() {
            return Err(ComplexError::InvalidInput("no faces".into()));
        }
        if labels.len() != faces.len() {
            return Err(ComplexError::InvalidInput("label table does not match faces".into()));
        }
        if v1.len() != n_vertices {
            return Err(ComplexError::InvalidInput("v1 mask has wrong length".into()));
        }
        for (f, face) in faces.iter().enumerate() {
            if face.len() < 2 || (face.len() < 3 && regularity > Regularity::Surface) {
                return Err(ComplexError::BadCycle { face: f, detail: "fewer than three sides".into() });
            }
            if labels[f].len() != face.len() {
                return Err(ComplexError::BadCycle { face: f, detail: "label count differs from side count".into() });
            }
            if let Some(&v) = face.iter().find(|&&v| v >= n_vertices) {
                return Err(ComplexError::BadCycle { face: f, detail: format!("vertex {v} out of range") });
            }
            if regularity >= Regularity::Regular {
                let distinct: HashSet<_> = face.iter().collect();
                if distinct.len() != face.len() {
                    return Err(ComplexError::BadCycle { face: f, detail: "repeated vertex".into() });
                }
            }
        }
        let mut renumber: HashMap<usize, usize> = HashMap::new();
        let mut incid: Vec<Vec<(usize, usize)>> = Vec::new();
        let mut face_edges = Vec::with_capacity(faces.len());
        for (f, face) in faces.iter().enumerate() {
            let mut row = Vec::with_capacity(face.len());
            for i in 0..face.len() {
                let next_id = renumber.len();
                let id = *renumber.entry(labels[f][i]).or_insert(next_id);
                if id == incid.len() {
                    incid.push(Vec::new());
                }
                incid[id].push((f, i));
                row.push(id);
            }
            face_edges.push(row);
        }
        let mut edges = Vec::with_capacity(incid.len());
        for (id, sides) in incid.iter().enumerate() {
            let (f, i) = sides[0];
            let a = faces[f][i];
            let b = faces[f][(i + 1) % faces[f].len()];
            if sides.len() != 2 {
                return Err(ComplexError::NonManifoldEdge { edge: (a.min(b), a.max(b)), count: sides.len() });
            }
            let (g, j) = sides[1];
            let c = faces[g][j];
            let d = faces[g][(j + 1) % faces[g].len()];
            if (c, d) != (b, a) {
                if (c, d) == (a, b) && a != b {
                    return Err(ComplexError::InconsistentOrientation { edge: id });
                }
                return Err(ComplexError::BadCycle {
                    face: g,
                    detail: format!("side {j} glued to side {i} of face {f} with mismatched endpoints"),
                });
            }
            if a == b && regularity >= Regularity::Regular {
                return Err(ComplexError::BadCycle { face: f, detail: format!("loop edge at vertex {a}") });
            }
            edges.push(Edge { ends: [a, b], sides: [sides[0], sides[1]] });
        }
        let cx = CellComplex { n_vertices, faces, face_edges, edges, v1, regularity };
        cx.check_vertex_links()?;
        cx.check_connected()?;
        if regularity == Regularity::Strong {
            cx.check_strong()?;
        }
        let chi = cx.euler_characteristic();
        if chi > 2 || chi % 2 != 0 {
            return Err(ComplexError::InvalidInput(format!("Euler characteristic {chi} is not that of a closed orientable surface")));
        }
        Ok(cx)
    }

    fn check_vertex_links(&self) -> Result<(), ComplexError> {
        let mut seen: HashSet<(usize, usize)> = HashSet::new();
        let mut cycles = vec![0usize; self.n_vertices];
        for f in 0..self.faces.len() {
            for i in 0..self.faces[f].len() {
                if seen.contains(&(f, i)) {
                    continue;
                }
                let v = self.faces[f][i];
                cycles[v] += 1;
                let mut c = (f, i);
                loop {
                    seen.insert(c);
                    c = self.ccw_next_corner(c);
                    if c == (f, i) {
                        break;
                    }
                }
            }
        }
        for (v, &n) in cycles.iter().enumerate() {
            if n != 1 {
                return Err(ComplexError::NonManifoldVertex { vertex: v, cycles: n });
            }
        }
        Ok(())
    }

    fn check_connected(&self) -> Result<(), ComplexError> {
        let mut seen = vec![false; self.faces.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(f) = stack.pop() {
            for &e in &self.face_edges[f] {
                for &(g, _) in &self.edges[e].sides {
                    if !seen[g] {
                        seen[g] = true;
                        stack.push(g);
                    }
                }
            }
        }
        if seen.iter().all(|&s| s) {
            Ok(())
        } else {
            Err(ComplexError::Disconnected)
        }
    }

    fn check_strong(&self) -> Result<(), ComplexError> {
        let mut pairs: HashMap<(usize, usize), usize> = HashMap::new();
        for (id, e) in self.edges.iter().enumerate() {
            let key = (e.ends[0].min(e.ends[1]), e.ends[0].max(e.ends[1]));
            if let Some(other) = pairs.insert(key, id) {
                return Err(ComplexError::StrongRegularityViolation {
                    detail: format!("edges {other} and {id} both join vertices {} and {}", key.0, key.1),
                });
            }
        }
        for (f, face) in self.faces.iter().enumerate() {
            let verts: HashSet<usize> = face.iter().copied().collect();
            let own: HashSet<usize> = self.face_edges[f].iter().copied().collect();
            for (id, e) in self.edges.iter().enumerate() {
                if !own.contains(&id) && verts.contains(&e.ends[0]) && verts.contains(&e.ends[1]) {
                    return Err(ComplexError::StrongRegularityViolation {
                        detail: format!("edge {id} meets face {f} in two vertices"),
                    });
                }
            }
        }
        let mut faces_at: Vec<Vec<usize>> = vec![Vec::new(); self.n_vertices];
        for (f, face) in self.faces.iter().enumerate() {
            for &v in face {
                faces_at[v].push(f);
            }
        }
        let mut checked: HashSet<(usize, usize)> = HashSet::new();
        for around in &faces_at {
            for (x, &f) in around.iter().enumerate() {
                for &g in &around[x + 1..] {
                    if !checked.insert((f.min(g), f.max(g))) {
                        continue;
                    }
                    let vf: HashSet<usize> = self.faces[f].iter().copied().collect();
                    let shared_v: HashSet<usize> = self.faces[g].iter().copied().filter(|v| vf.contains(v)).collect();
                    let ef: HashSet<usize> = self.face_edges[f].iter().copied().collect();
                    let shared_e: Vec<usize> = self.face_edges[g].iter().copied().filter(|e| ef.contains(e)).collect();
                    let ok = match shared_e.len() {
                        0 => shared_v.len() <= 1,
                        1 => {
                            let ends = self.edges[shared_e[0]].ends;
                            shared_v.len() == 2 && shared_v.contains(&ends[0]) && shared_v.contains(&ends[1])
                        }
                        _ => false,
                    };
                    if !ok {
                        return Err(ComplexError::StrongRegularityViolation {
                            detail: format!(
                                "faces {f} and {g} share {} vertices and {} edges",
                                shared_v.len(),
                                shared_e.len()
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }
    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }
    pub fn face(&self, f: usize) -> &[usize] {
        &self.faces[f]
    }
    pub fn face_edges(&self, f: usize) -> &[usize] {
        &self.face_edges[f]
    }
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }
    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }
    pub fn regularity(&self) -> Regularity {
        self.regularity
    }
    pub fn v1_mask(&self) -> &[bool] {
        &self.v1
    }
    pub fn is_v1(&self, v: usize) -> bool {
        self.v1[v]
    }
    pub fn v1_vertices(&self) -> Vec<usize> {
        (0..self.n_vertices).filter(|&v| self.v1[v]).collect()
    }

    /// Returns a copy with a different hyper-ideal vertex set.
    pub fn with_v1(&self, v1: Vec<bool>) -> Self {
        assert_eq!(v1.len(), self.n_vertices);
        CellComplex { v1, ..self.clone() }
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    pub fn genus(&self) -> usize {
        ((2 - self.euler_characteristic()) / 2) as usize
    }

    /// The side of the other face glued to side `(f, i)`.
    pub fn twin(&self, f: usize, i: usize) -> (usize, usize) {
        let e = &self.edges[self.face_edges[f][i]];
        if e.sides[0] == (f, i) {
            e.sides[1]
        } else {
            e.sides[0]
        }
    }

    /// The next corner counterclockwise around the vertex of corner `(f, i)`.
    pub fn ccw_next_corner(&self, (f, i): (usize, usize)) -> (usize, usize) {
        let n = self.faces[f].len();
        self.twin(f, (i + n - 1) % n)
    }

    /// Corners around `v` in counterclockwise order, starting from the first
    /// corner of `v` in face order.
    pub fn vertex_corners(&self, v: usize) -> Vec<(usize, usize)> {
        let start = self
            .faces
            .iter()
            .enumerate()
            .find_map(|(f, face)| face.iter().position(|&w| w == v).map(|i| (f, i)));
        let Some(start) = start else { return Vec::new() };
        let mut out = vec![start];
        let mut c = self.ccw_next_corner(start);
        while c != start {
            out.push(c);
            c = self.ccw_next_corner(c);
        }
        out
    }

    /// Edges leaving `v` in counterclockwise order (a loop appears twice).
    pub fn vertex_edges(&self, v: usize) -> Vec<usize> {
        self.vertex_corners(v).into_iter().map(|(f, i)| self.face_edges[f][i]).collect()
    }

    /// Vertex at the far end of edge `e` seen from `v`.
    pub fn other_end(&self, e: usize, v: usize) -> usize {
        let ends = self.edges[e].ends;
        if ends[0] == v {
            ends[1]
        } else {
            ends[0]
        }
    }

    pub fn vertex_degree(&self, v: usize) -> usize {
        self.vertex_corners(v).len()
    }

    /// Dual complex: dual vertex `f` for each face, dual edge `e` for each
    /// edge, dual face `v` for each vertex (its faces in counterclockwise order).
    pub fn dual(&self) -> CellComplex {
        let mut faces = Vec::with_capacity(self.n_vertices);
        let mut labels = Vec::with_capacity(self.n_vertices);
        for v in 0..self.n_vertices {
            let corners = self.vertex_corners(v);
            let mut cyc = Vec::with_capacity(corners.len());
            let mut lab = Vec::with_capacity(corners.len());
            for &(f, i) in &corners {
                let n = self.faces[f].len();
                cyc.push(f);
                lab.push(self.face_edges[f][(i + n - 1) % n]);
            }
            faces.push(cyc);
            labels.push(lab);
        }
        let regularity = Regularity::Surface;
        let mut dual = CellComplex::from_glued(self.faces.len(), faces, labels, vec![false; self.faces.len()], regularity)
            .expect("dual of a closed surface complex is a closed surface complex");
        // Keep the dual edge ids equal to the primal ones.
        let mut reorder = vec![0usize; self.edges.len()];
        for v in 0..self.n_vertices {
            let corners = self.vertex_corners(v);
            for (k, &(f, i)) in corners.iter().enumerate() {
                let n = self.faces[f].len();
                reorder[dual.face_edges[v][k]] = self.face_edges[f][(i + n - 1) % n];
            }
        }
        let mut edges = vec![dual.edges[0].clone(); dual.edges.len()];
        for (old, e) in dual.edges.iter().enumerate() {
            edges[reorder[old]] = e.clone();
        }
        for row in dual.face_edges.iter_mut() {
            for e in row.iter_mut() {
                *e = reorder[*e];
            }
        }
        dual.edges = edges;
        dual
    }

    /// Fan subtriangulation from the lowest-id vertex of each face.
    pub fn subtriangulate(&self) -> Triangulation {
        let mut faces = Vec::new();
        let mut labels = Vec::new();
        let mut face_parent = Vec::new();
        let mut next_diag = self.edges.len();
        for (f, face) in self.faces.iter().enumerate() {
            let n = face.len();
            let start = (0..n).min_by_key(|&i| face[i]).unwrap();
            let vs: Vec<usize> = (0..n).map(|k| face[(start + k) % n]).collect();
            let es: Vec<usize> = (0..n).map(|k| self.face_edges[f][(start + k) % n]).collect();
            let mut prev_diag = es[0];
            for k in 1..n - 1 {
                let closing = if k == n - 2 { es[n - 1] } else { let d = next_diag; next_diag += 1; d };
                faces.push(vec![vs[0], vs[k], vs[k + 1]]);
                labels.push(vec![prev_diag, es[k], closing]);
                face_parent.push(f);
                prev_diag = closing;
            }
        }
        let n_diag = next_diag - self.edges.len();
        let mut complex = CellComplex::from_glued(self.n_vertices, faces, labels.clone(), self.v1.clone(), Regularity::Surface)
            .expect("subtriangulation of a valid complex is valid");
        // Restore the label numbering: C edges keep their ids, diagonals follow.
        let mut map = vec![usize::MAX; complex.edges.len()];
        for (t, lab) in labels.iter().enumerate() {
            for (i, &l) in lab.iter().enumerate() {
                map[complex.face_edges[t][i]] = l;
            }
        }
        let mut edges = vec![complex.edges[0].clone(); complex.edges.len()];
        for (old, e) in complex.edges.iter().enumerate() {
            edges[map[old]] = e.clone();
        }
        for row in complex.face_edges.iter_mut() {
            for e in row.iter_mut() {
                *e = map[*e];
            }
        }
        complex.edges = edges;
        complex.regularity = self.regularity.min(Regularity::Regular);
        Triangulation { complex, n_base_edges: self.edges.len(), n_diagonals: n_diag, face_parent }
    }

    /// The subdivision by vertices and face centres: primal vertices keep
    /// their ids, the centre of face `f` is vertex `|V| + f`.
    pub fn subdivide(&self) -> Subdivision {
        let nv = self.n_vertices;
        let ne = self.edges.len();
        let mut corner_base = Vec::with_capacity(self.faces.len());
        let mut acc = ne;
        for face in &self.faces {
            corner_base.push(acc);
            acc += face.len();
        }
        let corner_edge = |f: usize, i: usize| corner_base[f] + i;
        let mut faces = Vec::with_capacity(2 * ne);
        let mut labels = Vec::with_capacity(2 * ne);
        let mut tri_edge = Vec::with_capacity(2 * ne);
        for (e, edge) in self.edges.iter().enumerate() {
            let (f, i) = edge.sides[0];
            let (g, j) = edge.sides[1];
            let nf = self.faces[f].len();
            let ng = self.faces[g].len();
            let u = self.faces[f][i];
            let v = self.faces[f][(i + 1) % nf];
            let (of, og) = (nv + f, nv + g);
            faces.push(vec![u, og, of]);
            labels.push(vec![corner_edge(g, (j + 1) % ng), e, corner_edge(f, i)]);
            tri_edge.push(e);
            faces.push(vec![v, of, og]);
            labels.push(vec![corner_edge(f, (i + 1) % nf), e, corner_edge(g, j)]);
            tri_edge.push(e);
        }
        let complex = CellComplex::from_glued(nv + self.faces.len(), faces, labels, vec![false; nv + self.faces.len()], Regularity::Surface)
            .expect("subdivision of a valid complex is valid");
        Subdivision { complex, n_primal: nv, n_primal_edges: ne, tri_edge }
    }
}

impl CellComplex {
    /// Deletes the marked edges, merging the faces on either side. Returns
    /// the merged complex and, for every old edge, its new id (`None` if
    /// deleted). Each merged region must be a disk.
    pub fn merge_faces(&self, removed: &[bool], regularity: Regularity) -> Result<(CellComplex, Vec<Option<usize>>), ComplexError> {
        assert_eq!(removed.len(), self.edges.len());
        let mut parent: Vec<usize> = (0..self.faces.len()).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
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
        for (e, edge) in self.edges.iter().enumerate() {
            if removed[e] {
                let a = find(&mut parent, edge.sides[0].0);
                let b = find(&mut parent, edge.sides[1].0);
                if a == b {
                    return Err(ComplexError::BadCycle { face: edge.sides[0].0, detail: format!("removing edge {e} leaves a face that is not a disk") });
                }
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut new_id = vec![None; self.edges.len()];
        let mut next = 0;
        for e in 0..self.edges.len() {
            if !removed[e] {
                new_id[e] = Some(next);
                next += 1;
            }
        }
        let mut boundary_count: HashMap<usize, usize> = HashMap::new();
        for f in 0..self.faces.len() {
            let root = find(&mut parent, f);
            for &e in &self.face_edges[f] {
                if !removed[e] {
                    *boundary_count.entry(root).or_default() += 1;
                }
            }
        }
        let mut faces = Vec::new();
        let mut labels = Vec::new();
        let mut seen_root: HashSet<usize> = HashSet::new();
        for f in 0..self.faces.len() {
            let root = find(&mut parent, f);
            if !seen_root.insert(root) {
                continue;
            }
            // Start from the first surviving side of any face in this region.
            let start = (0..self.faces.len())
                .filter(|&g| find(&mut parent, g) == root)
                .find_map(|g| (0..self.faces[g].len()).find(|&i| !removed[self.face_edges[g][i]]).map(|i| (g, i)));
            let Some(start) = start else {
                return Err(ComplexError::BadCycle { face: f, detail: "merged region has no boundary".into() });
            };
            let mut cyc = Vec::new();
            let mut lab = Vec::new();
            let mut side = start;
            loop {
                cyc.push(self.faces[side.0][side.1]);
                lab.push(new_id[self.face_edges[side.0][side.1]].unwrap());
                // Next surviving side leaving the end vertex of this side.
                let mut cand = (side.0, (side.1 + 1) % self.faces[side.0].len());
                let mut guard = 0;
                while removed[self.face_edges[cand.0][cand.1]] {
                    let (g, j) = self.twin(cand.0, cand.1);
                    cand = (g, (j + 1) % self.faces[g].len());
                    guard += 1;
                    if guard > self.edges.len() * 2 {
                        return Err(ComplexError::BadCycle { face: f, detail: "vertex surrounded by removed edges".into() });
                    }
                }
                side = cand;
                if side == start {
                    break;
                }
            }
            if cyc.len() != boundary_count[&root] {
                return Err(ComplexError::BadCycle { face: f, detail: "merged region is not a disk".into() });
            }
            faces.push(cyc);
            labels.push(lab);
        }
        // from_glued renumbers labels by first appearance.
        let mut renumber: HashMap<usize, usize> = HashMap::new();
        for row in &labels {
            for &l in row {
                let k = renumber.len();
                renumber.entry(l).or_insert(k);
            }
        }
        let cx = CellComplex::from_glued(self.n_vertices, faces, labels, self.v1.clone(), regularity)?;
        let map = new_id.iter().map(|o| o.map(|l| renumber[&l])).collect();
        Ok((cx, map))
    }
}

/// A triangulation refining a cell complex. Edges `0..n_base_edges` are the
/// edges of the base complex with the same ids; the rest are diagonals.
#[derive(Debug, Clone)]
pub struct Triangulation {
    pub complex: CellComplex,
    pub n_base_edges: usize,
    pub n_diagonals: usize,
    /// Base face containing each triangle.
    pub face_parent: Vec<usize>,
}

impl Triangulation {
    pub fn is_diagonal(&self, e: usize) -> bool {
        e >= self.n_base_edges
    }

    /// Builds `theta~`: the base angles on base edges and `pi` on diagonals.
    pub fn extend_angles(&self, theta: &[f64]) -> Vec<f64> {
        assert_eq!(theta.len(), self.n_base_edges);
        let mut out = theta.to_vec();
        out.resize(self.n_base_edges + self.n_diagonals, std::f64::consts::PI);
        out
    }
}

/// Vertex/face-centre subdivision. Dual edges keep the primal edge ids;
/// corner edges follow.
#[derive(Debug, Clone)]
pub struct Subdivision {
    pub complex: CellComplex,
    pub n_primal: usize,
    pub n_primal_edges: usize,
    /// Primal edge whose dual edge lies in each triangle.
    pub tri_edge: Vec<usize>,
}

impl Subdivision {
    pub fn is_primal_vertex(&self, v: usize) -> bool {
        v < self.n_primal
    }
    pub fn is_dual_edge(&self, e: usize) -> bool {
        e < self.n_primal_edges
    }
    pub fn face_of_dual_vertex(&self, v: usize) -> usize {
        v - self.n_primal
    }
}
