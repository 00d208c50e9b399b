//! Realizability checks for angle data.
//!
//! [`check_schlenker`] tests the four conditions describing the angle data
//! polytope of a closed surface. Condition 4 ranges over strict admissible
//! domains: connected, non-punctured unions of open stars in the subdivision
//! `T̂` of the dual complex whose boundary avoids `V0`. Small complexes are
//! swept over all generating subsets. When every target satisfies `Θ ≤ 2π`,
//! only disks can violate the inequality and their boundary walks weigh at
//! most `2π`, so an exact enumeration of light closed walks replaces the
//! sweep. Otherwise condition 4 is only sampled.
//!
//! [`check_rivin`] and [`check_bao_bonahon`] test the loop and path
//! conditions for Delaunay and hyper-ideal patterns on the sphere.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cellcomplex::CellComplex;

#[derive(Debug, Error)]
pub enum ValidatorError {
    #[error("input sizes do not match the complex: {0}")]
    InvalidInput(String),
    #[error("complex is not a sphere (Euler characteristic {0})")]
    NotSphere(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Hyperbolic,
    Euclidean,
}

#[derive(Debug, Clone)]
pub struct ValidatorOptions {
    /// Largest `|V̂|` swept over all generating subsets.
    pub cap: usize,
    pub geometry: Geometry,
    /// Slack for equalities and strict inequalities.
    pub tol: f64,
    /// Random domains drawn when condition 4 can only be sampled.
    pub samples: usize,
    pub seed: u64,
    /// Step budget of the closed-walk search before it gives up.
    pub walk_budget: usize,
    /// Longest dual loop or path enumerated by the sphere checks.
    pub max_loop_len: usize,
    /// Most loops or paths enumerated by the sphere checks.
    pub max_loops: usize,
}

impl Default for ValidatorOptions {
    fn default() -> Self {
        ValidatorOptions {
            cap: 18,
            geometry: Geometry::Hyperbolic,
            tol: 1e-9,
            samples: 20_000,
            seed: 0,
            walk_budget: 50_000_000,
            max_loop_len: 12,
            max_loops: 1_000_000,
        }
    }
}

/// How completely condition 4 (or the loop conditions) was checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coverage {
    /// Every generating subset of `V̂`.
    SubsetSweep,
    /// Every closed boundary walk of weight at most `2π`.
    BoundaryWalks,
    /// Every simple dual loop and path.
    AllLoops,
    /// Random domains, loops or paths only.
    Sampled,
}

impl Coverage {
    pub fn is_exhaustive(self) -> bool {
        self != Coverage::Sampled
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    /// Condition 1: an angle outside `(0, π)`.
    Edge { edge: usize, theta: f64 },
    /// Condition 2: a non-positive `Θ` at a `V1` vertex, or a broken equality
    /// at a `V0` vertex (`expected` is `Σ (π − θ)`).
    Vertex { vertex: usize, target: f64, expected: Option<f64> },
    /// Condition 3: `Σ (2π − Θ)` against `2πχ(S)`.
    Euler { sum: f64, bound: f64 },
    /// Condition 4: a domain given by its generating `T̂` vertices.
    Domain { generators: Vec<usize>, lhs: f64, rhs: f64, chi: i64 },
    /// Sphere loop condition.
    Loop { edges: Vec<usize>, sum: f64, face_of: Option<usize> },
    /// Sphere path condition.
    Path { edges: Vec<usize>, sum: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeReport {
    pub condition1: bool,
    pub condition2: bool,
    pub condition3: bool,
    pub condition4: bool,
    /// Set for the surface check, where condition 3 depends on it.
    pub geometry: Option<Geometry>,
    pub coverage: Coverage,
    /// Distinct domains, loops or paths evaluated.
    pub checked: usize,
    /// Smallest `lhs − rhs` over the domains or loops that must be strict.
    pub min_margin: Option<f64>,
    pub certificates: Vec<Certificate>,
}

impl PolytopeReport {
    pub fn passed(&self) -> bool {
        self.condition1 && self.condition2 && self.condition3 && self.condition4
    }
}

/// The subdivision `T̂` of the dual complex. Vertices `0..|V|` are primal,
/// `|V| + f` is the dual vertex of face `f`. Edges `0..|E|` are dual edges,
/// the rest are corner edges joining a face's dual vertex to one of its
/// corners. Each primal edge `e` contributes the triangles `2e` and `2e + 1`.
#[derive(Debug, Clone)]
pub struct DualSubdivision {
    pub n_primal: usize,
    pub n_primal_edges: usize,
    pub tri_vertices: Vec<[usize; 3]>,
    /// Side `s` runs from vertex `s` to vertex `s + 1`.
    pub tri_edges: Vec<[usize; 3]>,
    /// The two (triangle, side) incidences of each edge.
    pub edge_sides: Vec<[(usize, usize); 2]>,
    pub vertex_tris: Vec<Vec<usize>>,
    stars: Vec<FixedBitSet>,
}

impl DualSubdivision {
    pub fn new(c: &CellComplex) -> Self {
        let nv = c.n_vertices();
        let ne = c.n_edges();
        let mut offset = Vec::with_capacity(c.n_faces());
        let mut total = ne;
        for f in 0..c.n_faces() {
            offset.push(total);
            total += c.face(f).len();
        }
        let corner = |f: usize, p: usize| offset[f] + p % c.face(f).len();
        let mut tri_vertices = Vec::with_capacity(2 * ne);
        let mut tri_edges = Vec::with_capacity(2 * ne);
        for (e, edge) in c.edges().iter().enumerate() {
            let (f, i) = edge.sides[0];
            let (g, j) = edge.sides[1];
            let u = c.face(f)[i];
            let v = c.face(f)[(i + 1) % c.face(f).len()];
            tri_vertices.push([u, nv + g, nv + f]);
            tri_edges.push([corner(g, j + 1), e, corner(f, i)]);
            tri_vertices.push([v, nv + f, nv + g]);
            tri_edges.push([corner(f, i + 1), e, corner(g, j)]);
        }
        let mut sides: Vec<Vec<(usize, usize)>> = vec![Vec::new(); total];
        for (t, es) in tri_edges.iter().enumerate() {
            for (s, &x) in es.iter().enumerate() {
                sides[x].push((t, s));
            }
        }
        let edge_sides: Vec<[(usize, usize); 2]> = sides
            .into_iter()
            .map(|v| {
                assert_eq!(v.len(), 2, "every edge of the subdivision borders two triangles");
                [v[0], v[1]]
            })
            .collect();
        let mut vertex_tris = vec![Vec::new(); nv + c.n_faces()];
        for (t, vs) in tri_vertices.iter().enumerate() {
            for &x in vs {
                if vertex_tris[x].last() != Some(&t) {
                    vertex_tris[x].push(t);
                }
            }
        }
        let mut d = DualSubdivision {
            n_primal: nv,
            n_primal_edges: ne,
            tri_vertices,
            tri_edges,
            edge_sides,
            vertex_tris,
            stars: Vec::new(),
        };
        d.stars = (0..d.n_vertices()).map(|x| d.interior_of(&d.vertex_tris[x])).collect();
        d
    }

    pub fn n_vertices(&self) -> usize {
        self.vertex_tris.len()
    }
    pub fn n_edges(&self) -> usize {
        self.edge_sides.len()
    }
    pub fn n_tris(&self) -> usize {
        self.tri_vertices.len()
    }
    fn n_cells(&self) -> usize {
        self.n_tris() + self.n_edges() + self.n_vertices()
    }
    fn edge_cell(&self, x: usize) -> usize {
        self.n_tris() + x
    }
    fn vertex_cell(&self, x: usize) -> usize {
        self.n_tris() + self.n_edges() + x
    }

    /// Open interior of the union of the given closed triangles.
    fn interior_of(&self, tris: &[usize]) -> FixedBitSet {
        let mut set = FixedBitSet::with_capacity(self.n_cells());
        for &t in tris {
            set.insert(t);
        }
        for &t in tris {
            for &x in &self.tri_edges[t] {
                let [(a, _), (b, _)] = self.edge_sides[x];
                if set.contains(a) && set.contains(b) {
                    set.insert(self.edge_cell(x));
                }
            }
            for &x in &self.tri_vertices[t] {
                if self.vertex_tris[x].iter().all(|&s| set.contains(s)) {
                    set.insert(self.vertex_cell(x));
                }
            }
        }
        set
    }

    /// Cells of the open star of a `T̂` vertex.
    pub fn open_star(&self, x: usize) -> &FixedBitSet {
        &self.stars[x]
    }

    /// Union of the open stars of `generators`.
    pub fn domain(&self, generators: &[usize]) -> FixedBitSet {
        let mut set = FixedBitSet::with_capacity(self.n_cells());
        for &x in generators {
            set.union_with(&self.stars[x]);
        }
        set
    }

    fn other_side(&self, t: usize, s: usize) -> (usize, usize) {
        let [a, b] = self.edge_sides[self.tri_edges[t][s]];
        if a == (t, s) {
            b
        } else {
            a
        }
    }

    /// Next boundary half-edge after `(t, s)` with the domain on the left,
    /// and the number of triangle corners swept at the shared vertex.
    fn next_boundary(&self, omega: &FixedBitSet, t: usize, s: usize) -> ((usize, usize), i64) {
        let (mut t, mut s) = (t, (s + 1) % 3);
        let mut swept = 1;
        loop {
            let x = self.tri_edges[t][s];
            if !omega.contains(self.edge_cell(x)) {
                return ((t, s), swept);
            }
            let (t2, s2) = self.other_side(t, s);
            t = t2;
            s = (s2 + 1) % 3;
            swept += 1;
        }
    }

    /// Combinatorial description of a cell set.
    pub fn analyze(&self, omega: &FixedBitSet) -> DomainAnalysis {
        let nt = self.n_tris();
        let tris: Vec<usize> = (0..nt).filter(|&t| omega.contains(t)).collect();
        let edges: Vec<usize> = (0..self.n_edges()).filter(|&x| omega.contains(self.edge_cell(x))).collect();
        let verts: Vec<usize> = (0..self.n_vertices()).filter(|&x| omega.contains(self.vertex_cell(x))).collect();

        let mut parent: Vec<usize> = (0..nt).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let join = |p: &mut Vec<usize>, a: usize, b: usize| {
            let (ra, rb) = (find(p, a), find(p, b));
            if ra != rb {
                p[ra] = rb;
            }
        };
        for &x in &edges {
            let [(a, _), (b, _)] = self.edge_sides[x];
            join(&mut parent, a, b);
        }
        for &x in &verts {
            let ts = &self.vertex_tris[x];
            for w in ts.windows(2) {
                join(&mut parent, w[0], w[1]);
            }
        }
        let roots: HashSet<usize> = tris.iter().map(|&t| find(&mut parent, t)).collect();

        let generators: Vec<usize> = (0..self.n_vertices()).filter(|&x| self.stars[x].is_subset(omega)).collect();
        let star_union = !generators.is_empty() && self.domain(&generators) == *omega;
        let punctured = (0..self.n_vertices()).find(|&x| {
            if omega.contains(self.vertex_cell(x)) {
                return false;
            }
            let mut rest = self.stars[x].clone();
            rest.set(self.vertex_cell(x), false);
            rest.is_subset(omega)
        });

        let mut boundary_half: Vec<(usize, usize)> = Vec::new();
        for &t in &tris {
            for s in 0..3 {
                if !omega.contains(self.edge_cell(self.tri_edges[t][s])) {
                    boundary_half.push((t, s));
                }
            }
        }
        let index: HashMap<(usize, usize), usize> = boundary_half.iter().enumerate().map(|(k, &h)| (h, k)).collect();
        let mut seen = vec![false; boundary_half.len()];
        let mut walks = Vec::new();
        let mut gb6: i64 = 0;
        let mut passages: HashMap<usize, usize> = HashMap::new();
        for k0 in 0..boundary_half.len() {
            if seen[k0] {
                continue;
            }
            let mut walk = Vec::new();
            let mut k = k0;
            while !seen[k] {
                seen[k] = true;
                let (t, s) = boundary_half[k];
                walk.push(3 * t + s);
                let end = self.tri_vertices[t][(s + 1) % 3];
                if end < self.n_primal {
                    *passages.entry(end).or_default() += 1;
                }
                let (next, swept) = self.next_boundary(omega, t, s);
                gb6 += 3 - swept;
                k = index[&next];
            }
            walks.push(walk);
        }
        for &x in &verts {
            let corners = self.vertex_tris[x]
                .iter()
                .map(|&t| self.tri_vertices[t].iter().filter(|&&y| y == x).count() as i64)
                .sum::<i64>();
            gb6 += 6 - corners;
        }

        let mut dual: HashMap<usize, usize> = HashMap::new();
        for &(t, s) in &boundary_half {
            let x = self.tri_edges[t][s];
            if x < self.n_primal_edges {
                *dual.entry(x).or_default() += 1;
            }
        }
        let mut dual_boundary: Vec<(usize, usize)> = dual.into_iter().collect();
        dual_boundary.sort_unstable();
        let mut primal_passages: Vec<(usize, usize)> = passages.into_iter().collect();
        primal_passages.sort_unstable();

        let chi = verts.len() as i64 - edges.len() as i64 + tris.len() as i64;
        DomainAnalysis {
            n_tris: tris.len(),
            connected: roots.len() == 1,
            whole: omega.count_ones(..) == self.n_cells(),
            interior_primal: verts.iter().copied().filter(|&x| x < self.n_primal).collect(),
            generators,
            star_union,
            punctured,
            boundary: walks,
            dual_boundary,
            primal_passages,
            chi,
            chi_gauss_bonnet: if gb6 % 6 == 0 { Some(gb6 / 6) } else { None },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainAnalysis {
    pub n_tris: usize,
    pub connected: bool,
    pub whole: bool,
    pub interior_primal: Vec<usize>,
    /// Every `T̂` vertex whose open star lies in the set.
    pub generators: Vec<usize>,
    /// The set is the union of the open stars of `generators`.
    pub star_union: bool,
    /// A vertex whose punctured open star lies in the set.
    pub punctured: Option<usize>,
    /// Boundary walks as half-edge ids `3t + s`, the set on their left.
    pub boundary: Vec<Vec<usize>>,
    /// Dual edges on the boundary with multiplicity.
    pub dual_boundary: Vec<(usize, usize)>,
    /// Boundary passages through primal vertices.
    pub primal_passages: Vec<(usize, usize)>,
    /// Euler characteristic by cell count.
    pub chi: i64,
    /// Euler characteristic by combinatorial Gauss-Bonnet along the walks.
    pub chi_gauss_bonnet: Option<i64>,
}

impl DomainAnalysis {
    /// Def. items 2 and 3 plus connectedness.
    pub fn is_admissible(&self) -> bool {
        self.connected && self.n_tris > 0 && !self.whole && self.star_union && self.punctured.is_none() && !self.interior_primal.is_empty()
    }

    /// Admissible with no boundary passage through a `V0` vertex.
    pub fn is_strict(&self, v1: &[bool]) -> bool {
        self.is_admissible() && self.primal_passages.iter().all(|&(k, _)| v1[k])
    }

    pub fn boundary_passages(&self) -> usize {
        self.primal_passages.iter().map(|&(_, n)| n).sum()
    }

    /// Genus from `χ = 2 − 2H − B`.
    pub fn genus(&self) -> Option<i64> {
        let twice = 2 - self.boundary.len() as i64 - self.chi;
        (twice >= 0 && twice % 2 == 0).then_some(twice / 2)
    }

    /// Both sides of the admissible-domain inequality.
    pub fn inequality(&self, theta: &[f64], target: &[f64]) -> (f64, f64) {
        let mut lhs = 0.0;
        for &(e, m) in &self.dual_boundary {
            lhs += m as f64 * (PI - theta[e]);
        }
        for &k in &self.interior_primal {
            lhs += 2.0 * PI - target[k];
        }
        lhs += PI * self.boundary_passages() as f64;
        (lhs, 2.0 * PI * self.chi as f64)
    }
}

/// Recomputes both sides of a domain certificate.
pub fn replay_domain(c: &CellComplex, theta: &[f64], target: &[f64], generators: &[usize]) -> (f64, f64) {
    let d = DualSubdivision::new(c);
    d.analyze(&d.domain(generators)).inequality(theta, target)
}

/// Sum of `π − θ` along a dual loop or path, in the given order.
pub fn path_sum(theta: &[f64], edges: &[usize]) -> f64 {
    edges.iter().map(|&e| PI - theta[e]).sum()
}

fn check_sizes(c: &CellComplex, theta: &[f64], target: Option<&[f64]>) -> Result<(), ValidatorError> {
    if theta.len() != c.n_edges() {
        return Err(ValidatorError::InvalidInput(format!("{} angles for {} edges", theta.len(), c.n_edges())));
    }
    if let Some(t) = target {
        if t.len() != c.n_vertices() {
            return Err(ValidatorError::InvalidInput(format!("{} targets for {} vertices", t.len(), c.n_vertices())));
        }
    }
    Ok(())
}

fn condition1(theta: &[f64], certs: &mut Vec<Certificate>) -> bool {
    let mut ok = true;
    for (edge, &t) in theta.iter().enumerate() {
        if !(t > 0.0 && t < PI) {
            ok = false;
            certs.push(Certificate::Edge { edge, theta: t });
        }
    }
    ok
}

/// Checks the angle data polytope conditions of a closed surface.
pub fn check_schlenker(c: &CellComplex, theta: &[f64], target: &[f64], opts: &ValidatorOptions) -> Result<PolytopeReport, ValidatorError> {
    check_sizes(c, theta, Some(target))?;
    let mut certs = Vec::new();
    let c1 = condition1(theta, &mut certs);

    let mut c2 = true;
    for k in 0..c.n_vertices() {
        if c.is_v1(k) {
            if target[k] <= 0.0 {
                c2 = false;
                certs.push(Certificate::Vertex { vertex: k, target: target[k], expected: None });
            }
        } else {
            let expected = path_sum(theta, &c.vertex_edges(k));
            if (expected - target[k]).abs() > opts.tol {
                c2 = false;
                certs.push(Certificate::Vertex { vertex: k, target: target[k], expected: Some(expected) });
            }
        }
    }

    let sum: f64 = target.iter().map(|t| 2.0 * PI - t).sum();
    let bound = 2.0 * PI * c.euler_characteristic() as f64;
    let c3 = match opts.geometry {
        Geometry::Hyperbolic => sum > bound + opts.tol,
        Geometry::Euclidean => (sum - bound).abs() <= opts.tol,
    };
    if !c3 {
        certs.push(Certificate::Euler { sum, bound });
    }

    let d = DualSubdivision::new(c);
    let v1: Vec<bool> = (0..c.n_vertices()).map(|k| c.is_v1(k)).collect();
    let mut sweep = Sweep::new(&d, c, theta, target, opts.tol);
    let coverage = if d.n_vertices() <= opts.cap {
        let n = d.n_vertices();
        for mask in 1u64..(1u64 << n) {
            let gens: Vec<usize> = (0..n).filter(|&x| mask >> x & 1 == 1).collect();
            sweep.visit(d.domain(&gens), &v1);
        }
        Coverage::SubsetSweep
    } else if target.iter().all(|&t| t <= 2.0 * PI + opts.tol) && c1 && sweep.light_walks(&v1, opts.walk_budget) {
        Coverage::BoundaryWalks
    } else {
        sweep.sample(&v1, opts.samples, opts.seed);
        Coverage::Sampled
    };
    let c4 = sweep.violations.is_empty();
    certs.extend(sweep.violations.iter().cloned());
    Ok(PolytopeReport {
        condition1: c1,
        condition2: c2,
        condition3: c3,
        condition4: c4,
        geometry: Some(opts.geometry),
        coverage,
        checked: sweep.seen.len(),
        min_margin: sweep.min_margin,
        certificates: certs,
    })
}

struct Sweep<'a> {
    d: &'a DualSubdivision,
    theta: &'a [f64],
    target: &'a [f64],
    tol: f64,
    v0_stars: HashSet<FixedBitSet>,
    seen: HashSet<FixedBitSet>,
    violations: Vec<Certificate>,
    min_margin: Option<f64>,
}

impl<'a> Sweep<'a> {
    fn new(d: &'a DualSubdivision, c: &CellComplex, theta: &'a [f64], target: &'a [f64], tol: f64) -> Self {
        let v0_stars = (0..c.n_vertices()).filter(|&k| !c.is_v1(k)).map(|k| d.open_star(k).clone()).collect();
        Sweep { d, theta, target, tol, v0_stars, seen: HashSet::new(), violations: Vec::new(), min_margin: None }
    }

    fn visit(&mut self, omega: FixedBitSet, v1: &[bool]) {
        if self.seen.contains(&omega) {
            return;
        }
        let a = self.d.analyze(&omega);
        let skip = !a.is_strict(v1) || self.v0_stars.contains(&omega);
        self.seen.insert(omega);
        if skip {
            return;
        }
        debug_assert_eq!(a.chi_gauss_bonnet, Some(a.chi));
        let (lhs, rhs) = a.inequality(self.theta, self.target);
        let margin = lhs - rhs;
        self.min_margin = Some(self.min_margin.map_or(margin, |m: f64| m.min(margin)));
        if margin <= self.tol {
            self.violations.push(Certificate::Domain { generators: a.generators, lhs, rhs, chi: a.chi });
        }
    }

    /// Enumerates closed walks in the one-skeleton of `T̂` that could bound
    /// a violating disk and evaluates the domain on their left. Returns
    /// false if the step budget ran out.
    fn light_walks(&mut self, v1: &[bool], budget: usize) -> bool {
        let d = self.d;
        let nh = 3 * d.n_tris();
        let start = |h: usize| d.tri_vertices[h / 3][h % 3];
        let end = |h: usize| d.tri_vertices[h / 3][(h % 3 + 1) % 3];
        let n = d.n_vertices();
        let arrive = |x: usize| -> f64 {
            if x < d.n_primal {
                if v1[x] {
                    PI
                } else {
                    f64::INFINITY
                }
            } else {
                0.0
            }
        };
        let weight: Vec<f64> = (0..nh)
            .map(|h| {
                let x = d.tri_edges[h / 3][h % 3];
                let w = if x < d.n_primal_edges { PI - self.theta[x] } else { 0.0 };
                w + arrive(end(h))
            })
            .collect();
        let mut out = vec![Vec::new(); n];
        for h in 0..nh {
            out[start(h)].push(h);
        }
        let mut dist = vec![vec![f64::INFINITY; n]; n];
        for (x, row) in dist.iter_mut().enumerate() {
            row[x] = 0.0;
        }
        for h in 0..nh {
            let (a, b) = (start(h), end(h));
            if weight[h] < dist[a][b] {
                dist[a][b] = weight[h];
            }
        }
        for k in 0..n {
            for i in 0..n {
                let dik = dist[i][k];
                if dik.is_infinite() {
                    continue;
                }
                for j in 0..n {
                    let v = dik + dist[k][j];
                    if v < dist[i][j] {
                        dist[i][j] = v;
                    }
                }
            }
        }
        let limit = 2.0 * PI + self.tol;
        let mut steps = 0usize;
        let mut walks: Vec<Vec<usize>> = Vec::new();
        let mut used = vec![false; nh];
        for h0 in 0..nh {
            if weight[h0] > limit {
                continue;
            }
            let s0 = start(h0);
            let mut path = vec![h0];
            used[h0] = true;
            // Iterative DFS: each frame holds the next candidate index.
            let mut frames: Vec<usize> = vec![0];
            let mut w = weight[h0];
            if end(h0) == s0 {
                walks.push(path.clone());
            }
            while let Some(next) = frames.last_mut() {
                steps += 1;
                if steps > budget {
                    for &h in &path {
                        used[h] = false;
                    }
                    return false;
                }
                let v = end(*path.last().unwrap());
                let cand = out[v].get(*next).copied();
                *next += 1;
                match cand {
                    Some(h) => {
                        if h <= h0 || used[h] {
                            continue;
                        }
                        let w2 = w + weight[h];
                        if w2 + dist[end(h)][s0] > limit {
                            continue;
                        }
                        used[h] = true;
                        path.push(h);
                        w = w2;
                        frames.push(0);
                        if end(h) == s0 {
                            walks.push(path.clone());
                        }
                    }
                    None => {
                        frames.pop();
                        let h = path.pop().unwrap();
                        used[h] = false;
                        if !path.is_empty() {
                            w -= weight[h];
                        }
                    }
                }
            }
        }
        for walk in walks {
            if let Some(omega) = self.left_of(&walk) {
                self.visit(omega, v1);
            }
        }
        true
    }

    /// The domain bounded by a closed walk, if the walk is its whole boundary.
    fn left_of(&self, walk: &[usize]) -> Option<FixedBitSet> {
        let d = self.d;
        let mut blocked = FixedBitSet::with_capacity(d.n_edges());
        for &h in walk {
            blocked.insert(d.tri_edges[h / 3][h % 3]);
        }
        let mut tris = FixedBitSet::with_capacity(d.n_tris());
        let mut stack: Vec<usize> = walk.iter().map(|&h| h / 3).collect();
        while let Some(t) = stack.pop() {
            if tris.put(t) {
                continue;
            }
            for s in 0..3 {
                let x = d.tri_edges[t][s];
                if !blocked.contains(x) {
                    stack.push(d.other_side(t, s).0);
                }
            }
        }
        let list: Vec<usize> = tris.ones().collect();
        // Cells: the triangles, unblocked edges between them, and vertices
        // whose whole fan is inside with no blocked edge at them.
        let mut omega = FixedBitSet::with_capacity(d.n_cells());
        for &t in &list {
            omega.insert(t);
        }
        let mut on_walk = FixedBitSet::with_capacity(d.n_vertices());
        for &h in walk {
            on_walk.insert(d.tri_vertices[h / 3][h % 3]);
        }
        for &t in &list {
            for s in 0..3 {
                let x = d.tri_edges[t][s];
                if !blocked.contains(x) {
                    omega.insert(d.edge_cell(x));
                }
                let y = d.tri_vertices[t][s];
                if !on_walk.contains(y) && d.vertex_tris[y].iter().all(|&u| tris.contains(u)) {
                    omega.insert(d.vertex_cell(y));
                }
            }
        }
        let a = d.analyze(&omega);
        let mut mine: Vec<usize> = walk.to_vec();
        mine.sort_unstable();
        let mut theirs: Vec<usize> = a.boundary.concat();
        theirs.sort_unstable();
        (mine == theirs).then_some(omega)
    }

    fn sample(&mut self, v1: &[bool], samples: usize, seed: u64) {
        let d = self.d;
        let n = d.n_vertices();
        let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
        for x in 0..n {
            let mut s: Vec<usize> = d.vertex_tris[x].iter().flat_map(|&t| d.tri_vertices[t]).filter(|&y| y != x).collect();
            s.sort_unstable();
            s.dedup();
            nbrs[x] = s;
        }
        for x in 0..n {
            self.visit(d.domain(&[x]), v1);
            for &y in &nbrs[x] {
                if y > x {
                    self.visit(d.domain(&[x, y]), v1);
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let size = rng.gen_range(1..=n);
            let mut gens = vec![rng.gen_range(0..n)];
            let mut inside = vec![false; n];
            inside[gens[0]] = true;
            while gens.len() < size {
                let from = gens[rng.gen_range(0..gens.len())];
                let y = nbrs[from][rng.gen_range(0..nbrs[from].len())];
                if !inside[y] {
                    inside[y] = true;
                    gens.push(y);
                }
            }
            self.visit(d.domain(&gens), v1);
        }
    }
}

/// Loop conditions for Delaunay patterns on the sphere: every vertex is
/// treated as `V0`. The path condition is reported too; it follows from the
/// other two in this case.
pub fn check_rivin(c: &CellComplex, theta: &[f64], opts: &ValidatorOptions) -> Result<PolytopeReport, ValidatorError> {
    sphere_conditions(c, theta, &vec![false; c.n_vertices()], opts)
}

/// Bao-Bonahon's conditions for hyper-ideal patterns on the sphere, with
/// `V1` taken from the complex.
pub fn check_bao_bonahon(c: &CellComplex, theta: &[f64], opts: &ValidatorOptions) -> Result<PolytopeReport, ValidatorError> {
    let v1: Vec<bool> = (0..c.n_vertices()).map(|k| c.is_v1(k)).collect();
    sphere_conditions(c, theta, &v1, opts)
}

struct DualGraph {
    /// (edge, neighbouring face) per face.
    adj: Vec<Vec<(usize, usize)>>,
    /// Sorted edges around each vertex.
    vertex_edges: Vec<Vec<usize>>,
    face_vertices: Vec<Vec<usize>>,
}

impl DualGraph {
    fn new(c: &CellComplex) -> Self {
        let mut adj = vec![Vec::new(); c.n_faces()];
        for (e, edge) in c.edges().iter().enumerate() {
            let (f, _) = edge.sides[0];
            let (g, _) = edge.sides[1];
            adj[f].push((e, g));
            if f != g {
                adj[g].push((e, f));
            }
        }
        let vertex_edges = (0..c.n_vertices())
            .map(|k| {
                let mut es = c.vertex_edges(k);
                es.sort_unstable();
                es.dedup();
                es
            })
            .collect();
        let face_vertices = (0..c.n_faces())
            .map(|f| {
                let mut vs = c.face(f).to_vec();
                vs.sort_unstable();
                vs.dedup();
                vs
            })
            .collect();
        DualGraph { adj, vertex_edges, face_vertices }
    }

    /// Vertex whose dual face boundary is exactly this edge set.
    fn face_of(&self, sorted: &[usize]) -> Option<usize> {
        self.vertex_edges.iter().position(|es| es.as_slice() == sorted)
    }

    /// Whether all edges lie on the boundary of one dual face.
    fn on_one_face(&self, edges: &[usize]) -> bool {
        self.vertex_edges.iter().any(|es| edges.iter().all(|e| es.binary_search(e).is_ok()))
    }

    fn share_vertex(&self, f: usize, g: usize) -> bool {
        self.face_vertices[f].iter().any(|v| self.face_vertices[g].binary_search(v).is_ok())
    }

    /// Simple paths of length `1..=max_len` from `s`, as edge lists paired
    /// with their last face. Returns false if truncated.
    fn paths_from(&self, s: usize, max_len: usize, limit: usize, mut visit: impl FnMut(&[usize], usize) -> bool) -> bool {
        let mut on_path = vec![false; self.adj.len()];
        on_path[s] = true;
        let mut edges: Vec<usize> = Vec::new();
        let mut faces = vec![s];
        let mut frames = vec![0usize];
        let mut complete = true;
        let mut count = 0usize;
        while let Some(next) = frames.last_mut() {
            let f = *faces.last().unwrap();
            let cand = self.adj[f].get(*next).copied();
            *next += 1;
            match cand {
                Some((e, g)) => {
                    if edges.contains(&e) {
                        continue;
                    }
                    // Closing back at the start ends a loop; report it too.
                    if g == s {
                        edges.push(e);
                        count += 1;
                        if !visit(&edges, g) || count >= limit {
                            return false;
                        }
                        edges.pop();
                        continue;
                    }
                    if on_path[g] {
                        continue;
                    }
                    if edges.len() >= max_len {
                        complete = false;
                        continue;
                    }
                    edges.push(e);
                    faces.push(g);
                    on_path[g] = true;
                    frames.push(0);
                    count += 1;
                    if !visit(&edges, g) || count >= limit {
                        return false;
                    }
                }
                None => {
                    frames.pop();
                    if faces.len() > 1 {
                        on_path[faces.pop().unwrap()] = false;
                        edges.pop();
                    }
                }
            }
        }
        complete
    }
}

fn sphere_conditions(c: &CellComplex, theta: &[f64], v1: &[bool], opts: &ValidatorOptions) -> Result<PolytopeReport, ValidatorError> {
    check_sizes(c, theta, None)?;
    if c.euler_characteristic() != 2 {
        return Err(ValidatorError::NotSphere(c.euler_characteristic()));
    }
    let mut certs = Vec::new();
    let c1 = condition1(theta, &mut certs);
    let g = DualGraph::new(c);
    let two_pi = 2.0 * PI;
    let mut loops_seen: HashSet<Vec<usize>> = HashSet::new();
    let mut paths_seen: HashSet<Vec<usize>> = HashSet::new();
    let mut c2 = true;
    let mut c3 = true;
    let mut complete = true;
    let mut min_margin: Option<f64> = None;
    let note = |m: f64, min: &mut Option<f64>| *min = Some(min.map_or(m, |x: f64| x.min(m)));
    let budget = opts.max_loops;
    for s in 0..c.n_faces() {
        let mut found_loops = Vec::new();
        let mut found_paths = Vec::new();
        let done = g.paths_from(s, opts.max_loop_len, budget, |edges, last| {
            if last == s {
                let mut key = edges.to_vec();
                key.sort_unstable();
                found_loops.push((key, edges.to_vec()));
            } else if s < last {
                found_paths.push((edges.to_vec(), last));
            }
            true
        });
        complete &= done;
        for (key, edges) in found_loops {
            if !loops_seen.insert(key.clone()) {
                continue;
            }
            let sum = path_sum(theta, &edges);
            let face = g.face_of(&key);
            let equality_allowed = face.is_some_and(|k| !v1[k]);
            let ok = if equality_allowed {
                (sum - two_pi).abs() <= opts.tol
            } else {
                let m = sum - two_pi;
                note(m, &mut min_margin);
                m > opts.tol
            };
            if !ok {
                c2 = false;
                certs.push(Certificate::Loop { edges, sum, face_of: face });
            }
        }
        for (edges, last) in found_paths {
            if !g.share_vertex(s, last) || g.on_one_face(&edges) {
                continue;
            }
            let mut key = edges.clone();
            key.sort_unstable();
            key.push(usize::MAX);
            key.push(s.min(last));
            key.push(s.max(last));
            if !paths_seen.insert(key) {
                continue;
            }
            let sum = path_sum(theta, &edges);
            if sum - PI <= opts.tol {
                c3 = false;
                certs.push(Certificate::Path { edges, sum });
            }
        }
        if loops_seen.len() + paths_seen.len() >= budget {
            complete = false;
            break;
        }
    }
    Ok(PolytopeReport {
        condition1: c1,
        condition2: c2,
        condition3: c3,
        condition4: true,
        geometry: None,
        coverage: if complete { Coverage::AllLoops } else { Coverage::Sampled },
        checked: loops_seen.len() + paths_seen.len(),
        min_margin,
        certificates: certs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellcomplex::{build_complex, ComplexInput, Regularity};
    use crate::delaunay::spherical_delaunay;
    use crate::examples;

    fn octahedron(v1: Vec<usize>) -> CellComplex {
        let p = spherical_delaunay(&[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]).unwrap();
        let flags = (0..6).map(|k| v1.contains(&k)).collect();
        p.complex.with_v1(flags)
    }

    fn lawson() -> (CellComplex, Vec<f64>, Vec<f64>) {
        let d = examples::lawson_squares();
        (d.complex, d.theta, d.cone)
    }

    #[test]
    fn subdivision_counts() {
        let (c, _, _) = lawson();
        let d = DualSubdivision::new(&c);
        assert_eq!(d.n_vertices(), 10);
        assert_eq!(d.n_tris(), 24);
        assert_eq!(d.n_edges(), 12 + 24);
        assert_eq!(d.n_vertices() as i64 - d.n_edges() as i64 + d.n_tris() as i64, -2);
        // Primal stars: one triangle per incident edge, bounded by dual edges.
        for k in 0..4 {
            let a = d.analyze(d.open_star(k));
            assert_eq!(a.n_tris, 6);
            assert_eq!(a.chi, 1);
            assert_eq!(a.boundary.len(), 1);
            assert_eq!(a.dual_boundary.iter().map(|x| x.1).sum::<usize>(), 6);
            assert!(a.primal_passages.is_empty());
            assert!(a.is_admissible());
        }
        // Dual stars miss V.
        let a = d.analyze(d.open_star(4));
        assert!(!a.is_admissible());
        assert!(a.dual_boundary.is_empty());
    }

    #[test]
    fn euler_characteristic_two_ways() {
        let (c, _, _) = lawson();
        let d = DualSubdivision::new(&c);
        for mask in 1u32..(1 << 10) {
            let gens: Vec<usize> = (0..10).filter(|&x| mask >> x & 1 == 1).collect();
            let a = d.analyze(&d.domain(&gens));
            if a.whole || a.punctured.is_some() {
                continue;
            }
            assert_eq!(a.chi_gauss_bonnet, Some(a.chi), "{gens:?}");
            if a.connected {
                assert!(a.genus().is_some(), "{gens:?}");
            }
        }
    }

    #[test]
    fn lawson_data_passes_exhaustively() {
        let (c, theta, target) = lawson();
        let r = check_schlenker(&c, &theta, &target, &ValidatorOptions::default()).unwrap();
        assert!(r.passed(), "{:?}", r.certificates);
        assert_eq!(r.coverage, Coverage::SubsetSweep);
        assert!(r.min_margin.unwrap() > 0.0);
    }

    #[test]
    fn walk_enumeration_matches_the_sweep() {
        let (c, theta, target) = lawson();
        let walks = check_schlenker(&c, &theta, &target, &ValidatorOptions { cap: 0, ..Default::default() }).unwrap();
        assert_eq!(walks.coverage, Coverage::BoundaryWalks);
        assert!(walks.passed());
        // Violations: heavier angles make every vertex star too light.
        for t in [0.6 * PI, 0.7 * PI, 0.8 * PI] {
            let heavy = vec![t; theta.len()];
            let a = check_schlenker(&c, &heavy, &target, &ValidatorOptions::default()).unwrap();
            let b = check_schlenker(&c, &heavy, &target, &ValidatorOptions { cap: 0, ..Default::default() }).unwrap();
            let gens = |r: &PolytopeReport| {
                let mut v: Vec<Vec<usize>> = r
                    .certificates
                    .iter()
                    .filter_map(|x| match x {
                        Certificate::Domain { generators, chi: 1, .. } => Some(generators.clone()),
                        _ => None,
                    })
                    .collect();
                v.sort();
                v
            };
            assert_eq!(gens(&a), gens(&b), "theta = {t}");
            if t > 2.0 * PI / 3.0 {
                assert!(!a.condition4);
            }
        }
    }

    fn disk_violations(r: &PolytopeReport) -> Vec<Vec<usize>> {
        let mut v: Vec<Vec<usize>> = r
            .certificates
            .iter()
            .filter_map(|x| match x {
                Certificate::Domain { generators, .. } => Some(generators.clone()),
                _ => None,
            })
            .collect();
        v.sort();
        v
    }

    #[test]
    fn walks_and_sweep_agree_on_random_angles() {
        let (c, _, target) = lawson();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut violated = 0;
        for _ in 0..20 {
            let theta: Vec<f64> = (0..c.n_edges()).map(|_| rng.gen_range(0.3 * PI..0.9 * PI)).collect();
            let a = check_schlenker(&c, &theta, &target, &ValidatorOptions::default()).unwrap();
            let b = check_schlenker(&c, &theta, &target, &ValidatorOptions { cap: 0, ..Default::default() }).unwrap();
            assert_eq!(b.coverage, Coverage::BoundaryWalks);
            assert_eq!(disk_violations(&a), disk_violations(&b));
            assert_eq!(a.condition4, b.condition4);
            violated += usize::from(!a.condition4);
        }
        assert!(violated > 0 && violated < 20);
    }

    #[test]
    fn condition4_violation_has_replayable_certificate() {
        let (c, _, target) = lawson();
        let theta = vec![0.7 * PI; c.n_edges()];
        let r = check_schlenker(&c, &theta, &target, &ValidatorOptions::default()).unwrap();
        assert!(r.condition1 && r.condition2 && r.condition3);
        assert!(!r.condition4);
        for cert in &r.certificates {
            if let Certificate::Domain { generators, lhs, rhs, .. } = cert {
                let (l, h) = replay_domain(&c, &theta, &target, generators);
                assert_eq!(l.to_bits(), lhs.to_bits());
                assert_eq!(h.to_bits(), rhs.to_bits());
                assert!(l <= h + 1e-9);
            }
        }
    }

    #[test]
    fn condition_two_and_three_violations() {
        let (c, theta, _) = lawson();
        // Turn vertex 0 into V0 with target 2π while Σ(π − θ) = 3π.
        let c0 = c.with_v1(vec![false, true, true, true]);
        let r = check_schlenker(&c0, &theta, &[2.0 * PI; 4], &ValidatorOptions::default()).unwrap();
        assert!(!r.condition2);
        assert!(r.certificates.iter().any(|x| matches!(x, Certificate::Vertex { vertex: 0, expected: Some(e), .. } if (e - 3.0 * PI).abs() < 1e-12)));
        let oct = octahedron(vec![0, 1, 2, 3, 4, 5]);
        let r = check_schlenker(&oct, &vec![PI / 2.0; 12], &[2.0 * PI; 6], &ValidatorOptions::default()).unwrap();
        assert!(!r.condition3);
        assert!(r.certificates.contains(&Certificate::Euler { sum: 0.0, bound: 4.0 * PI }));
        let r = check_schlenker(&c, &{
            let mut t = theta.clone();
            t[3] = PI;
            t
        }, &[2.0 * PI; 4], &ValidatorOptions::default())
        .unwrap();
        assert!(!r.condition1);
        assert!(r.certificates.contains(&Certificate::Edge { edge: 3, theta: PI }));
    }

    #[test]
    fn lawson_centres_pass() {
        let d = examples::lawson_centers();
        let r = check_schlenker(&d.complex, &d.theta, &d.cone, &ValidatorOptions { cap: 0, ..Default::default() }).unwrap();
        assert!(r.passed(), "{:?}", r.certificates);
    }

    #[test]
    fn octahedron_rivin() {
        let c = octahedron(vec![]);
        let theta = vec![PI / 2.0; 12];
        let r = check_rivin(&c, &theta, &ValidatorOptions::default()).unwrap();
        assert!(r.passed(), "{:?}", r.certificates);
        assert_eq!(r.coverage, Coverage::AllLoops);
        // The cube graph has 28 simple cycles; only the 6 squares are tight.
        let g = DualGraph::new(&c);
        let mut equal = 0;
        let mut seen = HashSet::new();
        for s in 0..8 {
            g.paths_from(s, 12, usize::MAX, |edges, last| {
                if last == s {
                    let mut key = edges.to_vec();
                    key.sort_unstable();
                    if seen.insert(key.clone()) && (path_sum(&theta, edges) - 2.0 * PI).abs() < 1e-12 {
                        assert!(g.face_of(&key).is_some());
                        equal += 1;
                    }
                }
                true
            });
        }
        assert_eq!(equal, 6);
        assert_eq!(seen.len(), 28);
    }

    #[test]
    fn rivin_equality_clause() {
        let c = octahedron(vec![]);
        let mut theta = vec![PI / 2.0; 12];
        let e = c.vertex_edges(0)[0];
        theta[e] = PI / 2.0 - 0.1;
        let r = check_rivin(&c, &theta, &ValidatorOptions::default()).unwrap();
        assert!(!r.condition2);
        let bad = vec![PI / 2.0, 0.0, PI / 2.0, PI / 2.0, PI / 2.0, PI / 2.0, PI / 2.0, PI / 2.0, PI / 2.0, PI / 2.0, PI / 2.0, PI / 2.0];
        assert!(!check_rivin(&c, &bad, &ValidatorOptions::default()).unwrap().condition1);
    }

    #[test]
    fn bao_bonahon_special_cases() {
        let theta = vec![PI / 2.0; 12];
        let all_v0 = octahedron(vec![]);
        let a = check_bao_bonahon(&all_v0, &theta, &ValidatorOptions::default()).unwrap();
        let b = check_rivin(&all_v0, &theta, &ValidatorOptions::default()).unwrap();
        assert_eq!(a, b);
        let one_v1 = octahedron(vec![4]);
        let r = check_bao_bonahon(&one_v1, &theta, &ValidatorOptions::default()).unwrap();
        assert!(!r.condition2);
        let face = r.certificates.iter().find_map(|x| match x {
            Certificate::Loop { face_of, sum, edges } => {
                assert_eq!(path_sum(&theta, edges).to_bits(), sum.to_bits());
                *face_of
            }
            _ => None,
        });
        assert_eq!(face, Some(4));
    }

    #[test]
    fn path_condition() {
        // Poles in V1 with light edges, equator heavy: realizable.
        let c = octahedron(vec![4, 5]);
        let theta: Vec<f64> = c
            .edges()
            .iter()
            .map(|e| if e.ends.contains(&4) || e.ends.contains(&5) { PI / 3.0 } else { 2.0 * PI / 3.0 })
            .collect();
        let r = check_bao_bonahon(&c, &theta, &ValidatorOptions::default()).unwrap();
        assert!(r.passed(), "{:?}", r.certificates);
        // Pushing the equator angles up breaks the path condition before the
        // loop condition: a two-edge path across the equator weighs 2(π − θ).
        let theta2: Vec<f64> = c
            .edges()
            .iter()
            .map(|e| if e.ends.contains(&4) || e.ends.contains(&5) { PI / 6.0 } else { 0.5 * PI + 0.3 })
            .collect();
        let r = check_bao_bonahon(&c, &theta2, &ValidatorOptions::default()).unwrap();
        if !r.condition3 {
            for cert in &r.certificates {
                if let Certificate::Path { edges, sum } = cert {
                    assert_eq!(path_sum(&theta2, edges).to_bits(), sum.to_bits());
                    assert!(*sum <= PI + 1e-9);
                }
            }
        }
        assert!(!r.passed());
    }

    #[test]
    fn not_a_sphere() {
        let (c, theta, _) = lawson();
        assert!(matches!(check_rivin(&c, &theta, &ValidatorOptions::default()), Err(ValidatorError::NotSphere(-2))));
    }

    #[test]
    fn size_mismatch() {
        let c = build_complex(&ComplexInput {
            faces: vec![vec![0, 1, 2], vec![0, 2, 1]],
            v1: vec![],
            identifications: vec![],
            regularity: Some(Regularity::Surface),
        })
        .unwrap();
        assert!(check_schlenker(&c, &[1.0], &[1.0; 3], &ValidatorOptions::default()).is_err());
    }
}
