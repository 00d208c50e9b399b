//! The gradient of the convex functional whose critical point is the
//! hyper-ideal circle pattern.
//!
//! Variables are `a_e` for every edge of the triangulation followed by `b_v`
//! for every hyper-ideal vertex in increasing vertex order. The gradient is
//! `sum alpha - theta~` on edges and `sum beta - Theta` on hyper-ideal
//! vertices. The functional value itself is never needed.

use rayon::prelude::*;
use thiserror::Error;

use crate::cellcomplex::{CellComplex, Triangulation};
use crate::hypkernel::{self, KernelError, TriangleAngles};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Index map between the flat variable vector and edge/vertex quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct VarLayout {
    n_edges: usize,
    n_vertices: usize,
    hyper: Vec<usize>,
    slot: Vec<Option<usize>>,
    edge_hyper: Vec<bool>,
}

impl VarLayout {
    pub fn new(c: &CellComplex) -> Self {
        let hyper = c.v1_vertices();
        let mut slot = vec![None; c.n_vertices()];
        for (k, &v) in hyper.iter().enumerate() {
            slot[v] = Some(c.n_edges() + k);
        }
        let edge_hyper = c.edges().iter().map(|e| c.is_v1(e.ends[0]) && c.is_v1(e.ends[1])).collect();
        VarLayout { n_edges: c.n_edges(), n_vertices: c.n_vertices(), hyper, slot, edge_hyper }
    }
    pub fn dim(&self) -> usize {
        self.n_edges + self.hyper.len()
    }
    pub fn n_edges(&self) -> usize {
        self.n_edges
    }
    pub fn hyper_vertices(&self) -> &[usize] {
        &self.hyper
    }
    /// Variable index of `b_v`, if `v` is hyper-ideal.
    pub fn b_slot(&self, v: usize) -> Option<usize> {
        self.slot[v]
    }
    /// Whether edge `e` joins two hyper-ideal vertices (so `a_e > 0`).
    pub fn edge_is_hyper(&self, e: usize) -> bool {
        self.edge_hyper[e]
    }
    /// Per-edge `a` and per-vertex `b` (zero on ideal vertices).
    pub fn split(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let a = x[..self.n_edges].to_vec();
        let mut b = vec![0.0; self.n_vertices];
        for (k, &v) in self.hyper.iter().enumerate() {
            b[v] = x[self.n_edges + k];
        }
        (a, b)
    }
    pub fn join(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut x = a.to_vec();
        x.extend(self.hyper.iter().map(|&v| b[v]));
        x
    }
    /// Lower bounds: `0` on hyper-ideal edges and on every `b`, none otherwise.
    pub fn lower_bounds(&self) -> Vec<Option<f64>> {
        let mut lb: Vec<Option<f64>> = self.edge_hyper.iter().map(|&h| if h { Some(0.0) } else { None }).collect();
        lb.extend(std::iter::repeat(Some(0.0)).take(self.hyper.len()));
        lb
    }
}

/// Angle data and triangulation defining one minimization problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub tri: Triangulation,
    /// Target angle per triangulation edge (`pi` on diagonals).
    pub theta_tilde: Vec<f64>,
    /// Target cone angle per vertex; only hyper-ideal vertices are used.
    pub cone: Vec<f64>,
    pub layout: VarLayout,
    /// Set for data produced by sphere doubling, which is allowed genus 0.
    pub doubled: bool,
}

impl Problem {
    /// Problem on the fan subtriangulation of `c`, with `theta` on the edges of `c`.
    pub fn new(c: &CellComplex, theta: &[f64], cone: &[f64]) -> Result<Self, EnergyError> {
        if theta.len() != c.n_edges() || cone.len() != c.n_vertices() {
            return Err(EnergyError::InvalidInput("angle arrays do not match the complex".into()));
        }
        let tri = c.subtriangulate();
        let theta_tilde = tri.extend_angles(theta);
        Self::from_triangulation(tri, theta_tilde, cone.to_vec())
    }

    pub fn from_triangulation(tri: Triangulation, theta_tilde: Vec<f64>, cone: Vec<f64>) -> Result<Self, EnergyError> {
        let c = &tri.complex;
        if theta_tilde.len() != c.n_edges() || cone.len() != c.n_vertices() {
            return Err(EnergyError::InvalidInput("angle arrays do not match the triangulation".into()));
        }
        if theta_tilde.iter().chain(cone.iter()).any(|x| !x.is_finite()) {
            return Err(EnergyError::InvalidInput("non-finite angle".into()));
        }
        let layout = VarLayout::new(c);
        Ok(Problem { tri, theta_tilde, cone, layout, doubled: false })
    }

    pub fn complex(&self) -> &CellComplex {
        &self.tri.complex
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn check(&self, x: &[f64]) -> Result<(), EnergyError> {
        if x.len() != self.dim() {
            return Err(EnergyError::InvalidInput(format!("expected {} variables, got {}", self.dim(), x.len())));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(EnergyError::InvalidInput(format!("variable {i} is not finite")));
        }
        Ok(())
    }

    /// Angles of every triangle at `x`, in face order.
    pub fn triangle_angles(&self, x: &[f64]) -> Result<Vec<TriangleAngles>, EnergyError> {
        self.check(x)?;
        let (a, b) = self.layout.split(x);
        let c = self.complex();
        (0..c.n_faces())
            .into_par_iter()
            .map(|t| {
                let vs = c.face(t);
                let es = c.face_edges(t);
                let hyper = [c.is_v1(vs[0]), c.is_v1(vs[1]), c.is_v1(vs[2])];
                hypkernel::decorated_angles(hyper, [a[es[0]], a[es[1]], a[es[2]]], [b[vs[0]], b[vs[1]], b[vs[2]]])
                    .map_err(EnergyError::from)
            })
            .collect()
    }

    /// Sums of alpha per edge and of beta per vertex, accumulated in face order.
    pub fn angle_sums(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>), EnergyError> {
        let angles = self.triangle_angles(x)?;
        let c = self.complex();
        let mut alpha = vec![0.0; c.n_edges()];
        let mut beta = vec![0.0; c.n_vertices()];
        for (t, ang) in angles.iter().enumerate() {
            for k in 0..3 {
                alpha[c.face_edges(t)[k]] += ang.alpha[k];
                beta[c.face(t)[k]] += ang.beta[k];
            }
        }
        Ok((alpha, beta))
    }

    /// Gradient of the functional at `x`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, EnergyError> {
        let (alpha, beta) = self.angle_sums(x)?;
        let mut g: Vec<f64> = alpha.iter().zip(&self.theta_tilde).map(|(s, t)| s - t).collect();
        for &v in self.layout.hyper_vertices() {
            g.push(beta[v] - self.cone[v]);
        }
        Ok(g)
    }

    /// Cone-angle residual at every vertex: hyper-ideal vertices against
    /// `Theta`, ideal vertices against `sum (pi - theta~)` over incident edges.
    pub fn cone_residuals(&self, x: &[f64]) -> Result<Vec<f64>, EnergyError> {
        let (_, beta) = self.angle_sums(x)?;
        let c = self.complex();
        Ok((0..c.n_vertices())
            .map(|v| {
                let target = if c.is_v1(v) {
                    self.cone[v]
                } else {
                    c.vertex_edges(v).iter().map(|&e| std::f64::consts::PI - self.theta_tilde[e]).sum()
                };
                beta[v] - target
            })
            .collect())
    }

    /// Which admissibility constraints `x` violates, with slacks.
    pub fn feasibility(&self, x: &[f64]) -> Result<FeasibilityReport, EnergyError> {
        self.check(x)?;
        let (a, b) = self.layout.split(x);
        let c = self.complex();
        let mut violations = Vec::new();
        for e in 0..c.n_edges() {
            if self.layout.edge_is_hyper(e) && !(a[e] > 0.0) {
                violations.push(Violation { kind: ViolationKind::EdgeBound { edge: e }, slack: a[e] });
            }
        }
        for &v in self.layout.hyper_vertices() {
            if !(b[v] > 0.0) {
                violations.push(Violation { kind: ViolationKind::VertexBound { vertex: v }, slack: b[v] });
            }
        }
        let in_box = violations.is_empty();
        if in_box {
            let (l, r) = hypkernel::psi(c, &a, &b)?;
            for (e, edge) in c.edges().iter().enumerate() {
                let slack = l[e] - r[edge.ends[0]] - r[edge.ends[1]];
                if !(slack > 0.0) {
                    violations.push(Violation { kind: ViolationKind::CirclesOverlap { edge: e }, slack });
                }
            }
            for t in 0..c.n_faces() {
                let es = c.face_edges(t);
                for k in 0..3 {
                    let slack = l[es[(k + 1) % 3]] + l[es[(k + 2) % 3]] - l[es[k]];
                    if !(slack > 0.0) {
                        violations.push(Violation { kind: ViolationKind::TriangleInequality { face: t, edge: es[k] }, slack });
                    }
                }
            }
        }
        let in_te = violations.is_empty();
        Ok(FeasibilityReport { violations, in_box, in_te })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViolationKind {
    /// `a_e > 0` fails on an edge between hyper-ideal vertices.
    EdgeBound { edge: usize },
    /// `b_v > 0` fails.
    VertexBound { vertex: usize },
    /// `l_e > r_u + r_v` fails.
    CirclesOverlap { edge: usize },
    /// The triangle inequality opposite `edge` fails on `face`.
    TriangleInequality { face: usize, edge: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
    pub in_box: bool,
    pub in_te: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tetra(v1: &[usize]) -> CellComplex {
        CellComplex::from_faces(vec![vec![0, 2, 1], vec![0, 1, 3], vec![1, 2, 3], vec![0, 3, 2]], v1).unwrap()
    }

    #[test]
    fn layout_round_trip() {
        let c = tetra(&[1, 3]);
        let l = VarLayout::new(&c);
        assert_eq!(l.dim(), 8);
        let x: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let (a, b) = l.split(&x);
        assert_eq!(b, vec![0.0, 6.0, 0.0, 7.0]);
        assert_eq!(l.join(&a, &b), x);
    }

    #[test]
    fn nan_is_invalid() {
        let c = tetra(&[]);
        let p = Problem::new(&c, &[PI / 2.0; 6], &[2.0 * PI; 4]).unwrap();
        let mut x = vec![0.0; 6];
        x[2] = f64::NAN;
        assert!(matches!(p.gradient(&x), Err(EnergyError::InvalidInput(_))));
        assert!(matches!(p.feasibility(&x), Err(EnergyError::InvalidInput(_))));
    }

    #[test]
    fn zero_a_on_hyper_edge_is_reported() {
        let c = tetra(&[0, 1, 2, 3]);
        let p = Problem::new(&c, &[PI / 2.0; 6], &[2.0 * PI; 4]).unwrap();
        let mut x = vec![0.0; 6];
        x.extend([10.0; 4]);
        let rep = p.feasibility(&x).unwrap();
        assert!(!rep.in_te && !rep.in_box);
        assert!(rep.violations.iter().all(|v| matches!(v.kind, ViolationKind::EdgeBound { .. })));
        assert_eq!(rep.violations.len(), 6);
    }

    #[test]
    fn equilateral_start_is_admissible() {
        let c = tetra(&[0, 1, 2, 3]);
        let p = Problem::new(&c, &[PI / 2.0; 6], &[2.0 * PI; 4]).unwrap();
        let mut x = vec![1.0; 6];
        x.extend([1.0; 4]);
        assert!(p.feasibility(&x).unwrap().in_te);
    }

    #[test]
    fn ideal_vertex_cone_angle_is_automatic() {
        let c = tetra(&[0]);
        let p = Problem::new(&c, &[PI / 2.0; 6], &[2.0 * PI; 4]).unwrap();
        let mut x = vec![0.3, -0.1, 0.2, 0.05, -0.2, 0.1];
        x.push(1.3);
        let res = p.cone_residuals(&x).unwrap();
        let g = p.gradient(&x).unwrap();
        // At an ideal vertex beta = pi - alpha - alpha per corner, so the
        // residual there is minus the sum of incident edge residuals.
        for v in 1..4 {
            let edge_part: f64 = p.complex().vertex_edges(v).iter().map(|&e| g[e]).sum();
            assert!((res[v] + edge_part).abs() < 1e-12, "v={v}");
        }
    }
}
