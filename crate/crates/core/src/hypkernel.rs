//! Hyperbolic trigonometry of decorated triangles and hyper-ideal
//! tetrahedra.
//!
//! A decorated triangle has vertices that are either hyper-ideal (carrying a
//! vertex circle of radius `r > 0`) or ideal points (`r = 0`). Its shape is
//! described either by edge lengths and radii `(l, r)` or by the edge
//! lengths `(a, b)` of the associated hyper-ideal tetrahedron. Edge slots are
//! ordered `[ij, jk, ki]` and vertex slots `[i, j, k]`.

use std::f64::consts::{LN_2, PI};

use thiserror::Error;

use crate::cellcomplex::CellComplex;

/// Slack allowed below 1 in an `acosh` argument before it is an error.
pub const ACOSH_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("{what}: argument {arg} outside the domain")]
    DomainError { what: &'static str, arg: f64 },
    #[error("not a decorated metric: {0}")]
    NotInER(String),
}

/// `acosh` with a small tolerance below 1 and a log form for large input.
pub fn acosh_checked(x: f64) -> Result<f64, KernelError> {
    if x.is_nan() || x < 1.0 - ACOSH_SLACK {
        return Err(KernelError::DomainError { what: "acosh", arg: x });
    }
    if x <= 1.0 {
        Ok(0.0)
    } else if x > 1e8 {
        Ok((2.0 * x).ln() - 0.25 / (x * x))
    } else {
        Ok(x.acosh())
    }
}

fn ln_sinh(t: f64) -> f64 {
    debug_assert!(t > 0.0);
    if t > 20.0 {
        t - LN_2 + (-(-2.0 * t).exp()).ln_1p()
    } else {
        t.sinh().ln()
    }
}

fn ln_cosh(t: f64) -> f64 {
    let t = t.abs();
    t - LN_2 + (-2.0 * t).exp().ln_1p()
}

fn log_add_exp(p: f64, q: f64) -> f64 {
    let m = p.max(q);
    m + ((p - m).exp() + (q - m).exp()).ln()
}

/// `acosh(1 + exp(ln_delta))` without forming the argument when it is huge.
fn acosh_one_plus_exp(ln_delta: f64) -> f64 {
    if ln_delta > 30.0 {
        ln_delta + LN_2 + (-ln_delta).exp()
    } else {
        let d = ln_delta.exp();
        (d + (d * (2.0 + d)).sqrt()).ln_1p()
    }
}

/// Length of an edge between two ideal vertices: `2 asinh(e^{x/2})`.
pub fn f1(x: f64) -> f64 {
    if x > 0.0 {
        x + 2.0 * (1.0 + (1.0 + (-x).exp()).sqrt()).ln()
    } else {
        2.0 * (0.5 * x).exp().asinh()
    }
}

/// Length of an edge from a hyper-ideal to an ideal vertex:
/// `acosh((cosh b + e^x) / sinh b)`.
pub fn f2(b: f64, x: f64) -> Result<f64, KernelError> {
    if !(b > 0.0) || x.is_nan() {
        return Err(KernelError::DomainError { what: "f2", arg: b });
    }
    Ok(acosh_one_plus_exp(log_add_exp(-b, x) - ln_sinh(b)))
}

/// Length of an edge between two hyper-ideal vertices:
/// `acosh((cosh u cosh v + cosh x) / (sinh u sinh v))`.
pub fn f3(u: f64, v: f64, x: f64) -> Result<f64, KernelError> {
    if !(u > 0.0) {
        return Err(KernelError::DomainError { what: "f3", arg: u });
    }
    if !(v > 0.0) || x.is_nan() {
        return Err(KernelError::DomainError { what: "f3", arg: v });
    }
    let ln_delta = log_add_exp(ln_cosh(u - v), ln_cosh(x)) - ln_sinh(u) - ln_sinh(v);
    Ok(acosh_one_plus_exp(ln_delta))
}

/// Vertex-circle radius from the truncation length: `asinh(1 / sinh b)`.
/// The map is an involution on `(0, inf)`.
pub fn r_of_b(b: f64) -> f64 {
    if b > 700.0 {
        2.0 * (-b).exp()
    } else {
        (1.0 / b.sinh()).asinh()
    }
}

/// Inverse of [`r_of_b`].
pub fn b_of_r(r: f64) -> f64 {
    r_of_b(r)
}

/// Angle between sides `l1` and `l2` of a hyperbolic triangle, opposite
/// `l3`. Degenerate side triples give `0` or `pi`.
pub fn law_of_cosines_angle(l1: f64, l2: f64, l3: f64) -> f64 {
    let p = 0.5 * (l3 + l1 - l2);
    let q = 0.5 * (l3 - l1 + l2);
    let s = 0.5 * (l1 + l2 + l3);
    let t = 0.5 * (l1 + l2 - l3);
    if !(t > 0.0) {
        return PI;
    }
    if !(p > 0.0) || !(q > 0.0) {
        return 0.0;
    }
    let ln_tan2 = ln_sinh(p) + ln_sinh(q) - ln_sinh(s) - ln_sinh(t);
    2.0 * (0.5 * ln_tan2).exp().atan()
}

/// Interior angles `[beta_i, beta_j, beta_k]` from lengths `[l_ij, l_jk, l_ki]`.
pub fn triangle_beta(l: [f64; 3]) -> [f64; 3] {
    [
        law_of_cosines_angle(l[2], l[0], l[1]),
        law_of_cosines_angle(l[0], l[1], l[2]),
        law_of_cosines_angle(l[1], l[2], l[0]),
    ]
}

/// Edge length from tetrahedron data, by endpoint types.
pub fn edge_length(u_hyper: bool, v_hyper: bool, bu: f64, bv: f64, a: f64) -> Result<f64, KernelError> {
    match (u_hyper, v_hyper) {
        (true, true) => f3(bu, bv, a),
        (true, false) => f2(bu, a),
        (false, true) => f2(bv, a),
        (false, false) => Ok(f1(a)),
    }
}

/// Angles of one decorated triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleAngles {
    /// Angles between the face circle and the edges `[ij, jk, ki]`.
    pub alpha: [f64; 3],
    /// Interior angles at `[i, j, k]`.
    pub beta: [f64; 3],
    pub lengths: [f64; 3],
    /// Whether the triangle inequalities hold strictly.
    pub in_te: bool,
}

fn strict_triangle(l: [f64; 3]) -> bool {
    l[0] < l[1] + l[2] && l[1] < l[2] + l[0] && l[2] < l[0] + l[1]
}

/// Angles of a decorated triangle from its tetrahedron data.
///
/// `hyper[v]` marks hyper-ideal vertices; `b[v]` is ignored for ideal ones.
/// Outside the triangle inequalities the angles take their limiting values:
/// `pi` for the overlong edge and its opposite vertex, `0` for the rest.
pub fn decorated_angles(hyper: [bool; 3], a: [f64; 3], b: [f64; 3]) -> Result<TriangleAngles, KernelError> {
    let n1 = hyper.iter().filter(|&&h| h).count();
    // Rotate so that the pattern matches one of the four canonical cases.
    let shift = match n1 {
        2 => (hyper.iter().position(|&h| !h).unwrap() + 2) % 3,
        1 => hyper.iter().position(|&h| h).unwrap(),
        _ => 0,
    };
    let rot = |x: [f64; 3]| [x[shift], x[(shift + 1) % 3], x[(shift + 2) % 3]];
    let rh = [hyper[shift], hyper[(shift + 1) % 3], hyper[(shift + 2) % 3]];
    let (ra, rb) = (rot(a), rot(b));
    let l = [
        edge_length(rh[0], rh[1], rb[0], rb[1], ra[0])?,
        edge_length(rh[1], rh[2], rb[1], rb[2], ra[1])?,
        edge_length(rh[2], rh[0], rb[2], rb[0], ra[2])?,
    ];
    let beta = triangle_beta(l);
    let in_te = strict_triangle(l);
    let alpha = if !in_te {
        let long = (0..3).max_by(|&x, &y| (l[x] - l[(x + 1) % 3] - l[(x + 2) % 3]).total_cmp(&(l[y] - l[(y + 1) % 3] - l[(y + 2) % 3]))).unwrap();
        let mut al = [0.0; 3];
        al[long] = PI;
        al
    } else {
        canonical_alpha(n1, ra, rb, beta)?
    };
    let unrot = |x: [f64; 3]| {
        let mut out = [0.0; 3];
        for m in 0..3 {
            out[(m + shift) % 3] = x[m];
        }
        out
    };
    Ok(TriangleAngles { alpha: unrot(alpha), beta: unrot(beta), lengths: unrot(l), in_te })
}

/// Alpha angles in canonical position:
/// two hyper-ideal vertices are `i, k`; one hyper-ideal vertex is `i`.
fn canonical_alpha(n1: usize, a: [f64; 3], b: [f64; 3], beta: [f64; 3]) -> Result<[f64; 3], KernelError> {
    let [aij, ajk, aki] = a;
    let [bi, bj, bk] = b;
    let g = law_of_cosines_angle;
    Ok(match n1 {
        0 => [
            0.5 * (PI + beta[2] - beta[0] - beta[1]),
            0.5 * (PI + beta[0] - beta[1] - beta[2]),
            0.5 * (PI + beta[1] - beta[2] - beta[0]),
        ],
        1 => {
            let s_ij = f2(bi, -aij)?;
            let s_ki = f2(bi, -aki)?;
            let s = f1(ajk - aij - aki);
            let a_ij = g(s, s_ij, s_ki);
            let a_ki = g(s, s_ki, s_ij);
            [a_ij, PI - beta[1] - a_ij, a_ki]
        }
        2 => {
            let s_ki = f3(aki, bi, bk)?;
            let s_ij = f2(bi, -aij)?;
            let s = f2(aki, ajk - aij)?;
            let a_ij = g(s, s_ij, s_ki);
            let a_ki = g(s, s_ki, s_ij);
            [a_ij, PI - a_ij - beta[1], a_ki]
        }
        _ => {
            let si_ij = f3(aij, bi, bj)?;
            let si_ki = f3(aki, bi, bk)?;
            let si = f3(aki, aij, ajk)?;
            let sj_ij = f3(aij, bj, bi)?;
            let sj_jk = f3(ajk, bj, bk)?;
            let sj = f3(aij, ajk, aki)?;
            [g(si, si_ij, si_ki), g(sj, sj_jk, sj_ij), g(si, si_ki, si_ij)]
        }
    })
}

/// Both truncating-face routes to `alpha_ij` for a triangle with three
/// hyper-ideal vertices.
pub fn all_hyper_alpha_ij_routes(a: [f64; 3], b: [f64; 3]) -> Result<(f64, f64), KernelError> {
    let [aij, ajk, aki] = a;
    let [bi, bj, bk] = b;
    let g = law_of_cosines_angle;
    let via_i = g(f3(aki, aij, ajk)?, f3(aij, bi, bj)?, f3(aki, bi, bk)?);
    let via_j = g(f3(aij, ajk, aki)?, f3(aij, bj, bi)?, f3(ajk, bj, bk)?);
    Ok((via_i, via_j))
}

/// Both routes to `alpha_ki` for a triangle whose only hyper-ideal vertex is `i`:
/// the truncating face at `i`, and `alpha_ij + beta_j - beta_k`.
pub fn one_hyper_alpha_ki_routes(a: [f64; 3], bi: f64) -> Result<(f64, f64), KernelError> {
    let [aij, ajk, aki] = a;
    let g = law_of_cosines_angle;
    let s_ij = f2(bi, -aij)?;
    let s_ki = f2(bi, -aki)?;
    let s = f1(ajk - aij - aki);
    let l = [f2(bi, aij)?, f1(ajk), f2(bi, aki)?];
    let beta = triangle_beta(l);
    Ok((g(s, s_ki, s_ij), g(s, s_ij, s_ki) + beta[1] - beta[2]))
}

/// Decorated metric `(l, r)` on a complex from tetrahedron data `(a, b)`.
///
/// `a` is indexed by edge and `b` by vertex (ignored on ideal vertices).
pub fn psi(c: &CellComplex, a: &[f64], b: &[f64]) -> Result<(Vec<f64>, Vec<f64>), KernelError> {
    let mut l = Vec::with_capacity(c.n_edges());
    for (e, edge) in c.edges().iter().enumerate() {
        let [u, v] = edge.ends;
        l.push(edge_length(c.is_v1(u), c.is_v1(v), b[u], b[v], a[e])?);
    }
    let r = (0..c.n_vertices()).map(|v| if c.is_v1(v) { r_of_b(b[v]) } else { 0.0 }).collect();
    Ok((l, r))
}

/// Tetrahedron data `(a, b)` from a decorated metric, after checking that
/// `(l, r)` is one.
pub fn psi_inverse(c: &CellComplex, l: &[f64], r: &[f64]) -> Result<(Vec<f64>, Vec<f64>), KernelError> {
    for v in 0..c.n_vertices() {
        let ok = if c.is_v1(v) { r[v] > 0.0 && r[v].is_finite() } else { r[v] == 0.0 };
        if !ok {
            return Err(KernelError::NotInER(format!("radius {} at vertex {v}", r[v])));
        }
    }
    for (e, edge) in c.edges().iter().enumerate() {
        let [u, v] = edge.ends;
        if !(l[e] > 0.0) || !l[e].is_finite() {
            return Err(KernelError::NotInER(format!("length {} on edge {e}", l[e])));
        }
        if !(l[e] > r[u] + r[v]) {
            return Err(KernelError::NotInER(format!("vertex circles of edge {e} overlap")));
        }
    }
    for f in 0..c.n_faces() {
        let es = c.face_edges(f);
        if es.len() == 3 && !strict_triangle([l[es[0]], l[es[1]], l[es[2]]]) {
            return Err(KernelError::NotInER(format!("triangle inequality fails on face {f}")));
        }
    }
    let b: Vec<f64> = (0..c.n_vertices()).map(|v| if c.is_v1(v) { b_of_r(r[v]) } else { 0.0 }).collect();
    let mut a = Vec::with_capacity(c.n_edges());
    for (e, edge) in c.edges().iter().enumerate() {
        let [u, v] = edge.ends;
        let val = match (c.is_v1(u), c.is_v1(v)) {
            (true, true) => {
                // cosh a = cosh l sinh b_u sinh b_v - cosh b_u cosh b_v, written so that
                // the difference from 1 is formed without cancellation.
                let (su, sv) = (1.0 / r[u].sinh(), 1.0 / r[v].sinh());
                let excess = su * sv * (l[e].cosh() - (r[u] + r[v]).cosh());
                let x = 1.0 + excess;
                if !(excess > 0.0) {
                    return Err(KernelError::NotInER(format!("edge {e} is tangent or overlapping")));
                }
                acosh_checked(x)?
            }
            (true, false) | (false, true) => {
                let w = if c.is_v1(u) { u } else { v };
                let s = 1.0 / r[w].sinh();
                // e^a = sinh b (cosh l - cosh r)
                (s * (l[e].cosh() - r[w].cosh())).ln()
            }
            (false, false) => 2.0 * (0.5 * l[e]).sinh().ln(),
        };
        a.push(val);
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    // Reference values computed with 40-digit mpmath.
    const F1_0: f64 = 1.762747174039086;
    const F2_1_0: f64 = 1.406829113747295;
    const F3_1_1_0: f64 = 1.5438736658106095;
    const F3_1_1_1: f64 = 1.7049128323580137;
    const R_1: f64 = 0.7719368329053047;
    const G_111: f64 = 0.9187978721780274;

    #[test]
    fn frozen_values() {
        assert!((f1(0.0) - F1_0).abs() < 1e-15);
        assert!((f2(1.0, 0.0).unwrap() - F2_1_0).abs() < 1e-15);
        assert!((f3(1.0, 1.0, 0.0).unwrap() - F3_1_1_0).abs() < 1e-15);
        assert!((f3(1.0, 1.0, 1.0).unwrap() - F3_1_1_1).abs() < 1e-15);
        assert!((r_of_b(1.0) - R_1).abs() < 1e-15);
        assert!((law_of_cosines_angle(1.0, 1.0, 1.0) - G_111).abs() < 1e-15);
        assert!((f2(2.0, -1.0).unwrap() - 0.5208682611103769).abs() < 1e-15);
        assert!((f1(-3.0) - 0.4426379058588879).abs() < 1e-15);
        assert!((f3(0.5, 2.0, 3.0).unwrap() - 2.71317203264633).abs() < 1e-14);
    }

    #[test]
    fn zero_a_is_tangency() {
        for b in [0.3, 1.0, 4.0, 10.0] {
            let l = f3(b, b, 0.0).unwrap();
            assert!((l - 2.0 * r_of_b(b)).abs() < 1e-13 * l.max(1.0), "b={b}");
        }
    }

    #[test]
    fn acosh_domain() {
        assert!(matches!(acosh_checked(1.0 - 1e-10), Err(KernelError::DomainError { .. })));
        assert_eq!(acosh_checked(1.0 - 1e-13).unwrap(), 0.0);
        let big = 1e12;
        assert!((acosh_checked(big).unwrap() - big.acosh()).abs() < 1e-12);
        assert!(matches!(f2(0.0, 1.0), Err(KernelError::DomainError { .. })));
        assert!(matches!(f3(-1.0, 1.0, 0.0), Err(KernelError::DomainError { .. })));
    }

    #[test]
    fn large_arguments_stay_finite() {
        assert!((f1(800.0) - (800.0 + 2.0 * LN_2)).abs() < 1e-12);
        let l = f3(400.0, 400.0, 900.0).unwrap();
        assert!(l.is_finite() && l > 0.0);
        assert!(f2(1.0, 750.0).unwrap().is_finite());
    }

    #[test]
    fn involution() {
        for b in [0.01, 0.5, 1.0, 3.0, 15.0, 25.0] {
            assert!((b_of_r(r_of_b(b)) - b).abs() < 1e-12 * b.max(1.0), "b={b}");
        }
    }

    #[test]
    fn ideal_triangle_alpha() {
        let t = decorated_angles([false; 3], [0.0; 3], [0.0; 3]).unwrap();
        let beta = law_of_cosines_angle(F1_0, F1_0, F1_0);
        for k in 0..3 {
            assert!((t.beta[k] - beta).abs() < 1e-15);
            assert!((t.alpha[k] - (PI - beta) / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_triangle_takes_limit_values() {
        // Edge ij far too long.
        let t = decorated_angles([false; 3], [8.0, 0.0, 0.0], [0.0; 3]).unwrap();
        assert!(!t.in_te);
        assert_eq!(t.alpha, [PI, 0.0, 0.0]);
        assert_eq!(t.beta, [0.0, 0.0, PI]);
    }

    #[test]
    fn case_two_routes_agree() {
        let (x, y) = all_hyper_alpha_ij_routes([0.7, 1.2, 0.4], [1.1, 0.6, 2.0]).unwrap();
        assert!((x - y).abs() < 1e-13);
    }

    #[test]
    fn case_three_routes_agree() {
        let (x, y) = one_hyper_alpha_ki_routes([0.3, -0.5, 0.8], 0.9).unwrap();
        assert!((x - y).abs() < 1e-13);
    }

    // Independent oracle: lay the decorated triangle out in the Poincare
    // disk, build the circle orthogonal to the three vertex circles and
    // measure its angle with each edge geodesic on the side away from the
    // triangle.
    struct Circ {
        a: f64,
        b: C,
        c: f64,
    }
    fn circ_from(m: C, r: f64) -> Circ {
        Circ { a: 1.0 / r, b: m / r, c: (m.norm_sqr() - r * r) / r }
    }
    fn geodesic_through(p: C, q: C) -> Circ {
        let ps = p / p.norm_sqr();
        let (ax, ay, bx, by, cx, cy) = (p.re, p.im, q.re, q.im, ps.re, ps.im);
        let d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
        let ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay) + (cx * cx + cy * cy) * (ay - by)) / d;
        let uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx) + (cx * cx + cy * cy) * (bx - ax)) / d;
        let m = C::new(ux, uy);
        circ_from(m, (m - p).norm())
    }
    fn value(k: &Circ, z: C) -> f64 {
        k.a * z.norm_sqr() - 2.0 * (k.b.conj() * z).re + k.c
    }
    fn product(x: &Circ, y: &Circ) -> f64 {
        (x.b * y.b.conj()).re - 0.5 * (x.a * y.c + y.a * x.c)
    }
    fn euclid_circle(p: C, r: f64) -> (C, f64) {
        if r == 0.0 {
            return (p, 0.0);
        }
        let d = 2.0 * p.norm().atanh();
        let u = if p.norm() > 0.0 { p / p.norm() } else { C::new(1.0, 0.0) };
        let (x1, x2) = (((d + r) / 2.0).tanh(), ((d - r) / 2.0).tanh());
        (u * (x1 + x2) / 2.0, (x1 - x2) / 2.0)
    }
    fn oracle_alpha(l: [f64; 3], r: [f64; 3]) -> Option<[f64; 3]> {
        let bi = law_of_cosines_angle(l[2], l[0], l[1]);
        let p = [C::new(0.0, 0.0), C::new((l[0] / 2.0).tanh(), 0.0), C::from_polar((l[2] / 2.0).tanh(), bi)];
        let cs: Vec<(C, f64)> = (0..3).map(|k| euclid_circle(p[k], r[k])).collect();
        let row = |x: (C, f64), y: (C, f64)| (2.0 * (y.0 - x.0).re, 2.0 * (y.0 - x.0).im, y.0.norm_sqr() - x.0.norm_sqr() - y.1 * y.1 + x.1 * x.1);
        let (r1, r2) = (row(cs[0], cs[1]), row(cs[0], cs[2]));
        let det = r1.0 * r2.1 - r1.1 * r2.0;
        let centre = C::new((r1.2 * r2.1 - r1.1 * r2.2) / det, (r1.0 * r2.2 - r1.2 * r2.0) / det);
        let rad = ((centre - cs[0].0).norm_sqr() - cs[0].1 * cs[0].1).sqrt();
        if centre.norm() + rad > 0.999 {
            return None;
        }
        let face = circ_from(centre, rad);
        let mut out = [0.0; 3];
        for (k, (u, v, w)) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)].into_iter().enumerate() {
            let mut g = if p[u].norm() < 1e-15 || (p[u].conj() * p[v]).im.abs() < 1e-14 {
                let dir = (p[v] - p[u]) / (p[v] - p[u]).norm();
                Circ { a: 0.0, b: dir * C::new(0.0, 1.0), c: 0.0 }
            } else {
                geodesic_through(p[u], p[v])
            };
            if value(&g, p[w]) < 0.0 {
                g = Circ { a: -g.a, b: -g.b, c: -g.c };
            }
            out[k] = (-product(&face, &g)).clamp(-1.0, 1.0).acos();
        }
        Some(out)
    }

    #[test]
    fn alpha_matches_geometric_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let patterns = [[true, false, true], [true, true, true], [true, false, false], [false, false, false], [false, true, true], [false, true, false]];
        for hyper in patterns {
            let mut checked = 0;
            for _ in 0..400 {
                let a: [f64; 3] = std::array::from_fn(|e| if hyper[e] && hyper[(e + 1) % 3] { rng.gen_range(0.05..2.0) } else { rng.gen_range(-1.5..1.5) });
                let b: [f64; 3] = std::array::from_fn(|v| if hyper[v] { rng.gen_range(0.3..2.0) } else { 0.0 });
                let t = decorated_angles(hyper, a, b).unwrap();
                if !t.in_te {
                    continue;
                }
                let r: [f64; 3] = std::array::from_fn(|v| if hyper[v] { r_of_b(b[v]) } else { 0.0 });
                let Some(geo) = oracle_alpha(t.lengths, r) else { continue };
                for k in 0..3 {
                    assert!((geo[k] - t.alpha[k]).abs() < 1e-10, "{hyper:?} {a:?} {b:?}: {geo:?} vs {:?}", t.alpha);
                }
                checked += 1;
            }
            assert!(checked > 50, "{hyper:?}: only {checked} samples");
        }
    }

    #[test]
    fn psi_round_trip() {
        let c = CellComplex::from_faces(vec![vec![0, 2, 1], vec![0, 1, 3], vec![1, 2, 3], vec![0, 3, 2]], &[0, 2]).unwrap();
        let a = vec![0.5, -0.2, 0.3, 0.1, 0.7, -0.4];
        let b = vec![1.2, 0.0, 0.8, 0.0];
        let (l, r) = psi(&c, &a, &b).unwrap();
        let (a2, b2) = psi_inverse(&c, &l, &r).unwrap();
        for e in 0..6 {
            assert!((a[e] - a2[e]).abs() < 1e-12);
        }
        for v in 0..4 {
            assert!((b[v] - b2[v]).abs() < 1e-12);
        }
    }

    #[test]
    fn psi_inverse_rejects_tangent_circles() {
        let c = CellComplex::from_faces(vec![vec![0, 2, 1], vec![0, 1, 3], vec![1, 2, 3], vec![0, 3, 2]], &[0, 1, 2, 3]).unwrap();
        let r = vec![0.5; 4];
        let l = vec![1.0; 6];
        assert!(matches!(psi_inverse(&c, &l, &r), Err(KernelError::NotInER(_))));
    }

    proptest::proptest! {
        #[test]
        fn beta_sum_below_pi(l0 in 0.05f64..5.0, l1 in 0.05f64..5.0, l2 in 0.05f64..5.0) {
            let b = triangle_beta([l0, l1, l2]);
            proptest::prop_assert!(b.iter().sum::<f64>() <= PI + 1e-12);
            for x in b { proptest::prop_assert!((0.0..=PI).contains(&x)); }
        }

        #[test]
        fn alpha_in_range(a0 in 0.01f64..3.0, a1 in -2.0f64..2.0, a2 in -2.0f64..2.0, b0 in 0.1f64..3.0) {
            let t = decorated_angles([true, false, false], [a0, a1, a2], [b0, 0.0, 0.0]).unwrap();
            for x in t.alpha { proptest::prop_assert!((-1e-12..=PI + 1e-12).contains(&x)); }
        }
    }
}
