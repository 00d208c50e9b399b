//! Bound-constrained limited-memory quasi-Newton minimization driven by the
//! gradient alone.
//!
//! Iterates stay strictly inside the open box. The line search works on the
//! directional derivative `phi'(s) = g(x + s d) . d` and accepts a step once
//! `c2 phi'(0) <= phi'(s) <= -c2 phi'(0)`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{EnergyError, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub grad_tol: f64,
    pub max_iter: usize,
    pub lm_memory: usize,
    pub backtrack_shrink: f64,
    pub feasibility_margin: f64,
    pub wolfe_c2: f64,
    pub max_line_search: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            grad_tol: 1e-10,
            max_iter: 1000,
            lm_memory: 10,
            backtrack_shrink: 0.5,
            feasibility_margin: 1e-12,
            wolfe_c2: 0.9,
            max_line_search: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub grad_norm: f64,
    pub step: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub x_star: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("surface of genus {genus} has no hyperbolic pattern of this kind")]
    GenusTooLow { genus: usize },
    #[error("no convergence after {} iterations (gradient norm {:.3e})", .best.iterations, .best.grad_norm)]
    MaxIterExceeded { best: Box<SolveResult> },
    #[error("line search failed at iteration {}", .at.iterations)]
    LineSearchFailure { at: Box<SolveResult> },
    #[error("no admissible starting point found")]
    InitFailure,
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

/// A gradient field of a convex function on a product of half-lines and lines.
pub trait GradientField {
    fn dim(&self) -> usize;
    fn lower_bounds(&self) -> Vec<Option<f64>>;
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, EnergyError>;
}

impl GradientField for Problem {
    fn dim(&self) -> usize {
        Problem::dim(self)
    }
    fn lower_bounds(&self) -> Vec<Option<f64>> {
        self.layout.lower_bounds()
    }
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, EnergyError> {
        Problem::gradient(self, x)
    }
}

/// Restriction of a field to a linear subspace where each reduced variable
/// drives a class of full variables with unit weights.
pub struct ReducedField<'a, F: GradientField> {
    pub inner: &'a F,
    /// Reduced variable of each full variable.
    pub class_of: Vec<usize>,
    pub n_reduced: usize,
}

impl<F: GradientField> ReducedField<'_, F> {
    pub fn expand(&self, xr: &[f64]) -> Vec<f64> {
        self.class_of.iter().map(|&c| xr[c]).collect()
    }
    pub fn reduce(&self, x: &[f64]) -> Vec<f64> {
        let mut xr = vec![0.0; self.n_reduced];
        for (i, &c) in self.class_of.iter().enumerate() {
            xr[c] = x[i];
        }
        xr
    }
}

impl<F: GradientField> GradientField for ReducedField<'_, F> {
    fn dim(&self) -> usize {
        self.n_reduced
    }
    fn lower_bounds(&self) -> Vec<Option<f64>> {
        let full = self.inner.lower_bounds();
        let mut lb = vec![None; self.n_reduced];
        for (i, &c) in self.class_of.iter().enumerate() {
            if let Some(v) = full[i] {
                lb[c] = Some(lb[c].map_or(v, |w: f64| w.max(v)));
            }
        }
        lb
    }
    fn gradient(&self, xr: &[f64]) -> Result<Vec<f64>, EnergyError> {
        let g = self.inner.gradient(&self.expand(xr))?;
        let mut gr = vec![0.0; self.n_reduced];
        for (i, &c) in self.class_of.iter().enumerate() {
            gr[c] += g[i];
        }
        Ok(gr)
    }
}

/// Starting point: `a = 1` on edges between hyper-ideal vertices, `a = 0`
/// elsewhere, `b = 1`; `b` is scaled by 1.5 until the point is admissible.
pub fn default_init(p: &Problem) -> Result<Vec<f64>, SolveError> {
    let n = p.layout.n_edges();
    let mut x: Vec<f64> = (0..n).map(|e| if p.layout.edge_is_hyper(e) { 1.0 } else { 0.0 }).collect();
    x.extend(std::iter::repeat(1.0).take(p.layout.hyper_vertices().len()));
    for _ in 0..=20 {
        if p.feasibility(&x)?.in_te {
            return Ok(x);
        }
        for v in &mut x[n..] {
            *v *= 1.5;
        }
    }
    Err(SolveError::InitFailure)
}

/// Checks the genus precondition, picks the default start and minimizes.
pub fn solve(p: &Problem, opts: &SolveOptions) -> Result<SolveResult, SolveError> {
    let genus = p.complex().genus();
    if genus <= 1 && !p.doubled {
        return Err(SolveError::GenusTooLow { genus });
    }
    let x0 = default_init(p)?;
    minimize(p, x0, opts)
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Gradient with components pinned at an active lower bound removed.
fn free_gradient(x: &[f64], g: &[f64], lb: &[Option<f64>]) -> Vec<f64> {
    g.iter()
        .zip(x)
        .zip(lb)
        .map(|((&gi, &xi), bound)| match bound {
            Some(l) if xi - l <= 1e-10 && gi > 0.0 => 0.0,
            _ => gi,
        })
        .collect()
}

/// Minimizes the convex function whose gradient is `field`, from `x0`.
pub fn minimize<F: GradientField>(field: &F, x0: Vec<f64>, opts: &SolveOptions) -> Result<SolveResult, SolveError> {
    let lb = field.lower_bounds();
    let mut x = x0;
    let mut g = field.gradient(&x)?;
    let mut gf = free_gradient(&x, &g, &lb);
    let mut gnorm = norm(&gf);
    let mut trace = vec![TraceEntry { iteration: 0, grad_norm: gnorm, step: 0.0, evaluations: 1 }];
    let mut best = (gnorm, x.clone());
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let snapshot = |x: &[f64], gnorm: f64, it: usize, converged: bool, trace: &[TraceEntry]| SolveResult {
        x_star: x.to_vec(),
        grad_norm: gnorm,
        iterations: it,
        converged,
        trace: trace.to_vec(),
    };

    for it in 1..=opts.max_iter {
        if gnorm <= opts.grad_tol {
            return Ok(snapshot(&x, gnorm, it - 1, true, &trace));
        }
        let mut d = two_loop(&gf, &pairs);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            pairs.clear();
            d = gf.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let first = pairs.is_empty();
        let step0 = if first { (1.0 / norm(&d)).min(1.0) } else { 1.0 };
        let s_cap = boundary_step(&x, &d, &lb, opts.feasibility_margin);
        let ls = line_search(field, &x, &d, slope, step0, s_cap, opts);
        let (s, x_new, g_new, evals) = match ls {
            Some(v) => v,
            None => {
                let b = snapshot(&best.1, best.0, it, false, &trace);
                return Err(SolveError::LineSearchFailure { at: Box::new(b) });
            }
        };
        let sk: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yk: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&sk, &yk);
        if sy > 1e-14 * norm(&sk) * norm(&yk) && sy > 0.0 {
            if pairs.len() == opts.lm_memory {
                pairs.pop_front();
            }
            pairs.push_back((sk, yk, 1.0 / sy));
        }
        x = x_new;
        g = g_new;
        gf = free_gradient(&x, &g, &lb);
        gnorm = norm(&gf);
        trace.push(TraceEntry { iteration: it, grad_norm: gnorm, step: s, evaluations: evals });
        if gnorm < best.0 {
            best = (gnorm, x.clone());
        }
    }
    if gnorm <= opts.grad_tol {
        return Ok(snapshot(&x, gnorm, opts.max_iter, true, &trace));
    }
    let b = snapshot(&best.1, best.0, opts.max_iter, false, &trace);
    Err(SolveError::MaxIterExceeded { best: Box::new(b) })
}

/// `-H g` by the two-loop recursion over the stored curvature pairs.
fn two_loop(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

/// Largest step keeping every bounded variable strictly above its bound.
fn boundary_step(x: &[f64], d: &[f64], lb: &[Option<f64>], margin: f64) -> f64 {
    let mut cap = f64::INFINITY;
    for ((&xi, &di), bound) in x.iter().zip(d).zip(lb) {
        if let Some(l) = bound {
            if di < 0.0 {
                let room = (xi - l - margin).max(0.0);
                cap = cap.min(0.995 * room / -di);
            }
        }
    }
    cap
}

type Accepted = (f64, Vec<f64>, Vec<f64>, usize);

fn line_search<F: GradientField>(
    field: &F,
    x: &[f64],
    d: &[f64],
    slope0: f64,
    step0: f64,
    s_cap: f64,
    opts: &SolveOptions,
) -> Option<Accepted> {
    let c2 = opts.wolfe_c2;
    let mut lo = (0.0, slope0);
    let mut hi: Option<(f64, f64)> = None;
    let mut s = step0.min(s_cap);
    if !(s > 0.0) {
        return None;
    }
    for evals in 1..=opts.max_line_search {
        let xs: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + s * b).collect();
        let slope = match field.gradient(&xs) {
            Ok(g) => {
                let sl = dot(&g, d);
                if sl >= c2 * slope0 && sl <= -c2 * slope0 {
                    return Some((s, xs, g, evals));
                }
                if sl < c2 * slope0 && s >= s_cap {
                    // Blocked by the box: take the longest allowed step.
                    return Some((s, xs, g, evals));
                }
                Some(sl)
            }
            Err(_) => None,
        };
        match slope {
            Some(sl) if sl < c2 * slope0 => {
                lo = (s, sl);
                s = match hi {
                    Some(h) => interpolate(lo, h),
                    None => (2.0 * s).min(s_cap),
                };
            }
            Some(sl) => {
                hi = Some((s, sl));
                s = interpolate(lo, (s, sl));
            }
            None => {
                hi = Some((s, f64::INFINITY));
                s = lo.0 + opts.backtrack_shrink * (s - lo.0);
            }
        }
        if !(s > 0.0) {
            return None;
        }
    }
    None
}

/// Secant root of the directional derivative, kept inside the bracket.
fn interpolate(lo: (f64, f64), hi: (f64, f64)) -> f64 {
    let width = hi.0 - lo.0;
    let guess = if hi.1.is_finite() && hi.1 > lo.1 { lo.0 - lo.1 * width / (hi.1 - lo.1) } else { lo.0 + 0.5 * width };
    guess.clamp(lo.0 + 0.1 * width, hi.0 - 0.1 * width)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic {
        diag: Vec<f64>,
        centre: Vec<f64>,
        bounded: Vec<bool>,
    }

    impl GradientField for Quadratic {
        fn dim(&self) -> usize {
            self.diag.len()
        }
        fn lower_bounds(&self) -> Vec<Option<f64>> {
            self.bounded.iter().map(|&b| if b { Some(0.0) } else { None }).collect()
        }
        fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, EnergyError> {
            Ok(x.iter().zip(&self.diag).zip(&self.centre).map(|((xi, d), c)| d * (xi - c)).collect())
        }
    }

    #[test]
    fn quadratic_converges() {
        let q = Quadratic { diag: vec![1.0, 10.0, 100.0, 0.5], centre: vec![1.0, -2.0, 3.0, 0.25], bounded: vec![true, false, true, true] };
        let r = minimize(&q, vec![5.0, 5.0, 5.0, 5.0], &SolveOptions::default()).unwrap();
        assert!(r.converged);
        for (x, c) in r.x_star.iter().zip(&q.centre) {
            assert!((x - c).abs() < 1e-9);
        }
    }

    #[test]
    fn iterates_respect_bounds() {
        // Minimum sits on the boundary of the open box; iterates must stay inside.
        let q = Quadratic { diag: vec![1.0, 1.0], centre: vec![-1.0, 2.0], bounded: vec![true, false] };
        let opts = SolveOptions { max_iter: 50, ..Default::default() };
        let r = minimize(&q, vec![1.0, 0.0], &opts).unwrap();
        assert!(r.x_star[0] > 0.0);
        assert!((r.x_star[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn max_iter_reports_best() {
        let q = Quadratic { diag: vec![1.0, 1e4], centre: vec![1.0, 1.0], bounded: vec![false, false] };
        let opts = SolveOptions { max_iter: 1, ..Default::default() };
        match minimize(&q, vec![0.0, 0.0], &opts) {
            Err(SolveError::MaxIterExceeded { best }) => assert!(!best.converged),
            other => panic!("unexpected {other:?}"),
        }
    }
}
