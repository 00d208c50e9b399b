//! End-to-end runs: ingest an input, solve, lay out, and write reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::branchcover::{lift, CoverError, CoverSpec, LiftedAngleData};
use crate::cellcomplex::ComplexError;
use crate::data::{AngleData, AngleDataInput};
use crate::delaunay::{intrinsic_delaunay_flat, spherical_delaunay, DelaunayError, FlatConeSurface, FlatSurfaceInput, PointSetInput};
use crate::energy::{EnergyError, Problem};
use crate::layout::{circles, develop, fuchsian_generators, holonomy, CirclePattern2D, DecoratedMetric, FuchsianGenerator, HypLayout, Isometry, LayoutError, LayoutOptions};
use crate::optimizer::{solve, SolveError, SolveOptions, SolveResult};
use crate::render::fmt17;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot parse {what}: {message}")]
    Parse { what: &'static str, message: String },
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Delaunay(#[from] DelaunayError),
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

impl PipelineError {
    /// Errors caused by the input rather than by the run.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, PipelineError::Solve(SolveError::MaxIterExceeded { .. } | SolveError::LineSearchFailure { .. }))
    }
}

/// Kind of an input document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputKind {
    /// Point set on the sphere; needs a cover spec to give a surface of genus ≥ 2.
    SpherePoints,
    FlatConeSurface,
    AngleData,
}

fn parse<T: for<'de> Deserialize<'de>>(what: &'static str, text: &str) -> Result<T, PipelineError> {
    serde_json::from_str(text).map_err(|e| PipelineError::Parse { what, message: e.to_string() })
}

/// Angle data ready to solve, with the cover it was lifted to if any.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub data: AngleData,
    pub lifted: Option<LiftedAngleData>,
}

/// Parses a JSON input document and builds its angle data. Sphere points
/// are lifted through `cover` when given.
pub fn ingest(kind: InputKind, text: &str, cover: Option<&str>) -> Result<Ingested, PipelineError> {
    let cover: Option<CoverSpec> = cover.map(|t| parse("cover spec", t)).transpose()?;
    match kind {
        InputKind::SpherePoints => {
            let points: PointSetInput = parse("point set", text)?;
            let base = spherical_delaunay(&points.to_sphere())?;
            match cover {
                Some(spec) => {
                    let lifted = lift(&base, &spec)?;
                    Ok(Ingested { data: lifted.to_angle_data()?, lifted: Some(lifted) })
                }
                None => Ok(Ingested { data: base.into_angle_data()?, lifted: None }),
            }
        }
        InputKind::FlatConeSurface => {
            let input: FlatSurfaceInput = parse("flat surface", text)?;
            let pattern = intrinsic_delaunay_flat(&FlatConeSurface::from_input(&input)?)?;
            Ok(Ingested { data: pattern.into_angle_data()?, lifted: None })
        }
        InputKind::AngleData => {
            let input: AngleDataInput = parse("angle data", text)?;
            Ok(Ingested { data: AngleData::from_input(&input)?, lifted: None })
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Residuals {
    /// Largest `|Σ α − θ̃|` over the edges of the triangulation.
    pub angle: f64,
    /// Largest `|Σ β − Θ|` over the hyper-ideal vertices.
    pub cone: f64,
    /// Largest gap between a vertex's corner angle sum in the layout and its
    /// target cone angle.
    pub layout_cone: f64,
    /// Largest mismatch between a laid edge and its metric length.
    pub edges: f64,
    /// Largest distance of a vertex holonomy from the identity.
    pub holonomy: f64,
    /// Largest endpoint residual of a generator on its paired side.
    pub generators: f64,
    pub orthogonality: f64,
    /// Largest disagreement between face circles of one merged face.
    pub redundant: f64,
}

#[derive(Debug, Clone)]
pub struct Uniformization {
    pub problem: Problem,
    pub solution: SolveResult,
    pub metric: DecoratedMetric,
    pub layout: HypLayout,
    pub pattern: CirclePattern2D,
    pub generators: Vec<FuchsianGenerator>,
    pub residuals: Residuals,
}

/// Solves `data`, develops the result and measures every residual.
pub fn uniformize(data: &AngleData, solve_opts: &SolveOptions, layout_opts: &LayoutOptions) -> Result<Uniformization, PipelineError> {
    let problem = Problem::new(&data.complex, &data.theta, &data.cone)?;
    let solution = solve(&problem, solve_opts)?;
    let x = &solution.x_star;
    let c = problem.complex();
    let (alpha, beta) = problem.angle_sums(x)?;
    let mut res = Residuals::default();
    for (s, t) in alpha.iter().zip(&problem.theta_tilde) {
        res.angle = res.angle.max((s - t).abs());
    }
    for &v in problem.layout.hyper_vertices() {
        res.cone = res.cone.max((beta[v] - problem.cone[v]).abs());
    }
    let metric = DecoratedMetric::from_solution(&problem, x)?;
    let layout = develop(c, &metric, layout_opts)?;
    for (v, s) in layout.corner_angle_sums(c).iter().enumerate() {
        res.layout_cone = res.layout_cone.max((s - problem.cone[v]).abs());
    }
    res.edges = layout.edge_residual(c, &metric);
    for v in 0..c.n_vertices() {
        res.holonomy = res.holonomy.max(holonomy(c, &metric, v).distance(&Isometry::IDENTITY));
    }
    let generators = fuchsian_generators(&layout)?;
    res.generators = generators.iter().map(|g| g.residual).fold(0.0, f64::max);
    let pattern = circles(&layout, &metric, c, &problem.tri.face_parent)?;
    res.orthogonality = pattern.orthogonality_residual;
    res.redundant = pattern.redundant_residual;
    Ok(Uniformization { problem, solution, metric, layout, pattern, generators, residuals: res })
}

impl Uniformization {
    /// Text report: generators as `SL(2,R)` matrices, side pairings, vertex
    /// radii and edge lengths, all with 17 significant digits.
    pub fn report(&self) -> String {
        let mut out = String::new();
        let c = self.problem.complex();
        let _ = writeln!(out, "# generators: index edge a b c d");
        for (k, g) in self.generators.iter().enumerate() {
            let m = g.matrix();
            let _ = writeln!(out, "{k} {} {} {} {} {}", g.pairing.edge, fmt17(m[0][0]), fmt17(m[0][1]), fmt17(m[1][0]), fmt17(m[1][1]));
        }
        let _ = writeln!(out, "# pairings: edge face side face side");
        for p in &self.layout.pairings {
            let [(f, i), (g, j)] = p.sides;
            let _ = writeln!(out, "{} {f} {i} {g} {j}", p.edge);
        }
        let _ = writeln!(out, "# radii: vertex radius");
        for (v, r) in self.metric.radii.iter().enumerate() {
            let _ = writeln!(out, "{v} {}", fmt17(*r));
        }
        let _ = writeln!(out, "# lengths: edge u v length");
        for (e, l) in self.metric.lengths.iter().enumerate() {
            let [u, v] = c.edge(e).ends;
            let _ = writeln!(out, "{e} {u} {v} {}", fmt17(*l));
        }
        out
    }

    /// Solved variables: `a*` and `l*` per edge, `b*` and `r*` per vertex.
    pub fn solution_table(&self) -> String {
        let mut out = String::new();
        let c = self.problem.complex();
        let (a, b) = self.problem.layout.split(&self.solution.x_star);
        let _ = writeln!(out, "# edges: edge u v a l");
        for e in 0..c.n_edges() {
            let [u, v] = c.edge(e).ends;
            let _ = writeln!(out, "{e} {u} {v} {} {}", fmt17(a[e]), fmt17(self.metric.lengths[e]));
        }
        let _ = writeln!(out, "# vertices: vertex v1 b r");
        for v in 0..c.n_vertices() {
            let _ = writeln!(out, "{v} {} {} {}", u8::from(c.is_v1(v)), fmt17(b[v]), fmt17(self.metric.radii[v]));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;

    #[test]
    fn lawson_run_is_consistent() {
        let u = uniformize(&examples::lawson_squares(), &SolveOptions::default(), &LayoutOptions::default()).unwrap();
        let r = u.residuals;
        assert!(u.solution.converged);
        assert!(r.angle < 1e-9 && r.cone < 1e-9, "{r:?}");
        assert!(r.layout_cone < 1e-8 && r.holonomy < 1e-8 && r.generators < 1e-8 && r.edges < 1e-9, "{r:?}");
        assert_eq!(u.generators.len(), u.layout.pairings.len());
        assert!(u.generators.len() >= 2 * u.problem.complex().genus());
        let report = u.report();
        assert!(report.lines().any(|l| l.starts_with("# radii")));
        assert_eq!(report, u.report());
    }

    #[test]
    fn ideal_vertices_close_up() {
        for d in [examples::lawson_centers(), examples::lawson_curve().to_angle_data().unwrap()] {
            let u = uniformize(&d, &SolveOptions { grad_tol: 1e-10, ..Default::default() }, &LayoutOptions::default()).unwrap();
            let r = u.residuals;
            assert!(r.layout_cone < 1e-7 && r.holonomy < 1e-7 && r.orthogonality < 1e-8, "{r:?}");
        }
    }

    #[test]
    fn angle_data_round_trip() {
        let d = examples::lawson_squares();
        let text = serde_json::to_string(&d.to_input()).unwrap();
        let back = ingest(InputKind::AngleData, &text, None).unwrap();
        assert_eq!(back.data.theta, d.theta);
        assert_eq!(back.data.complex.n_edges(), d.complex.n_edges());
    }

    #[test]
    fn parse_errors_are_input_errors() {
        let e = ingest(InputKind::AngleData, "{", None).unwrap_err();
        assert!(e.is_input_error());
        assert!(matches!(e, PipelineError::Parse { .. }));
    }
}
