//! Command-line front end: `uniformize`, `validate`, `sphere` and `render`.
//!
//! Settings come from an optional TOML file and from flags; flags win.
//! Every artifact is built in memory first, so a failed run writes nothing.
//! Exit codes: 0 success, 1 validation or convergence failure, 2 input error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::AngleData;
use crate::examples::{self, Example};
use crate::layout::{overlap_count, tile, LayoutOptions};
use crate::optimizer::{SolveError, SolveOptions, TraceEntry};
use crate::pipeline::{ingest, uniformize, InputKind, PipelineError, Uniformization};
use crate::render::{fmt17, render_svg, RenderOptions};
use crate::sphere::{realize_on_sphere, SphereError, SphereOptions, SphereRealization};
use crate::validator::{check_bao_bonahon, check_schlenker, Coverage, ValidatorOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hypercircle", version, about = "Uniformize compact Riemann surfaces with hyper-ideal circle patterns")]
pub struct Cli {
    /// TOML run configuration; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for gradient evaluation.
    #[arg(long, global = true, env = "HYPERCIRCLE_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve, lay out and write the pattern, generators and figures.
    Uniformize(RunArgs),
    /// Check the admissibility conditions of the angle data.
    Validate(ValidateArgs),
    /// Realize sphere data by doubling across the link of a vertex.
    Sphere(SphereArgs),
    /// Solve and write only the figures.
    Render(RunArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    SpherePoints,
    FlatConeSurface,
    AngleData,
}

impl From<KindArg> for InputKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::SpherePoints => InputKind::SpherePoints,
            KindArg::FlatConeSurface => InputKind::FlatConeSurface,
            KindArg::AngleData => InputKind::AngleData,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct InputArgs {
    /// JSON input document.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Kind of the input document (default: angle-data, or sphere-points with --cover).
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// JSON cover spec for a sphere point set.
    #[arg(long)]
    pub cover: Option<PathBuf>,
    /// Bundled example instead of an input file.
    #[arg(long)]
    pub example: Option<String>,
    /// Output directory.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SolverArgs {
    /// Stop when the gradient norm falls below this (default 1e-10).
    #[arg(long)]
    pub grad_tol: Option<f64>,
    /// Iteration limit of the solver (default 1000).
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Number of correction pairs kept by the quasi-Newton solver.
    #[arg(long)]
    pub lm_memory: Option<usize>,
    /// Write the per-iteration solver trace.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Word length of the tiles drawn in the cover figure.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Vertex placed at the origin of the layout.
    #[arg(long)]
    pub seed_vertex: Option<usize>,
    /// Figure size in pixels.
    #[arg(long)]
    pub size: Option<u32>,
    /// Draw the face circles in the domain figure.
    #[arg(long)]
    pub face_circles: bool,
    /// Draw the vertex circles of every tile in the cover figure.
    #[arg(long)]
    pub tile_circles: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Largest subdivision vertex count swept exhaustively.
    #[arg(long)]
    pub cap: Option<usize>,
    /// Domains drawn when condition 4 is sampled.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Seed of the domain sampler.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SphereArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Hyper-ideal vertex whose link is the doubling loop.
    #[arg(long)]
    pub k_inf: Option<usize>,
    /// Solve for one variable per pair of mirrored variables.
    #[arg(long)]
    pub fold_symmetry: bool,
    /// Figure size in pixels.
    #[arg(long)]
    pub size: Option<u32>,
}

/// Run configuration file.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: InputConfig,
    pub solver: SolverConfig,
    pub output: OutputConfig,
    pub render: RenderConfig,
    pub sphere: SphereConfig,
    pub validate: ValidateConfig,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub kind: Option<InputKind>,
    pub path: Option<PathBuf>,
    pub cover: Option<PathBuf>,
    pub example: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub grad_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub lm_memory: Option<usize>,
    pub trace: Option<bool>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub depth: Option<usize>,
    pub size: Option<u32>,
    pub seed_vertex: Option<usize>,
    pub vertex_circles: Option<bool>,
    pub face_circles: Option<bool>,
    pub tile_circles: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SphereConfig {
    pub k_inf: Option<usize>,
    pub fold_symmetry: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    pub cap: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

/// A failed run with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError { code: EXIT_INPUT, message: message.into() }
    }
    fn failure(message: impl Into<String>) -> Self {
        CliError { code: EXIT_FAILURE, message: message.into() }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        if e.is_input_error() {
            CliError::input(e.to_string())
        } else {
            CliError::failure(e.to_string())
        }
    }
}

impl From<SphereError> for CliError {
    fn from(e: SphereError) -> Self {
        match e {
            SphereError::NotRealized { .. }
            | SphereError::NotAdmissible { .. }
            | SphereError::Degenerate { .. }
            | SphereError::SymmetryResidualTooLarge { .. }
            | SphereError::Solve(SolveError::MaxIterExceeded { .. } | SolveError::LineSearchFailure { .. })
            | SphereError::Layout(_) => CliError::failure(e.to_string()),
            _ => CliError::input(e.to_string()),
        }
    }
}

/// Files of a run, written together once everything has been computed.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    fn add(&mut self, name: &str, content: String) {
        self.files.push((name.to_string(), content));
    }

    fn write(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.dir).map_err(|e| CliError::input(format!("cannot create {}: {e}", self.dir.display())))?;
        for (name, content) in &self.files {
            let path = self.dir.join(name);
            fs::write(&path, content).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
        }
        Ok(())
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> Result<(RunConfig, PathBuf), CliError> {
    match path {
        None => Ok((RunConfig::default(), PathBuf::from("."))),
        Some(p) => {
            let text = read(p)?;
            let cfg = toml::from_str(&text).map_err(|e| CliError::input(format!("cannot parse {}: {e}", p.display())))?;
            let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
            Ok((cfg, base))
        }
    }
}

/// Input after merging flags and configuration.
struct Source {
    kind: InputKind,
    path: Option<PathBuf>,
    cover: Option<PathBuf>,
    example: Option<String>,
    out: PathBuf,
}

fn resolve_source(args: &InputArgs, cfg: &RunConfig, base: &Path) -> Result<Source, CliError> {
    let rel = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
    let (path, example) = if args.input.is_some() || args.example.is_some() {
        (args.input.clone(), args.example.clone())
    } else {
        (cfg.input.path.as_ref().map(rel), cfg.input.example.clone())
    };
    match (&path, &example) {
        (None, None) => return Err(CliError::input("no input: give --input or --example")),
        (Some(_), Some(_)) => return Err(CliError::input("give either an input file or an example, not both")),
        _ => {}
    }
    let cover = args.cover.clone().or_else(|| cfg.input.cover.as_ref().map(rel));
    let kind = args.kind.map(InputKind::from).or(cfg.input.kind).unwrap_or(if cover.is_some() { InputKind::SpherePoints } else { InputKind::AngleData });
    let out = args.out.clone().or_else(|| cfg.output.dir.as_ref().map(rel)).unwrap_or_else(|| PathBuf::from("hypercircle-out"));
    Ok(Source { kind, path, cover, example, out })
}

enum Loaded {
    Surface(AngleData),
    Sphere(examples::SphereExample),
}

/// Loads the input and returns it with the SHA-256 of its bytes.
fn load(src: &Source) -> Result<(Loaded, String), CliError> {
    let mut hasher = Sha256::new();
    let loaded = if let Some(name) = &src.example {
        hasher.update(format!("example:{name}"));
        match examples::by_name(name) {
            Some(Example::Surface(d)) => Loaded::Surface(d),
            Some(Example::Sphere(s)) => Loaded::Sphere(s),
            None => return Err(CliError::input(format!("unknown example {name:?}; known: {}", examples::NAMES.join(", ")))),
        }
    } else {
        let path = src.path.as_ref().expect("resolved input");
        let text = read(path)?;
        hasher.update(text.as_bytes());
        let cover = src.cover.as_deref().map(read).transpose()?;
        if let Some(c) = &cover {
            hasher.update(c.as_bytes());
        }
        Loaded::Surface(ingest(src.kind, &text, cover.as_deref())?.data)
    };
    Ok((loaded, hex::encode(hasher.finalize())))
}

fn solve_options(args: &SolverArgs, cfg: &RunConfig) -> SolveOptions {
    let d = SolveOptions::default();
    SolveOptions {
        grad_tol: args.grad_tol.or(cfg.solver.grad_tol).unwrap_or(d.grad_tol),
        max_iter: args.max_iter.or(cfg.solver.max_iter).unwrap_or(d.max_iter),
        lm_memory: args.lm_memory.or(cfg.solver.lm_memory).unwrap_or(d.lm_memory),
        ..d
    }
}

fn trace_json(trace: &[TraceEntry]) -> String {
    serde_json::to_string_pretty(trace).expect("trace serializes") + "\n"
}

#[derive(Serialize)]
struct RunSummary<'a> {
    command: &'a str,
    input_hash: String,
    vertices: usize,
    edges: usize,
    faces: usize,
    genus: usize,
    converged: bool,
    iterations: usize,
    trace_length: usize,
    grad_norm: f64,
    max_angle_residual: f64,
    max_cone_residual: f64,
    residuals: crate::pipeline::Residuals,
    generators: usize,
    tiles: usize,
    tile_overlaps: usize,
}

fn run_uniformize(cli: &Cli, args: &RunArgs, figures_only: bool) -> Result<Artifacts, CliError> {
    let (cfg, base) = load_config(cli.config.as_deref())?;
    let src = resolve_source(&args.input, &cfg, &base)?;
    let (loaded, hash) = load(&src)?;
    let data = match loaded {
        Loaded::Surface(d) => d,
        Loaded::Sphere(_) => return Err(CliError::input("sphere data: use the sphere subcommand")),
    };
    let solve = solve_options(&args.solver, &cfg);
    let layout_opts = LayoutOptions { seed_vertex: args.seed_vertex.or(cfg.render.seed_vertex), faces: None };
    let u = uniformize(&data, &solve, &layout_opts)?;
    let depth = args.depth.or(cfg.render.depth).unwrap_or(2);
    let render = RenderOptions {
        size: args.size.or(cfg.render.size).unwrap_or(800),
        vertex_circles: cfg.render.vertex_circles.unwrap_or(true),
        face_circles: args.face_circles || cfg.render.face_circles.unwrap_or(false),
        tile_circles: args.tile_circles || cfg.render.tile_circles.unwrap_or(false),
    };
    let tiles = tile(&u.generators, depth);
    let mut art = Artifacts { dir: src.out, files: Vec::new() };
    art.add("domain.svg", render_svg(&u.pattern, &u.layout, &[], &render));
    art.add("cover.svg", render_svg(&u.pattern, &u.layout, &tiles, &render));
    if !figures_only {
        let summary = summarize("uniformize", hash, &u, tiles.len(), overlap_count(&u.layout.triangles(), &tiles));
        art.add("summary.json", serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n");
        art.add("report.txt", u.report());
        art.add("solution.txt", u.solution_table());
        art.add("angle-data.json", serde_json::to_string_pretty(&data.to_input()).expect("angle data serializes") + "\n");
        if args.solver.trace || cfg.solver.trace.unwrap_or(false) {
            art.add("trace.json", trace_json(&u.solution.trace));
        }
    }
    Ok(art)
}

fn summarize<'a>(command: &'a str, input_hash: String, u: &Uniformization, tiles: usize, tile_overlaps: usize) -> RunSummary<'a> {
    let c = u.problem.complex();
    RunSummary {
        command,
        input_hash,
        vertices: c.n_vertices(),
        edges: c.n_edges(),
        faces: c.n_faces(),
        genus: c.genus(),
        converged: u.solution.converged,
        iterations: u.solution.iterations,
        trace_length: u.solution.trace.len(),
        grad_norm: u.solution.grad_norm,
        max_angle_residual: u.residuals.angle,
        max_cone_residual: u.residuals.cone,
        residuals: u.residuals,
        generators: u.generators.len(),
        tiles,
        tile_overlaps,
    }
}

fn run_validate(cli: &Cli, args: &ValidateArgs) -> Result<(Artifacts, bool), CliError> {
    let (cfg, base) = load_config(cli.config.as_deref())?;
    let src = resolve_source(&args.input, &cfg, &base)?;
    let (loaded, hash) = load(&src)?;
    let d = ValidatorOptions::default();
    let opts = ValidatorOptions {
        cap: args.cap.or(cfg.validate.cap).unwrap_or(d.cap),
        samples: args.samples.or(cfg.validate.samples).unwrap_or(d.samples),
        seed: args.seed.or(cfg.validate.seed).unwrap_or(d.seed),
        ..d
    };
    let report = match &loaded {
        Loaded::Surface(data) if data.complex.genus() > 0 => check_schlenker(&data.complex, &data.theta, &data.cone, &opts),
        Loaded::Surface(data) => check_bao_bonahon(&data.complex, &data.theta, &opts),
        Loaded::Sphere(s) => check_bao_bonahon(&s.complex, &s.theta, &opts),
    }
    .map_err(|e| CliError::input(e.to_string()))?;
    if report.coverage == Coverage::Sampled {
        log::warn!("condition 4 was sampled ({} domains), not checked exhaustively", report.checked);
    }
    #[derive(Serialize)]
    struct Out<'a> {
        input_hash: String,
        passed: bool,
        exhaustive: bool,
        report: &'a crate::validator::PolytopeReport,
    }
    let out = Out { input_hash: hash, passed: report.passed(), exhaustive: report.coverage.is_exhaustive(), report: &report };
    let mut art = Artifacts { dir: src.out, files: Vec::new() };
    art.add("validation.json", serde_json::to_string_pretty(&out).expect("report serializes") + "\n");
    println!(
        "conditions 1..4: {} {} {} {}; coverage {:?}; {} checked",
        report.condition1, report.condition2, report.condition3, report.condition4, report.coverage, report.checked
    );
    Ok((art, report.passed()))
}

#[derive(Serialize)]
struct SphereSummary {
    command: &'static str,
    input_hash: String,
    k_inf: usize,
    fold_symmetry: bool,
    doubled_vertices: usize,
    doubled_faces: usize,
    converged: bool,
    iterations: usize,
    trace_length: usize,
    grad_norm: f64,
    max_angle_residual: f64,
    max_cone_residual: f64,
    residuals: crate::sphere::SphereResiduals,
}

fn sphere_report(r: &SphereRealization) -> String {
    let mut out = String::new();
    let p = &r.pattern;
    let _ = writeln!(out, "# vertex circles: vertex cx cy r bounded");
    for (v, c) in p.vertex_circles.iter().enumerate() {
        let _ = writeln!(out, "{v} {} {} {} {}", fmt17(c.center[0]), fmt17(c.center[1]), fmt17(c.radius), u8::from(c.bounded));
    }
    let _ = writeln!(out, "# face circles: face cx cy r bounded");
    for (f, c) in p.face_circles.iter().enumerate() {
        let _ = writeln!(out, "{f} {} {} {} {}", fmt17(c.center[0]), fmt17(c.center[1]), fmt17(c.radius), u8::from(c.bounded));
    }
    let _ = writeln!(out, "# angles: edge measured");
    for (e, t) in p.theta.iter().enumerate() {
        let _ = writeln!(out, "{e} {}", fmt17(*t));
    }
    out
}

fn run_sphere(cli: &Cli, args: &SphereArgs) -> Result<Artifacts, CliError> {
    let (cfg, base) = load_config(cli.config.as_deref())?;
    let src = resolve_source(&args.input, &cfg, &base)?;
    let (loaded, hash) = load(&src)?;
    let (complex, theta, default_k) = match loaded {
        Loaded::Sphere(s) => (s.complex, s.theta, Some(s.k_inf)),
        Loaded::Surface(d) => (d.complex, d.theta, None),
    };
    let k_inf = args.k_inf.or(cfg.sphere.k_inf).or(default_k).ok_or_else(|| CliError::input("give --k-inf"))?;
    let fold = args.fold_symmetry || cfg.sphere.fold_symmetry.unwrap_or(false);
    let opts = SphereOptions { solve: solve_options(&args.solver, &cfg), fold_symmetry: fold, ..Default::default() };
    let r = realize_on_sphere(&complex, &theta, k_inf, &opts)?;
    let summary = SphereSummary {
        command: "sphere",
        input_hash: hash,
        k_inf,
        fold_symmetry: fold,
        doubled_vertices: r.doubled.complex.n_vertices(),
        doubled_faces: r.doubled.complex.n_faces(),
        converged: r.solution.converged,
        iterations: r.solution.iterations,
        trace_length: r.solution.trace.len(),
        grad_norm: r.solution.grad_norm,
        max_angle_residual: r.residuals.theta.max(r.residuals.angle),
        max_cone_residual: r.residuals.cone,
        residuals: r.residuals,
    };
    let render = RenderOptions { size: args.size.or(cfg.render.size).unwrap_or(800), face_circles: true, ..Default::default() };
    let mut art = Artifacts { dir: src.out, files: Vec::new() };
    art.add("summary.json", serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n");
    art.add("sphere.json", serde_json::to_string_pretty(&r.pattern).expect("pattern serializes") + "\n");
    art.add("sphere-report.txt", sphere_report(&r));
    art.add("half.svg", render_svg(&r.half, &r.layout, &[], &render));
    if args.solver.trace || cfg.solver.trace.unwrap_or(false) {
        art.add("trace.json", trace_json(&r.solution.trace));
    }
    Ok(art)
}

fn configure_threads(cli: &Cli) -> Result<(), CliError> {
    let from_config = match cli.config.as_deref() {
        Some(p) => load_config(Some(p))?.0.solver.threads,
        None => None,
    };
    if let Some(n) = cli.threads.or(from_config) {
        if n == 0 {
            return Err(CliError::input("--threads must be positive"));
        }
        // A pool configured earlier in this process stays in place.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs a parsed command line and returns its exit code.
pub fn run(cli: &Cli) -> i32 {
    let outcome = configure_threads(cli).and_then(|()| match &cli.command {
        Command::Uniformize(a) => run_uniformize(cli, a, false).and_then(|art| art.write().map(|()| EXIT_OK)),
        Command::Render(a) => run_uniformize(cli, a, true).and_then(|art| art.write().map(|()| EXIT_OK)),
        Command::Sphere(a) => run_sphere(cli, a).and_then(|art| art.write().map(|()| EXIT_OK)),
        Command::Validate(a) => run_validate(cli, a).and_then(|(art, ok)| art.write().map(|()| if ok { EXIT_OK } else { EXIT_FAILURE })),
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

/// Parses `args` (including the program name) and runs them.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_INPUT
            } else {
                EXIT_OK
            }
        }
    }
}
