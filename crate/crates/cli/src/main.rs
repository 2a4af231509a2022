//! `detforest`: spanning-forest measures on periodic graphs from the command line.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure, 64 usage error.

mod commands;
mod output;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Debug, Parser, Serialize)]
#[command(name = "detforest", version, about = "Determinantal spanning-forest measures on periodic planar graphs")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct Global {
    /// Graph file (JSON: kind, vertices, edges, optional mass).
    #[arg(long, global = true)]
    pub graph: Option<PathBuf>,
    /// Output file; stdout when absent.  The format follows the extension where several exist.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Random seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 1 makes every output bitwise reproducible.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Numerical tolerance (interpolation residual, optimality residual, ...).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Where to write the run manifest; defaults to `<out>.manifest.json`, else stderr.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Characteristic polynomial det(Δ + D_M) as JSON terms.
    Charpoly,
    /// Real roots of the strip polynomial; by default the roots ≥ 1 as a JSON array.
    Roots(RootsArgs),
    /// Growth rates a_j of a strip graph.
    Growth(GrowthArgs),
    /// Newton polygon of a torus graph.
    Polygon,
    /// Ronkin function R(x, y) at a point or on a grid.
    Ronkin(GridArgs),
    /// Surface tension σ(s, t) at a point or on a grid.
    Sigma(GridArgs),
    /// Kernel entries: finite transfer current, strip K^(j) or torus K^{s,t}.
    Kernel(KernelArgs),
    /// Sample a spanning-forest configuration on a finite cover.
    Sample(SampleArgs),
    /// Count intersections of the spectral curve with a torus |z| = r1, |w| = r2.
    Harnack(HarnackArgs),
    /// Special divisor points of the square grid.
    Divisor(DivisorArgs),
    /// Classify the decay of correlations at a slope.
    Decay(DecayArgs),
    /// Minimise the surface-tension functional on a mesh and draw its level curves.
    Limitshape(LimitArgs),
    /// Apply an electrical move and print the new graph.
    Transform(TransformArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct RootsArgs {
    /// Print the full report (all roots, leading coefficient, flags).
    #[arg(long)]
    pub full: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct GrowthArgs {
    /// Only this component count; all admissible j otherwise.
    #[arg(long)]
    pub j: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
#[command(after_help = "Coordinates take a number or a range lo:hi:n (n equally spaced values); grids run y-major.\n\
CSV columns:\n  ronkin  x,y,R\n  sigma   s,t,sigma,free_energy,x,y,boundary  (x, y: amoeba point, empty on the polygon boundary)")]
pub struct GridArgs {
    /// First coordinate (x for ronkin, s for sigma).
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    /// Second coordinate (y for ronkin, t for sigma).
    #[arg(long, allow_hyphen_values = true)]
    pub y: String,
    /// Write CSV instead of JSON (also chosen by an `.csv` output file).
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct KernelArgs {
    /// Torus graphs: slope (s, t) in the interior of the Newton polygon.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "component")]
    pub slope: Option<String>,
    /// Strip graphs: component count j of the ESF measure.
    #[arg(long)]
    pub component: Option<usize>,
    /// Strip graphs: contour radius inside the root gap of j.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Edge indices of the fundamental domain; all edges when absent.
    #[arg(long, value_delimiter = ',')]
    pub edges: Vec<usize>,
    /// Translation between the two edges: `x` on strips, `x,y` on tori.
    #[arg(long, allow_hyphen_values = true, default_value = "0,0")]
    pub shift: String,
    /// Finite transfer current at the monodromy z (when neither --slope nor --component is given).
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub z: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dpp,
    Wilson,
    Mcmc,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long, value_enum, default_value = "dpp")]
    pub method: Method,
    /// Cover size in the first direction.
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Cover size in the second direction (torus graphs; defaults to --n).
    #[arg(long)]
    pub n2: Option<usize>,
    /// Monodromies of the DPP kernel.
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub z: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub w: f64,
    /// Wilson: root vertex of the cover (name such as `o@0,0`), needed without masses.
    #[arg(long)]
    pub root: Option<String>,
    /// MCMC: number of steps.
    #[arg(long, default_value_t = 100_000)]
    pub steps: u64,
    /// MCMC: target homology class `p,q`.
    #[arg(long, allow_hyphen_values = true, default_value = "0,0")]
    pub homology: String,
}

#[derive(Debug, Args, Serialize)]
pub struct HarnackArgs {
    #[arg(long)]
    pub r1: f64,
    #[arg(long)]
    pub r2: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct DivisorArgs {
    #[arg(long)]
    pub n: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct DecayArgs {
    #[arg(long, allow_hyphen_values = true, default_value = "0,0")]
    pub slope: String,
    #[arg(long, default_value_t = 24)]
    pub max_dist: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct LimitArgs {
    /// Mesh JSON (vertices, triangles, optional fixed list); unit square grid when absent.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Cells per side of the default square mesh.
    #[arg(long, default_value_t = 8)]
    pub cells: usize,
    /// CSV `vertex,height` for the fixed vertices.
    #[arg(long)]
    pub boundary: PathBuf,
    /// Height difference between consecutive level curves.
    #[arg(long, default_value_t = 0.1)]
    pub spacing: f64,
    /// Grid resolution of the surface-tension table.
    #[arg(long, default_value_t = 8)]
    pub resolution: usize,
    /// JSON energy report; stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Series,
    Parallel,
    DeadBranch,
    StarTriangle,
}

#[derive(Debug, Args, Serialize)]
pub struct TransformArgs {
    #[arg(long = "move", value_enum)]
    pub kind: MoveKind,
    /// Vertex name for series, dead-branch and star-triangle moves.
    #[arg(long)]
    pub vertex: Option<String>,
    /// Two edge indices for a parallel move.
    #[arg(long, value_delimiter = ',')]
    pub edges: Vec<usize>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Charpoly => "charpoly",
            Command::Roots(_) => "roots",
            Command::Growth(_) => "growth",
            Command::Polygon => "polygon",
            Command::Ronkin(_) => "ronkin",
            Command::Sigma(_) => "sigma",
            Command::Kernel(_) => "kernel",
            Command::Sample(_) => "sample",
            Command::Harnack(_) => "harnack",
            Command::Divisor(_) => "divisor",
            Command::Decay(_) => "decay",
            Command::Limitshape(_) => "limitshape",
            Command::Transform(_) => "transform",
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let mut run = commands::Run::default();
    let result = commands::execute(&cli, &mut run);
    let code = match &result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    let manifest = output::RunManifest {
        subcommand: cli.cmd.name().into(),
        flags: serde_json::to_value(&cli).expect("flags serialize"),
        inputs: run.inputs,
        seed: cli.global.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        wall_time_s: start.elapsed().as_secs_f64(),
        exit_code: code,
        outputs: run.outputs,
    };
    let text = output::to_json(&manifest);
    let target = cli.global.manifest.clone().or_else(|| {
        cli.global.out.as_ref().map(|o| {
            let mut s = o.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    match target {
        Some(p) => {
            if let Err(e) = std::fs::write(&p, text) {
                eprintln!("error: cannot write manifest {}: {e}", p.display());
            }
        }
        None => eprint!("{text}"),
    }
    ExitCode::from(code as u8)
}
