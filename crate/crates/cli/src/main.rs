//! `fireray`: curved-ray point cloud projection from the command line.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fireray_core::{
    DEFAULT_CENTERS, DEFAULT_KAPPA_MAX, DEFAULT_KAPPA_MIN, DEFAULT_LAMBDA, DEFAULT_OMEGA,
    DEFAULT_PLANES, DEFAULT_RADIUS, DEFAULT_RESOLUTION, DEFAULT_TAU,
};

#[derive(Debug, Parser)]
#[command(
    name = "fireray",
    version,
    about = "Curved-ray point cloud projection and search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render every view plane with fixed ray coefficients.
    Project(ProjectArgs),
    /// Search ray coefficients per plane and render the best rays.
    Optimize(OptimizeArgs),
    /// Predict ray coefficients from the point distribution with a weight file.
    Predict(PredictArgs),
    /// Score a grid of ray coefficients on one plane and write a CSV table.
    Sweep(SweepArgs),
    /// Generate a synthetic scene as an xyz-ascii file.
    Synth(SynthArgs),
    /// Write a predictor weight file (all zeros unless seeded).
    InitWeights(InitWeightsArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Point cloud file: `x y z r g b [label]` per line.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Built-in synthetic scene.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Debug, Args)]
struct InputArgs {
    #[command(flatten)]
    source: Source,
    /// Scene name used in image file names; defaults to the input file stem
    /// or preset name.
    #[arg(long)]
    scene: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Real,
    Semantic,
    Both,
}

#[derive(Debug, Args)]
struct ViewArgs {
    /// Number of view planes, taken in the order +X, -X, +Y, -Y, +Z, -Z.
    #[arg(long, default_value_t = DEFAULT_PLANES)]
    planes: usize,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    height: usize,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    width: usize,
    /// Utilization exponent.
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    /// Weight of the regularization term (echoed in the report).
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, default_value_t = DEFAULT_KAPPA_MIN, allow_negative_numbers = true)]
    kappa_min: f64,
    #[arg(long, default_value_t = DEFAULT_KAPPA_MAX, allow_negative_numbers = true)]
    kappa_max: f64,
    /// Worker threads; 0 uses every core. Outputs do not depend on it.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Which images to write.
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    mode: ModeArg,
    /// Output directory for images and report.json.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct KappaArgs {
    /// Height coefficient for every plane.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    kh: f64,
    /// Width coefficient for every plane.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    kw: f64,
    /// Per-plane override `ID:KH,KW`; repeatable.
    #[arg(long = "kappa", value_name = "ID:KH,KW", allow_hyphen_values = true)]
    per_plane: Vec<String>,
}

#[derive(Debug, Args)]
struct PredictorArgs {
    /// Ball weight of self-attention against cross-attention.
    #[arg(long, default_value_t = DEFAULT_OMEGA)]
    omega: f64,
    /// Number of sampled ball centers per plane.
    #[arg(long, default_value_t = DEFAULT_CENTERS)]
    centers: usize,
    /// Ball radius in normalized units.
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    radius: f64,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    view: ViewArgs,
    #[command(flatten)]
    kappa: KappaArgs,
    #[command(flatten)]
    predictor: PredictorArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    view: ViewArgs,
    /// Initial coefficients.
    #[command(flatten)]
    kappa: KappaArgs,
    #[command(flatten)]
    predictor: PredictorArgs,
    /// Candidates per step.
    #[arg(long, default_value_t = 16)]
    pop: usize,
    /// Search steps after the initial population.
    #[arg(long, default_value_t = 30)]
    iters: usize,
    #[arg(long)]
    seed: u64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    view: ViewArgs,
    #[command(flatten)]
    predictor: PredictorArgs,
    /// Predictor weight file (JSON).
    #[arg(long)]
    weights: PathBuf,
    /// Pass each predicted coefficient once through the Gaussian mutation.
    #[arg(long)]
    mutate: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Plane as `+X`, `-Z`, ... or a 1-based index into the default order.
    #[arg(long, default_value = "+X", allow_hyphen_values = true)]
    plane: String,
    /// Height grid `START:END:COUNT` (also used for width unless --grid-w).
    #[arg(long, default_value = "-5:5:11", allow_hyphen_values = true)]
    grid: String,
    #[arg(long, allow_hyphen_values = true)]
    grid_w: Option<String>,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    height: usize,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    width: usize,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    #[arg(long, default_value_t = DEFAULT_KAPPA_MIN, allow_negative_numbers = true)]
    kappa_min: f64,
    #[arg(long, default_value_t = DEFAULT_KAPPA_MAX, allow_negative_numbers = true)]
    kappa_max: f64,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    preset: Option<String>,
    /// Scene spec JSON file.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the scene spec as JSON to this path.
    #[arg(long)]
    dump_spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InitWeightsArgs {
    #[arg(long)]
    out: PathBuf,
    /// Draw weights uniformly from [-1, 1] with this seed instead of zeros.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Project(a) => commands::project(&a),
        Command::Optimize(a) => commands::optimize(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Synth(a) => commands::synth(&a),
        Command::InitWeights(a) => commands::init_weights(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fireray: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
