use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "fsi",
    version,
    about = "Fourier single-pixel imaging simulator"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GlobalArgs {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Image side length in pixels (even).
    #[arg(long, global = true)]
    pub size: Option<usize>,

    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    /// Only print errors.
    #[arg(long, global = true)]
    pub quiet: bool,

    /// `key = value` file supplying defaults; command-line flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Importance ordering of Fourier coefficients.
    #[command(subcommand)]
    Importance(ImportanceCommand),

    /// Sampling masks.
    #[command(subcommand)]
    Mask(MaskCommand),

    /// Fourier basis patterns.
    #[command(subcommand)]
    Pattern(PatternCommand),

    /// Acquire a partial spectrum and write the measurement log.
    Simulate(SimulateArgs),

    /// Recover an image from a spectrum file.
    Reconstruct(ReconstructArgs),

    /// Score a reconstruction against its reference.
    Evaluate(EvaluateArgs),

    /// Run the whole chain for several strategy/method cells.
    Compare(CompareArgs),

    /// Mask, acquisition, reconstruction and evaluation in one run.
    Pipeline(PipelineArgs),
}

#[derive(Subcommand, Debug)]
pub enum ImportanceCommand {
    Build(ImportanceBuildArgs),
}

#[derive(Args, Debug)]
pub struct ImportanceBuildArgs {
    /// Directory of images; the bundled corpus when omitted.
    #[arg(long)]
    pub corpus: Option<PathBuf>,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum MaskCommand {
    Gen(MaskGenArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct MaskArgs {
    #[arg(long)]
    pub strategy: Option<String>,

    #[arg(long)]
    pub eta: Option<f64>,

    /// Ordering CSV for the gaussian strategy; the bundled ordering when omitted.
    #[arg(long)]
    pub ordering: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MaskGenArgs {
    #[command(flatten)]
    pub mask: MaskArgs,

    /// Output prefix; `<prefix>.png` and `<prefix>.csv` are written.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum PatternCommand {
    Export(PatternExportArgs),
}

#[derive(Args, Debug)]
pub struct PatternExportArgs {
    /// Mask CSV; otherwise the mask is generated from the mask flags.
    #[arg(long)]
    pub mask_file: Option<PathBuf>,

    #[command(flatten)]
    pub mask: MaskArgs,

    /// Also write dithered binary patterns.
    #[arg(long)]
    pub binary: bool,

    /// Export only the first N frequencies of the sequence.
    #[arg(long)]
    pub limit: Option<usize>,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SceneArgs {
    /// Scene image; the bundled photograph when omitted.
    #[arg(long)]
    pub scene: Option<PathBuf>,

    /// Use a rendered resolution chart instead of a photograph.
    #[arg(long, value_enum)]
    pub target: Option<Target>,

    /// Bar width of the chart's coarsest element; `size / 32` by default.
    #[arg(long)]
    pub chart_scale: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Scene,
    Usaf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ift,
    Cs,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ift => "ift",
            Method::Cs => "cs",
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct SolverArgs {
    #[arg(long)]
    pub iters: Option<usize>,

    #[arg(long)]
    pub step_size: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scene: SceneArgs,

    #[arg(long)]
    pub mask_file: Option<PathBuf>,

    #[command(flatten)]
    pub mask: MaskArgs,

    /// Standard deviation of additive detector noise.
    #[arg(long)]
    pub noise_sigma: Option<f64>,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    /// Spectrum CSV written by `simulate`.
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long, value_enum)]
    pub method: Option<Method>,

    #[command(flatten)]
    pub solver: SolverArgs,

    /// Output image (`.png` or `.pgm`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Reconstructed image.
    #[arg(long)]
    pub image: PathBuf,

    #[command(flatten)]
    pub scene: SceneArgs,

    /// Labels copied into the report.
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub eta: Option<f64>,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[command(flatten)]
    pub scene: SceneArgs,

    /// Comma-separated strategies.
    #[arg(long, value_delimiter = ',')]
    pub strategies: Option<Vec<String>>,

    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',', value_enum)]
    pub methods: Option<Vec<Method>>,

    #[arg(long)]
    pub eta: Option<f64>,

    #[arg(long)]
    pub ordering: Option<PathBuf>,

    #[arg(long)]
    pub noise_sigma: Option<f64>,

    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub scene: SceneArgs,

    #[command(flatten)]
    pub mask: MaskArgs,

    #[arg(long, value_enum)]
    pub method: Option<Method>,

    #[arg(long)]
    pub noise_sigma: Option<f64>,

    #[command(flatten)]
    pub solver: SolverArgs,
}
