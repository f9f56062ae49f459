use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "motion-sync", version, about = "Temporal alignment of skeletal motions")]
pub struct Cli {
    /// Seed for every random choice made by the command.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Exit with status 3 when anchors were infeasible and plain DP was used.
    #[arg(long, global = true)]
    pub strict: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Convert a motion between JSON and CSV.
    Convert(ConvertArgs),
    /// Detect elevation keyframes per joint.
    Keyframes(KeyframesArgs),
    /// Align an input motion to a reference motion.
    Align(AlignArgs),
    /// Reparameterize a motion with a supplied or random warp.
    Reparam(ReparamArgs),
    /// Run one consistency check.
    Check(CheckArgs),
    /// Run the benchmark suite over all methods with and without anchoring.
    Bench(BenchArgs),
    /// Generate a synthetic swing motion.
    Synth(SynthArgs),
    /// Export plot data as CSV or SVG.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FileFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AnchoringArg {
    None,
    Keyframes,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CombineArg {
    WeightedMean,
    Median,
}

#[derive(Args, Debug)]
pub struct ConvertArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long)]
    pub from: Option<FileFormat>,
    /// Output format; guessed from the extension when omitted.
    #[arg(long)]
    pub to: Option<FileFormat>,
}

#[derive(Args, Debug)]
pub struct KeyframesArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Joint names or indices; defaults to the racket arm.
    #[arg(long, value_delimiter = ',')]
    pub joints: Option<Vec<String>>,
    /// Moving-average window applied to the elevation first.
    #[arg(long, default_value_t = 1)]
    pub smoothing: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct MethodArgs {
    /// srvt_r3, gram, frenet, sphere_srv or keyframes.
    #[arg(long, default_value = "srvt_r3")]
    pub method: String,
    /// Joints aligned one by one (or the active joints for gram).
    #[arg(long, value_delimiter = ',')]
    pub joints: Option<Vec<String>>,
    #[arg(long, value_enum, default_value = "weighted-mean")]
    pub combine: CombineArg,
    /// Per-joint weights for the weighted mean.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "none")]
    pub anchoring: AnchoringArg,
    /// Anchor tolerance in frames; overrides --tolerance-frac.
    #[arg(long)]
    pub anchor_tolerance: Option<usize>,
    /// Anchor tolerance as a fraction of the frame count.
    #[arg(long, default_value_t = 0.05)]
    pub tolerance_frac: f64,
    /// Joints whose elevation gives the keyframes.
    #[arg(long, value_delimiter = ',')]
    pub arm_joints: Option<Vec<String>>,
    /// Joints whose mean is the body center for sphere curves.
    #[arg(long, value_delimiter = ',')]
    pub center_joints: Option<Vec<String>>,
    /// Weight of the torsion term of the moving-frame cost.
    #[arg(long, default_value_t = 1.0)]
    pub lambda_tau: f64,
    #[arg(long, default_value_t = 1)]
    pub smoothing: usize,
}

#[derive(Args, Debug)]
pub struct AlignArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Warp JSON (`{"knots", "values"}`) mapping input time to reference time.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Full alignment result as JSON.
    #[arg(long)]
    pub result: Option<PathBuf>,
    /// Frame correspondence as two-column CSV.
    #[arg(long)]
    pub path: Option<PathBuf>,
    /// Per-sample features of both motions as CSV.
    #[arg(long)]
    pub dump_features: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct WarpArgs {
    /// Number of equal-width steps of the random slope density.
    #[arg(long, default_value_t = 6)]
    pub n_basis: usize,
    #[arg(long, default_value_t = 4.0)]
    pub max_slope_ratio: f64,
}

#[derive(Args, Debug)]
pub struct ReparamArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Warp JSON to apply; a random warp is drawn from --seed otherwise.
    #[arg(long)]
    pub warp: Option<PathBuf>,
    #[command(flatten)]
    pub random: WarpArgs,
    /// Output frame count; defaults to the input's.
    #[arg(long)]
    pub frames: Option<usize>,
    /// Where to save the applied warp.
    #[arg(long)]
    pub warp_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// Reference motion; the bundled synthetic swing when omitted.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub method: MethodArgs,
    #[command(flatten)]
    pub random: WarpArgs,
    /// Frame count of the reparameterized motion.
    #[arg(long, default_value_t = 100)]
    pub frames: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Source motion; the bundled synthetic swing when omitted.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Comma-separated methods; all four plus the keyframe baseline by default.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long, default_value_t = 7)]
    pub experiments: usize,
    #[arg(long, default_value_t = 50)]
    pub min_frames: usize,
    #[arg(long, default_value_t = 185)]
    pub max_frames: usize,
    #[arg(long, default_value_t = 0.05)]
    pub tolerance_frac: f64,
    #[arg(long)]
    pub anchor_tolerance: Option<usize>,
    #[command(flatten)]
    pub random: WarpArgs,
    /// Markdown table (`.md`) or JSON reports (`.json`); stdout shows the table otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the JSON reports here.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Leave wall times out of the Markdown table.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 100)]
    pub frames: usize,
    /// Standard deviation (m) of added Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub format: Option<FileFormat>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    Warp,
    Correspondence,
    Elevation,
    Landscape,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PlotFormatArg {
    Csv,
    Svg,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    /// Warp JSON files (warp plots).
    #[arg(long)]
    pub warp: Vec<PathBuf>,
    /// Correspondence CSV files (correspondence plots).
    #[arg(long)]
    pub path: Vec<PathBuf>,
    /// Motion files (elevation plots), or the input motion (landscape).
    #[arg(long = "in")]
    pub input: Vec<PathBuf>,
    /// Reference motion (landscape).
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Joint whose grid is exported (landscape).
    #[arg(long)]
    pub joint: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: PlotFormatArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
