//! Argument handling for the `cloudmorph` binary.
//!
//! [`run`] parses a full argument vector (program name first), executes the
//! subcommand and returns the process exit code: 0 on success, 1 for usage
//! errors, 2 when the data or a file cannot be processed.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// Default number of points per cluster when `--k` is not given.
pub const DEFAULT_CLUSTER_SIZE: usize = 2048;

#[derive(Debug, Parser)]
#[command(
    name = "cloudmorph",
    version,
    about = "Cluster-wise blending and style transfer for point clouds"
)]
pub struct Cli {
    /// Maximum number of worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// File of `key=value` lines supplying defaults for the subcommand's
    /// long options; options given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a cloud into balanced clusters.
    Cluster(ClusterArgs),
    /// Blend two clouds of equal size cluster by cluster.
    Blend(BlendArgs),
    /// Blend a cloud towards a design resampled by its density.
    StyleTransfer(StyleTransferArgs),
    /// Resample a design cloud by the density of another cloud.
    StyleSample(StyleSampleArgs),
    /// Compare two clouds with Chamfer distance and transport costs.
    Metrics(MetricsArgs),
    /// Generate a synthetic training corpus.
    GenDataset(GenDatasetArgs),
    /// Generate a style design cloud.
    GenDesign(GenDesignArgs),
    /// Draw a cloud as an SVG scatter plot.
    ExportSvg(ExportSvgArgs),
    /// Fit a PCA embedder on a directory of equal-size clusters.
    FitPca(FitPcaArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ClusterCount {
    /// Number of clusters [default: point count / cluster size].
    #[arg(long)]
    pub k: Option<usize>,

    /// Points per cluster, used when `--k` is absent.
    #[arg(long, default_value_t = DEFAULT_CLUSTER_SIZE)]
    pub cluster_size: usize,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub count: ClusterCount,
    #[arg(long, default_value_t = cloudmorph::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = cloudmorph::cluster::DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    /// Reuse the centroids of an earlier run's manifest instead of running
    /// k-means.
    #[arg(long, value_name = "MANIFEST")]
    pub centroids: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmbedderKind {
    Ot,
    Pca,
    External,
}

#[derive(Debug, Clone, Args)]
pub struct EmbedderArgs {
    #[arg(long, value_enum, default_value_t = EmbedderKind::Ot)]
    pub embedder: EmbedderKind,
    /// PCA model file, for `pca` and `external`.
    #[arg(long)]
    pub pca_model: Option<PathBuf>,
    /// Directory of `NAME.lat` latents next to `NAME.ply` clusters, for
    /// `external`.
    #[arg(long)]
    pub latent_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also write an SVG projection of every output.
    #[arg(long)]
    pub svg: bool,
    #[arg(long, value_enum, default_value_t = Axis::Z)]
    pub svg_axis: Axis,
}

#[derive(Debug, Args)]
pub struct BlendArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// Blending weight of `--a`; repeat or separate by commas for a sweep.
    #[arg(long, required = true, value_delimiter = ',')]
    pub lambda: Vec<f64>,
    #[command(flatten)]
    pub count: ClusterCount,
    #[command(flatten)]
    pub embedder: EmbedderArgs,
    #[arg(long, default_value_t = cloudmorph::DEFAULT_SEED)]
    pub seed: u64,
    /// Cluster both clouds independently and pair clusters greedily by
    /// centroid distance.
    #[arg(long)]
    pub naive_match: bool,
    /// Seed for clustering `--b` with `--naive-match` [default: --seed].
    #[arg(long)]
    pub seed_b: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct StyleTransferArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long, required = true, value_delimiter = ',')]
    pub lambda: Vec<f64>,
    #[command(flatten)]
    pub count: ClusterCount,
    #[command(flatten)]
    pub embedder: EmbedderArgs,
    #[arg(long, default_value_t = cloudmorph::density::DEFAULT_BANDWIDTH)]
    pub bandwidth: f64,
    #[arg(long, default_value_t = cloudmorph::DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct StyleSampleArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long, default_value_t = cloudmorph::density::DEFAULT_BANDWIDTH)]
    pub bandwidth: f64,
    /// Standard deviation of the perturbation, in unit-cube units.
    #[arg(long, default_value_t = cloudmorph::density::DEFAULT_NOISE)]
    pub noise: f64,
    #[arg(long, default_value_t = cloudmorph::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Norm {
    Sum,
    Mean,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// Also compute the exact transport cost (equal sizes only).
    #[arg(long)]
    pub exact_emd: bool,
    /// Skip the Sinkhorn divergence.
    #[arg(long)]
    pub no_sinkhorn: bool,
    /// Report transport costs as totals or per point.
    #[arg(long, value_enum, default_value_t = Norm::Sum)]
    pub emd_norm: Norm,
    #[arg(long, default_value_t = 1e-3)]
    pub blur: f64,
    #[arg(long, default_value_t = 0.9)]
    pub scaling: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    /// Largest potential change accepted as converged, in distance units.
    #[arg(long, default_value_t = 1e-5)]
    pub tolerance: f64,
    /// Print `metric,value,seconds` CSV instead of aligned text.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct GenDatasetArgs {
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 4096)]
    pub points: usize,
    #[arg(long, default_value_t = cloudmorph::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DesignName {
    Stripes,
    Porous,
    Cuts,
}

#[derive(Debug, Args)]
pub struct GenDesignArgs {
    #[arg(long, value_enum)]
    pub kind: DesignName,
    #[arg(long, default_value_t = 16384)]
    pub points: usize,
    #[arg(long, default_value_t = cloudmorph::DEFAULT_SEED)]
    pub seed: u64,
    /// Stripe period (stripes only).
    #[arg(long)]
    pub period: Option<f64>,
    /// Stripe thickness (stripes only).
    #[arg(long)]
    pub thickness: Option<f64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExportSvgArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Axis to project along.
    #[arg(long, value_enum, default_value_t = Axis::Z)]
    pub axis: Axis,
    #[arg(long, default_value_t = 800.0)]
    pub size: f64,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitPcaArgs {
    /// Directory of `.ply` clusters, all with the same point count.
    #[arg(long)]
    pub clusters: PathBuf,
    #[arg(long, default_value_t = 512)]
    pub dim: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Failure of a command, mapped to an exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl From<cloudmorph::Error> for CliError {
    fn from(e: cloudmorph::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Run the tool on `argv` (including the program name) and return the exit
/// code. Output goes to stdout, diagnostics to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match config::merge(argv) {
        Ok(a) => a,
        Err(e) => return report(e),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return report(CliError::Usage("--threads must be positive".into()));
        }
        // Fails only if the pool was already built, e.g. by an earlier call
        // in the same process; the existing pool is then kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match commands::execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => report(e),
    }
}

fn report(e: CliError) -> i32 {
    match e {
        CliError::Usage(msg) => {
            eprintln!("error: {msg}");
            eprintln!("\nFor more information, try '--help'.");
            EXIT_USAGE
        }
        CliError::Data(msg) => {
            eprintln!("error: {msg}");
            EXIT_DATA
        }
    }
}
