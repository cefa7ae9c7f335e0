use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use splic::TvMode;

#[derive(Debug, Parser)]
#[command(
    name = "splic",
    version,
    about = "Progressive low-rank image completion"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Re-estimate the non-anchor pixels of one image.
    Complete(CompleteArgs),
    /// Two-pass completion that re-estimates every pixel.
    Defend(DefendArgs),
    /// Score SPLIC and the baselines across anchor fractions.
    Compare(CompareArgs),
    /// Complete one image at several target ranks.
    RankSweep(RankSweepArgs),
}

/// Solver settings. Flags override values from `--config`.
#[derive(Debug, Args, Clone, Default)]
pub struct SolverArgs {
    /// JSON file with solver settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub anchor_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Target rank; defaults to a quarter of the shorter side.
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub maxiter: Option<usize>,
    #[arg(long)]
    pub inner_steps: Option<usize>,
    #[arg(long, value_parser = parse_tv_mode)]
    pub tv_mode: Option<TvMode>,
    /// Add uniform noise of this amplitude (e.g. `0.03` or `8/255`) to the
    /// input before completion.
    #[arg(long, value_name = "AMP", value_parser = parse_amplitude)]
    pub add_uniform_noise: Option<f64>,
    /// Exit with status 3 if the solver stops at `maxiter`.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct CompleteArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Anchor mask image; white pixels are anchors. Overrides the random mask.
    #[arg(long, conflicts_with = "anchor_fraction")]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
    /// Per-iteration trace CSV. Color images get one file per channel,
    /// with the channel index inserted before the extension.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct DefendArgs {
    /// Input image, or a directory of images with `--batch`.
    #[arg(long)]
    pub input: PathBuf,
    /// First-pass anchor mask; the second pass uses its complement.
    #[arg(long, conflicts_with = "anchor_fraction")]
    pub mask: Option<PathBuf>,
    /// Output image, or the output directory with `--batch`.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, conflicts_with = "batch")]
    pub trace: Option<PathBuf>,
    /// Treat `--input` and `--output` as directories.
    #[arg(long)]
    pub batch: bool,
    /// Clean images with the same file names; adds `summary.csv` to the
    /// output directory.
    #[arg(long, requires = "batch")]
    pub reference_dir: Option<PathBuf>,
    /// Worker threads for batch mode.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: u16,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Corrupted grayscale image to complete.
    #[arg(long)]
    pub input: PathBuf,
    /// Clean grayscale image the outputs are scored against.
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.5,0.7")]
    pub fractions: Vec<f64>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct RankSweepArgs {
    /// Grayscale image to complete.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub ranks: Vec<usize>,
    /// Directory for `rank_<r>.pgm` images and `ranks.csv`.
    #[arg(long)]
    pub output_dir: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

fn parse_tv_mode(s: &str) -> Result<TvMode, String> {
    s.parse::<TvMode>().map_err(|e| e.to_string())
}

fn parse_amplitude(s: &str) -> Result<f64, String> {
    let value = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num
                .trim()
                .parse()
                .map_err(|_| format!("bad numerator in `{s}`"))?;
            let den: f64 = den
                .trim()
                .parse()
                .map_err(|_| format!("bad denominator in `{s}`"))?;
            num / den
        }
        None => s
            .trim()
            .parse()
            .map_err(|_| format!("not a number: `{s}`"))?,
    };
    if !(value >= 0.0) || !value.is_finite() {
        return Err(format!("amplitude must be a finite value >= 0, got `{s}`"));
    }
    Ok(value)
}
