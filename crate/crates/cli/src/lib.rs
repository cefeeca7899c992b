//! `fringe` command-line driver: pattern generation, halftoning, evaluation
//! and reproduction suites, with PGM/PPM images and JSON manifests on disk.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub mod commands;
pub mod manifest;
pub mod pnm;
pub mod render;
pub mod suites;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn io(path: &Path, err: io::Error) -> Self {
        CliError::Data(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

impl From<fringe_core::Error> for CliError {
    fn from(err: fringe_core::Error) -> Self {
        use fringe_core::Error as E;
        match err {
            E::InvalidSpec(_)
            | E::InvalidKernel(_)
            | E::InvalidConfig(_)
            | E::UnsupportedBin { .. } => CliError::Usage(err.to_string()),
            _ => CliError::Data(err.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fringe",
    version,
    about = "Binary PMP fringe pattern design and evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a contone pattern set.
    Gen(GenArgs),
    /// Binarize a contone pattern set.
    Dither(DitherArgs),
    /// Defocus, decode and score a pattern set.
    Eval(EvalArgs),
    /// Run a built-in comparison suite.
    Reproduce(ReproduceArgs),
    /// Tile a pattern set side by side.
    Tile(TileArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Single,
    Dual,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SpecArgs {
    /// Pattern family [default: single]
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Number of phase-shifted frames N [default: 8]
    #[arg(long)]
    pub frames: Option<usize>,
    /// Pattern width in pixels [default: 80]
    #[arg(long)]
    pub width: Option<usize>,
    /// Pattern height in pixels [default: 480]
    #[arg(long)]
    pub height: Option<usize>,
    /// Spatial periods of the bin-2 term (dual mode) [default: 8]
    #[arg(long)]
    pub fhigh: Option<f64>,
}

impl SpecArgs {
    pub fn any_set(&self) -> bool {
        self.mode.is_some()
            || self.frames.is_some()
            || self.width.is_some()
            || self.height.is_some()
            || self.fhigh.is_some()
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Whitenoise,
    Bayer,
    Dbs,
    Phasedbs,
}

impl Algo {
    pub fn name(&self) -> &'static str {
        match self {
            Algo::Whitenoise => "whitenoise",
            Algo::Bayer => "bayer",
            Algo::Dbs => "dbs",
            Algo::Phasedbs => "phasedbs",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    /// Side of the Gaussian defocus kernel [default: 15]
    #[arg(long)]
    pub kernel_size: Option<usize>,
    /// Standard deviation of the defocus kernel in pixels [default: 2.0]
    #[arg(long)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct DitherArgs {
    /// Directory written by `gen`; its manifest supplies the pattern spec
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub algo: Algo,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Weight preset for phasedbs: all, k1 or k12 [default: all]
    #[arg(long)]
    pub weights: Option<String>,
    /// Maximum passes for dbs / phasedbs
    #[arg(long)]
    pub passes: Option<usize>,
    /// Stop phasedbs once a pass flips fewer bits than this [default: 0]
    #[arg(long)]
    pub min_flips: Option<usize>,
    /// Random seed
    #[arg(long, env = "FRINGE_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Per-pixel solver for phasedbs: exhaustive or threshold [default: exhaustive]
    #[arg(long)]
    pub solver: Option<String>,
    /// Bayer matrix side [default: 8]
    #[arg(long)]
    pub bayer_order: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Pattern set directory (with run.json)
    #[arg(long)]
    pub input: PathBuf,
    /// DFT bin to decode [default: 1 for single, 2 for dual]
    #[arg(long)]
    pub coeff: Option<usize>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Metrics file [default: <input>/metrics.json]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for phase, gradient and tiled-pattern renders
    #[arg(long)]
    pub render: Option<PathBuf>,
    /// Horizontal copies in the tiled render
    #[arg(long, default_value_t = 8)]
    pub tile: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Table1,
    Dai,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, env = "FRINGE_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Pass cap for the iterative methods
    #[arg(long)]
    pub passes: Option<usize>,
    /// Also write the results as JSON
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TileArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub nx: usize,
    #[arg(long, default_value_t = 1)]
    pub ny: usize,
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(args) => commands::gen(&args, stdout),
        Command::Dither(args) => commands::dither(&args, stdout),
        Command::Eval(args) => commands::eval(&args, stdout),
        Command::Reproduce(args) => commands::reproduce(&args, stdout),
        Command::Tile(args) => commands::tile(&args, stdout),
    }
}

/// Parse `args` and run, returning the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = write!(stderr, "{err}");
            return code;
        }
    };
    match run(cli, stdout) {
        Ok(()) => 0,
        Err(err) => {
            let _ = writeln!(stderr, "fringe: {err}");
            err.exit_code()
        }
    }
}
