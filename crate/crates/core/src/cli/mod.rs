//! Command-line surface: corpus creation, search runs, analysis and
//! low-pass preparation.
//!
//! Exit codes: 0 success, 2 usage or validation, 3 bridge unavailable,
//! 4 runtime failure during a search.

mod analyze;
mod corpus;
mod search;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::analysis::VarianceScale;
use crate::audio::WavCodec;
use crate::error::Error;
use crate::search::{Algorithm, Neighborhood};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BRIDGE: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "srsearch", version, about = "Verifier-guided inference-time search for audio super-resolution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic corpus of high/low-resolution pairs.
    Corpus(CorpusArgs),
    /// Search a generator's latent space for the best candidate.
    Search(SearchArgs),
    /// Measure search-space range and render an uncertainty map.
    Analyze(AnalyzeArgs),
    /// Low-pass a WAV at a cutoff frequency.
    Lowres(LowresArgs),
    /// Serve the weight-free loopback bridge on stdin/stdout.
    #[command(hide = true)]
    BridgeLoopback,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(long, default_value_t = 8)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 24_000)]
    pub rate: u32,
    #[arg(long, default_value_t = 4000.0)]
    pub cutoff: f64,
    /// Item length in seconds.
    #[arg(long, default_value_t = 1.0)]
    pub duration: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = WavCodec::Float32)]
    pub codec: WavCodec,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Low-resolution input WAV.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Verifier, e.g. `lsd:ref.wav` or `ensemble(lsd:ref.wav,extern:clap?text="rain")`.
    #[arg(long)]
    pub verifier: Option<String>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// JSON run description; explicit flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub algorithm: Option<Algorithm>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub neighborhood: Option<Neighborhood>,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    pub parallelism: Option<usize>,
    /// Also write every generated candidate under `candidates/`.
    #[arg(long)]
    pub keep_all: bool,
    #[arg(long, value_enum)]
    pub generator: Option<GeneratorKind>,
    /// Band edge of the input, used by the synthetic generator.
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub hop: Option<usize>,
    /// Bridge launch command; falls back to SRSEARCH_BRIDGE_CMD.
    #[arg(long)]
    pub bridge_cmd: Option<String>,
    #[arg(long)]
    pub bridge_connections: Option<usize>,
    #[arg(long)]
    pub bridge_timeout_s: Option<f64>,
    #[arg(long, value_enum)]
    pub codec: Option<WavCodec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Synthetic,
    Bridge,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// A directory of candidate WAVs, a search output directory or its
    /// manifest.json.
    pub input: PathBuf,
    /// Defaults to the input directory.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = crate::analysis::DEFAULT_CLIP_PERCENTILE)]
    pub clip_percentile: f64,
    #[arg(long, default_value_t = crate::analysis::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = VarianceScale::Linear)]
    pub scale: VarianceScale,
    #[arg(long, default_value_t = 2048)]
    pub window: usize,
    #[arg(long, default_value_t = 512)]
    pub hop: usize,
}

#[derive(Debug, Args)]
pub struct LowresArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub cutoff: f64,
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = WavCodec::Float32)]
    pub codec: WavCodec,
}

/// Maps an error to the process exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::BridgeUnavailable(_) => EXIT_BRIDGE,
        Error::Candidate { .. } | Error::Bridge(_) => EXIT_RUNTIME,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Corpus(a) => corpus::run_corpus(&a),
        Command::Search(a) => search::run(&a),
        Command::Analyze(a) => analyze::run(&a),
        Command::Lowres(a) => corpus::run_lowres(&a),
        Command::BridgeLoopback => {
            let stdin = std::io::stdin();
            return crate::bridge::serve_loopback(stdin.lock(), std::io::stdout().lock());
        }
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
