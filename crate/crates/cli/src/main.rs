//! `pulsec`: compress pulses to spline coefficient files, emulate the
//! hardware decompression bit-exactly, and run the evaluation benchmarks.

mod bench;
mod compress;
mod config;
mod manifest;
mod util;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use pulsec::Error;

#[derive(Parser)]
#[command(name = "pulsec", version, about = "Cubic-spline pulse compression toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SymmetryArg {
    Off,
    Auto,
    On,
}

impl From<SymmetryArg> for pulsec::SymmetryMode {
    fn from(s: SymmetryArg) -> Self {
        match s {
            SymmetryArg::Off => pulsec::SymmetryMode::Off,
            SymmetryArg::Auto => pulsec::SymmetryMode::Auto,
            SymmetryArg::On => pulsec::SymmetryMode::On,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit a pulse with piecewise cubics and write a .cps coefficient file.
    Compress(CompressArgs),
    /// Emulate the hardware decompression of a .cps file into a sample CSV.
    Decompress(DecompressArgs),
    /// Run a named benchmark and write its CSV reports.
    Bench(BenchArgs),
}

#[derive(clap::Args)]
struct CompressArgs {
    /// Pulse CSV (header `index,value`; JSON sidecar may carry sample_rate).
    #[arg(long, conflicts_with = "gen")]
    input: Option<PathBuf>,
    /// Generator spec instead of a file: `blackman:LEN:AMP`,
    /// `gaussian:LEN:CENTER:SIGMA_SQ:AMP[:CARRIER_HZ]`,
    /// `sigmoid:LEN:STEEPNESS:AMP`, or `chirp:LEN:F0:FF`.
    #[arg(long)]
    gen: Option<String>,
    /// Output coefficient file.
    #[arg(long)]
    output: PathBuf,
    /// JSON report path (default: `<output>.report.json`).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Spline segment count.
    #[arg(long)]
    segments: Option<usize>,
    /// Continuity order at interior knots (0, 1, or 2).
    #[arg(long)]
    continuity: Option<u8>,
    /// Run the local knot-position search before fitting.
    #[arg(long)]
    optimize_knots: bool,
    /// Maximum knot-search sweeps.
    #[arg(long)]
    knot_iters: Option<usize>,
    /// Symmetric storage of mirror-symmetric pulses.
    #[arg(long, value_enum)]
    symmetry: Option<SymmetryArg>,
    /// Run the quantisation-aware second-stage fit.
    #[arg(long)]
    qa_fit: bool,
    #[arg(long)]
    word_bits: Option<u32>,
    #[arg(long)]
    frac_bits: Option<u32>,
    #[arg(long)]
    alpha_bits: Option<u32>,
    #[arg(long)]
    out_bits: Option<u32>,
    /// RNG seed for the second-stage optimizer.
    #[arg(long)]
    seed: Option<u64>,
    /// Sample rate override for CSV inputs, in samples per second.
    #[arg(long)]
    sample_rate: Option<f64>,
    /// JSON config supplying any of the above; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(clap::Args)]
struct DecompressArgs {
    /// Input .cps coefficient file.
    input: PathBuf,
    /// Output sample CSV.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchName {
    Stirap,
    WidthSweep,
    Corpus,
}

#[derive(clap::Args)]
struct BenchArgs {
    /// Which benchmark to run.
    name: BenchName,
    /// Directory for the CSV reports and manifest.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// JSON config overriding benchmark defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed for the second-stage optimizer.
    #[arg(long)]
    seed: Option<u64>,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) => 2,
        Error::Io(_)
        | Error::BadMagic
        | Error::UnexpectedEof(_)
        | Error::SignExtension { .. }
        | Error::Parse(_) => 3,
        Error::Range { .. }
        | Error::Overflow { .. }
        | Error::FitFailure { .. }
        | Error::IntegratorFailure(_) => 4,
    }
}

fn kind_for(err: &Error) -> &'static str {
    match err {
        Error::InvalidArgument(_) => "invalid-argument",
        Error::Io(_) => "io",
        Error::BadMagic => "bad-magic",
        Error::UnexpectedEof(_) => "unexpected-eof",
        Error::SignExtension { .. } => "sign-extension",
        Error::Parse(_) => "parse",
        Error::Range { .. } => "range",
        Error::Overflow { .. } => "overflow",
        Error::FitFailure { .. } => "fit-failure",
        Error::IntegratorFailure(_) => "integrator-failure",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compress(args) => compress::run(args),
        Command::Decompress(args) => compress::run_decompress(args),
        Command::Bench(args) => bench::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code_for(&err);
            eprintln!(
                "{}",
                serde_json::json!({
                    "error": err.to_string(),
                    "kind": kind_for(&err),
                    "exit_code": code,
                })
            );
            ExitCode::from(code)
        }
    }
}
