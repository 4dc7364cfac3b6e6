//! `segfuse`: augment → predict → fuse → evaluate → report.
//!
//! Exit codes: 0 success, 2 usage error, 3 validation failure, 4 I/O failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "segfuse", version, about = "Segmentation ensemble and evaluation toolkit")]
struct Cli {
    /// Worker threads; outputs are identical for any value.
    #[arg(long, global = true, env = "SEGFUSE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score predictions against ground truth (files paired by name).
    Evaluate(EvaluateArgs),
    /// Hard-vote label maps from several model directories.
    Fuse(FuseArgs),
    /// Expand a manifest's train split with photometric variants.
    Augment(AugmentArgs),
    /// Corpus statistics for a manifest.
    Stats(ManifestArgs),
    /// Baseline predictions written as label maps.
    Predict(PredictArgs),
    /// Render label maps with their class colors.
    Colorize(ColorizeArgs),
    /// Check every file a manifest references.
    Verify(ManifestArgs),
    /// Model comparison table from evaluation results.
    Report(ReportArgs),
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub classes: PathBuf,
    /// Also write the result as a one-row CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Model name used in the output; defaults to the prediction directory name.
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long, default_value_t = 255)]
    pub ignore_index: u8,
}

#[derive(Args)]
pub struct FuseArgs {
    /// Member prediction directory; repeat once per model.
    #[arg(long = "member", required = true)]
    pub members: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 255)]
    pub ignore_index: u8,
}

#[derive(Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// key = value augmentation config.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write this many random crop/flip samples per train record.
    #[arg(long, default_value_t = 0)]
    pub online_samples: usize,
}

#[derive(Args)]
pub struct ManifestArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("mode").required(true).args(["constant", "nearest_color", "perturb"])))]
pub struct PredictArgs {
    /// Image directory, or label directory with --perturb.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub classes: PathBuf,
    /// Predict this class everywhere.
    #[arg(long)]
    pub constant: Option<u8>,
    /// Nearest palette color per pixel (RGB input).
    #[arg(long)]
    pub nearest_color: bool,
    /// Flip each labelled pixel to another class with this probability.
    #[arg(long)]
    pub perturb: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 255)]
    pub ignore_index: u8,
}

#[derive(Args)]
pub struct ColorizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub classes: PathBuf,
    #[arg(long, default_value_t = 255)]
    pub ignore_index: u8,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("fused_source").required(true).args(["fused", "fused_miou"])))]
pub struct ReportArgs {
    /// CSV written by `evaluate --csv`; repeat per member model.
    #[arg(long = "member")]
    pub members: Vec<PathBuf>,
    /// Member given inline as ID=MIOU.
    #[arg(long = "row")]
    pub rows: Vec<String>,
    /// CSV of the fused predictions' evaluation.
    #[arg(long)]
    pub fused: Option<PathBuf>,
    #[arg(long)]
    pub fused_miou: Option<f64>,
    /// Also write the table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    };
    let result = pool.install(|| match cli.command {
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Fuse(a) => commands::fuse(&a),
        Command::Augment(a) => commands::augment(&a),
        Command::Stats(a) => commands::stats(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Colorize(a) => commands::colorize(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Report(a) => commands::report(&a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
