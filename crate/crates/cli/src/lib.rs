//! Batch driver for the udforest toolkit.
//!
//! Every subcommand builds its whole output in memory (sentences are
//! processed on a rayon pool and collected back in input order) and returns
//! it as a [`CommandOutput`]; [`run`] then writes it out.

pub mod commands;
pub mod corpus;
pub mod error;

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::{cmd_export, cmd_merge, cmd_project, cmd_score, cmd_stats, CommandOutput};
pub use error::CliError;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "UDFOREST_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "udforest",
    version,
    about = "Build and analyse code-mixed UD forests"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Merge tree pairs into code-mixed forests (forest JSONL).
    Merge(MergeArgs),
    /// Project source-side relations onto the target sentences.
    Project(ProjectArgs),
    /// Mismatch, distance and merge statistics.
    Stats(StatsArgs),
    /// Convert forest JSONL to DOT or graph JSONL.
    Export(ExportArgs),
    /// Score forest relations with the reference encoder.
    Score(ScoreArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Source-side CoNLL-U file.
    #[arg(long)]
    pub src: PathBuf,
    /// Target-side CoNLL-U file.
    #[arg(long)]
    pub tgt: PathBuf,
    /// Alignment TSV: sent_id, src index, tgt index, score.
    #[arg(long)]
    pub align: PathBuf,
    /// Source-side relations JSONL.
    #[arg(long)]
    pub relations: Option<PathBuf>,
    /// Keep only sentences present in every input instead of failing.
    #[arg(long)]
    pub lenient: bool,
}

impl CorpusArgs {
    pub fn paths(&self) -> corpus::CorpusPaths {
        corpus::CorpusPaths {
            src: self.src.clone(),
            tgt: self.tgt.clone(),
            align: self.align.clone(),
            relations: self.relations.clone(),
        }
    }
}

fn parse_theta(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("invalid threshold {s:?}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("threshold {v} outside [0, 1]"))
    }
}

#[derive(Debug, Clone, Args)]
pub struct MergeArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Alignment confidence a pair must exceed to be merged.
    #[arg(long, default_value = "0.5", value_parser = parse_theta)]
    pub theta: f64,
    /// Keep relations that fail to project, using their source side only.
    #[arg(long)]
    pub keep_unprojected: bool,
    /// Output file; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ProjectArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value = "0.5", value_parser = parse_theta)]
    pub theta: f64,
    /// Emit relations that fail to project unchanged (side SRC).
    #[arg(long)]
    pub keep_unprojected: bool,
    /// Output file; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Text,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Threshold; repeat the flag for a sweep.
    #[arg(long, default_value = "0.5", value_parser = parse_theta)]
    pub theta: Vec<f64>,
    /// Require coarse dependency labels to agree for an edge to match.
    #[arg(long)]
    pub coarse_labels: bool,
    /// Break mismatch statistics down by the UPOS of the source root.
    #[arg(long)]
    pub group_by_root_upos: bool,
    #[arg(long, value_enum, default_value = "json")]
    pub format: ReportFormat,
    /// Output file; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Dot,
    Graph,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    /// Forest JSONL written by `merge`.
    #[arg(long)]
    pub forest: PathBuf,
    #[arg(long, value_enum, default_value = "dot")]
    pub format: ExportFormat,
    /// Omit dependency labels on DOT edges.
    #[arg(long)]
    pub no_edge_labels: bool,
    /// Output file; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    /// Forest JSONL with relations, written by `merge`.
    #[arg(long)]
    pub forest: PathBuf,
    /// Seed for parameters and hash embeddings.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Embedding width.
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    /// Attention layers.
    #[arg(long, default_value_t = udforest::encoder::DEFAULT_LAYERS)]
    pub layers: usize,
    /// Comma-separated label inventory; defaults to the sorted labels found in the input.
    #[arg(long, value_delimiter = ',')]
    pub labels: Vec<String>,
    /// Use all-zero parameters.
    #[arg(long)]
    pub zero_params: bool,
    /// Output file; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Worker pool sized by [`THREADS_ENV`] when set to a positive integer.
pub fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var(THREADS_ENV) {
        match value.trim().parse::<usize>() {
            Ok(n) if n > 0 => builder = builder.num_threads(n),
            _ => {
                return Err(CliError::Usage(format!(
                    "{THREADS_ENV} must be a positive integer, got {value:?}"
                )))
            }
        }
    }
    builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker threads: {e}")))
}

fn write_output(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

/// Runs one subcommand, writing its output and diagnostics.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let pool = thread_pool()?;
    let (result, out) = pool.install(|| match &cli.command {
        Command::Merge(a) => (cmd_merge(a), a.out.as_ref()),
        Command::Project(a) => (cmd_project(a), a.out.as_ref()),
        Command::Stats(a) => (cmd_stats(a), a.out.as_ref()),
        Command::Export(a) => (cmd_export(a), a.out.as_ref()),
        Command::Score(a) => (cmd_score(a), a.out.as_ref()),
    });
    let output = result?;
    write_output(out, &output.output)?;
    eprint!("{}", output.diagnostics);
    if output.failed > 0 {
        return Err(CliError::Failed {
            failed: output.failed,
        });
    }
    Ok(())
}
