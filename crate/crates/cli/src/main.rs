//! `bsqlens`: file-to-file batch pipeline over BSQ transaction corpora.
//!
//! Exit codes: 0 success, 1 data or validation failure, 2 usage error.
//! Errors go to stderr as `error[<code>]: <message>`.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use bsqlens_core::{BsqAmount, ExportFormat, Heuristic, IngestError, TxType};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bsqlens",
    version,
    about = "Address clustering and flow analysis for BSQ transactions"
)]
struct Cli {
    /// Worker threads for parsing and extraction (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a corpus against the transaction rules.
    Validate {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster addresses and write address,cluster_id.
    Cluster {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value = "bsq")]
        heuristic: Heuristic,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Attach identity tags to clusters and merge clusters sharing a tag.
    Tag {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        clusters: ClusterArgs,
        #[command(flatten)]
        tags: TagArgs,
        /// Keep clusters that share a tag apart.
        #[arg(long)]
        no_merge: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Assign proposer, generator and user roles.
    Roles {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        clusters: ClusterArgs,
        #[command(flatten)]
        roles: RoleArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the cluster transfer graph.
    Graph {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        clusters: ClusterArgs,
        #[command(flatten)]
        roles: RoleArgs,
        #[command(flatten)]
        tags: OptionalTagArgs,
        /// Keep edges whose total exceeds this many BSQ, e.g. 3000.00.
        #[arg(long, default_value = "0.00")]
        min_edge_bsq: BsqAmount,
        #[arg(long)]
        largest_component: bool,
        #[arg(long, default_value = "dot")]
        format: ExportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Market, supply or top-transactor reports.
    Report {
        #[arg(value_enum)]
        kind: ReportKind,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        clusters: ClusterArgs,
        #[command(flatten)]
        roles: RoleArgs,
        #[command(flatten)]
        tags: OptionalTagArgs,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        #[arg(long, value_enum, default_value = "csv")]
        format: TableFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic corpus with ground truth.
    Synth(SynthArgs),
    /// Compare a clustering with the reference oracle and, optionally,
    /// ground truth.
    OracleDiff {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        clusters: ClusterArgs,
        #[arg(long)]
        truth: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// JSONL transaction corpus.
    #[arg(long)]
    txs: PathBuf,
    /// Skip malformed lines and invalid transactions instead of failing.
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    #[arg(long, default_value = "bsq")]
    heuristic: Heuristic,
    /// Read a clusters.csv instead of clustering.
    #[arg(long, conflicts_with = "heuristic")]
    clusters: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RoleArgs {
    /// Transaction types that make a cluster a proposer.
    #[arg(long, value_delimiter = ',', default_value = "PROPOSAL")]
    proposer_types: Vec<TxType>,
}

#[derive(Debug, Args)]
struct TagArgs {
    /// Tag database, address,tag,source.
    #[arg(long)]
    tags: PathBuf,
    #[command(flatten)]
    extra: TagExtras,
}

#[derive(Debug, Args)]
struct OptionalTagArgs {
    #[arg(long)]
    tags: Option<PathBuf>,
    #[command(flatten)]
    extra: TagExtras,
}

#[derive(Debug, Args)]
struct TagExtras {
    /// Spelling corrections, canonical,variant.
    #[arg(long)]
    aliases: Option<PathBuf>,
    /// Pre-launch spreadsheet, tag,prelaunch_address, in genesis output order.
    #[arg(long)]
    genesis_spreadsheet: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportKind {
    Market,
    Supply,
    Top,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    participants: usize,
    #[arg(long, default_value_t = 1000)]
    tx_count: usize,
    /// Type weights as TYPE=WEIGHT, replacing the default mix.
    #[arg(long, value_delimiter = ',', value_parser = parse_weight)]
    mix: Vec<(TxType, u64)>,
    #[arg(long)]
    disguised_transfers: bool,
    #[arg(long)]
    dummy_transfers: bool,
    #[arg(long)]
    coinjoin: bool,
    #[arg(long, default_value_t = 0)]
    migrations: usize,
    #[arg(long, default_value_t = 0)]
    alias_conflicts: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

fn parse_weight(s: &str) -> Result<(TxType, u64), String> {
    let (t, w) = s
        .split_once('=')
        .ok_or_else(|| format!("expected TYPE=WEIGHT, got {s:?}"))?;
    let t: TxType = t.trim().parse().map_err(|e| format!("{e}"))?;
    let w: u64 = w
        .trim()
        .parse()
        .map_err(|e| format!("bad weight {w:?}: {e}"))?;
    Ok((t, w))
}

/// A failure with its stderr code.
#[derive(Debug)]
pub struct Failure {
    code: &'static str,
    error: anyhow::Error,
}

impl Failure {
    pub fn new(code: &'static str, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code,
            error: error.into(),
        }
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        let code = match &e {
            IngestError::Io(_) => "io",
            IngestError::Validation(_) => "validation",
            _ => "parse",
        };
        Failure::new(code, e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new("io", e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::new("data", e)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("BSQLENS_LOG", "warn"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            eprintln!(
                "error[usage]: {}",
                rendered.trim_start_matches("error: ").trim_end()
            );
            return ExitCode::from(2);
        }
    };

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error[usage]: cannot start {} threads: {e}", cli.threads);
            return ExitCode::from(2);
        }
    };
    match pool.install(|| commands::run(cli.command)) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error[{}]: {:#}", f.code, f.error);
            ExitCode::from(1)
        }
    }
}
