//! `exactbn` command-line tool.

mod commands;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use exactbn::{Error, ScoreKind, ShardSpec};

/// Exact Bayesian network structure learning.
#[derive(Parser, Debug)]
#[command(name = "exactbn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute local scores into a cache (optionally one shard of it).
    Scores(ScoresArgs),
    /// Merge shard files into a full cache.
    Merge(MergeArgs),
    /// Learn an optimal network; writes a JSON network document.
    Learn(LearnArgs),
    /// Print an optimal ordering and its score.
    BestOrder(BestOrderArgs),
    /// Best network consistent with a given ordering.
    NetForOrder(NetForOrderArgs),
    /// Score every rotation of an ordering (CSV `k,score`).
    Rotations(RotationsArgs),
    /// Score every pairwise swap of an ordering (CSV `i,j,score`).
    Swaps(ScanArgs),
    /// Learn an optimal BDe network at every ESS of a grid (CSV `ess,arcs,score`).
    SweepEss(SweepArgs),
    /// Fit expected parameters of a network and sample rows from it.
    Sample(SampleArgs),
    /// Predictive log probability of test rows (CSV `row,logp`).
    Predict(PredictArgs),
    /// Summary of a learned network.
    Report(ReportArgs),
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Explicit arities, comma separated; values must fit.
    #[arg(long, value_delimiter = ',')]
    arities: Option<Vec<u32>>,
}

#[derive(Args, Debug, Clone)]
struct ScoreArgs {
    /// Score function: bde, bic or aic [default: bde].
    #[arg(long)]
    score: Option<ScoreKind>,
    /// Equivalent sample size (bde only) [default: 1].
    #[arg(long)]
    ess: Option<f64>,
    /// Bytes per stored score: 4 or 8 [default: 4].
    #[arg(long, value_parser = precision_parser())]
    precision: Option<u8>,
    /// Worker threads for score and best-parent computation [default: all cores].
    #[arg(long)]
    jobs: Option<usize>,
}

/// Where the local scores come from: a data file or a cache.
#[derive(Args, Debug, Clone)]
struct SourceArgs {
    /// Data file: one row per line, comma or whitespace separated.
    data: Option<PathBuf>,
    /// Local-score cache to use instead of recomputing.
    #[arg(long)]
    cache: Option<PathBuf>,
    #[command(flatten)]
    score: ScoreArgs,
    #[command(flatten)]
    data_args: DataArgs,
}

#[derive(Args, Debug)]
struct ScoresArgs {
    data: PathBuf,
    #[command(flatten)]
    score: ScoreArgs,
    #[command(flatten)]
    data_args: DataArgs,
    /// Compute only shard `i/m`.
    #[arg(long)]
    shard: Option<ShardSpec>,
    /// Output file [default: cache directory].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MergeArgs {
    /// Shard files, in any order.
    #[arg(required = true)]
    shards: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct NetworkOutArgs {
    /// JSON network document [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the network as Graphviz DOT.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// File with one name per variable.
    #[arg(long)]
    names: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LearnArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    output: NetworkOutArgs,
    /// Save the sink table.
    #[arg(long)]
    save_sinks: Option<PathBuf>,
    /// Save the best-parent table.
    #[arg(long)]
    save_parents: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BestOrderArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Read the ordering off a saved sink table instead.
    #[arg(long, conflicts_with_all = ["data", "cache"])]
    sinks: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NetForOrderArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Ordering as comma-separated variable indices.
    #[arg(long)]
    order: String,
    /// Saved best-parent table matching the cache.
    #[arg(long, requires = "cache")]
    parents: Option<PathBuf>,
    #[command(flatten)]
    output: NetworkOutArgs,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Base ordering [default: an optimal one].
    #[arg(long)]
    order: Option<String>,
    /// CSV output [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RotationsArgs {
    #[command(flatten)]
    scan: ScanArgs,
    /// Largest shift in either direction [default: n/2].
    #[arg(long)]
    max_shift: Option<usize>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    data: PathBuf,
    #[command(flatten)]
    data_args: DataArgs,
    /// Comma list or `log:start:end:count`.
    #[arg(long, default_value = exactbn::explore::EssGrid::DEFAULT)]
    grid: exactbn::explore::EssGrid,
    #[arg(long, default_value_t = 4, value_parser = precision_parser())]
    precision: u8,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// Training data the parameters are fitted to.
    data: PathBuf,
    #[command(flatten)]
    data_args: DataArgs,
    /// JSON network document.
    #[arg(long)]
    network: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    ess: f64,
    /// Rows to draw.
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    train: PathBuf,
    test: PathBuf,
    #[command(flatten)]
    data_args: DataArgs,
    #[arg(long)]
    network: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    ess: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// JSON network document.
    #[arg(long)]
    network: PathBuf,
    /// Data the network was learned from, for row count and arities.
    data: Option<PathBuf>,
    #[command(flatten)]
    data_args: DataArgs,
}

fn precision_parser() -> impl clap::builder::TypedValueParser<Value = u8> {
    use clap::builder::TypedValueParser;
    clap::builder::PossibleValuesParser::new(["4", "8"]).map(|s| s.parse::<u8>().unwrap())
}

/// Names the directory holding caches given by relative path.
pub(crate) const CACHE_DIR_VAR: &str = "EXACTBN_CACHE_DIR";

pub(crate) fn cache_path(path: &Path) -> PathBuf {
    match std::env::var_os(CACHE_DIR_VAR) {
        Some(dir) if path.is_relative() && !path.exists() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) => 2,
        Error::Data(_) | Error::Io { .. } | Error::Cache(_) | Error::IncompleteShards(_) => 3,
        Error::HeaderMismatch(_) => 4,
        Error::TooManyVariables(_) => 5,
        Error::Resource(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 2 } else { 0 });
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("exactbn: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(exit_code(&Error::InvalidArgument(String::new())), 2);
        assert_eq!(exit_code(&Error::Data(String::new())), 3);
        assert_eq!(exit_code(&Error::HeaderMismatch(String::new())), 4);
        assert_eq!(exit_code(&Error::TooManyVariables(33)), 5);
    }

    #[test]
    fn shard_and_grid_flags_parse() {
        let cli = Cli::try_parse_from(["exactbn", "scores", "d.csv", "--shard", "2/8"]).unwrap();
        let Command::Scores(a) = cli.command else {
            panic!()
        };
        assert_eq!(a.shard, Some(ShardSpec::new(2, 8).unwrap()));
        assert!(
            Cli::try_parse_from(["exactbn", "sweep-ess", "d.csv", "--grid", "log:1:10:3"]).is_ok()
        );
        assert!(Cli::try_parse_from(["exactbn", "learn", "--precision", "2"]).is_err());
    }
}
