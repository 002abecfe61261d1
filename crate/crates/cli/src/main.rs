use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;

/// Popularity Rank and Site Rank of a web site from navigation sessions.
#[derive(Debug, Parser)]
#[command(name = "siterank", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rank pages with one model and report its entropy.
    Rank(RankArgs),
    /// Compare the popularity and site models of the same data.
    Compare(CompareArgs),
    /// Generate a synthetic site and sessions on it.
    Synth(SynthArgs),
    /// Run the scaling experiment over synthetic sites.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Mode {
    Popularity,
    PopularityUnpopular,
    Site,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Method {
    Exact,
    Walk,
}

#[derive(Debug, Args, Serialize)]
struct InputArgs {
    /// Session file, or a `user,timestamp,page` CSV log with `--log`.
    sessions: PathBuf,
    /// Edge list of the site; inferred from the sessions when absent.
    #[arg(long)]
    topology: Option<PathBuf>,
    #[arg(long, default_value = "HP")]
    home: String,
    /// Read SESSIONS as a CSV access log and split it into sessions.
    #[arg(long)]
    log: bool,
    /// Session timeout in minutes for `--log`.
    #[arg(long, default_value_t = siterank::ingest::DEFAULT_TIMEOUT_MINUTES)]
    timeout: u64,
    /// Use the unpopular-link counts without routing imbalances through home.
    #[arg(long)]
    no_balance: bool,
    /// Power-iteration tolerance on the L1 residual.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Walk length multiplier in factor * (N + L).
    #[arg(long, default_value_t = siterank::walk::DEFAULT_WALK_FACTOR)]
    walk_factor: u64,
    /// Write the report here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct RankArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value_t = Mode::Popularity)]
    mode: Mode,
    #[arg(long, value_enum, default_value_t = Method::Exact)]
    method: Method,
    /// Required with `--method walk`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
struct CompareArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: InputArgs,
    /// Also estimate both entropies by random walks with this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Leading points left out of the Site Rank power-law fit.
    #[arg(long, default_value_t = 0)]
    drop_first: usize,
}

#[derive(Debug, Args, Serialize)]
struct GeneratorArgs {
    #[arg(long, default_value_t = siterank::synth::DEFAULT_IN_EXPONENT)]
    in_exponent: f64,
    #[arg(long, default_value_t = siterank::synth::DEFAULT_OUT_EXPONENT)]
    out_exponent: f64,
    /// Per-page probability that a session ends.
    #[arg(long, default_value_t = siterank::synth::DEFAULT_TERMINATION_PROB)]
    termination: f64,
    /// Exponent of the power-law session length cap.
    #[arg(long, default_value_t = siterank::synth::DEFAULT_LENGTH_EXPONENT)]
    length_exponent: f64,
    /// Largest length cap that can be drawn.
    #[arg(long, default_value_t = siterank::synth::DEFAULT_MAX_SESSION_LENGTH)]
    max_length: usize,
    /// Let sessions run until the termination draw fires.
    #[arg(long)]
    no_length_cap: bool,
}

#[derive(Debug, Args, Serialize)]
struct SynthArgs {
    #[arg(long)]
    pages: usize,
    /// Number of sessions; defaults to ceil(1.2 * pages).
    #[arg(long)]
    sessions: Option<usize>,
    #[arg(long)]
    seed: u64,
    /// Writes PREFIX.topology.tsv and PREFIX.sessions.txt.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    generator: GeneratorArgs,
}

#[derive(Debug, Args, Serialize)]
struct ExperimentArgs {
    /// Site sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// Seeds, comma separated; every size runs with every seed.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    seeds: Vec<u64>,
    /// Result table (CSV).
    #[arg(long)]
    out: PathBuf,
    /// Rank/residual table (CSV); defaults to OUT with `.residuals.csv`.
    #[arg(long)]
    residuals: Option<PathBuf>,
    #[arg(long, default_value_t = siterank::walk::DEFAULT_WALK_FACTOR)]
    walk_factor: u64,
    #[arg(long)]
    no_balance: bool,
    /// Leading points left out of the Site Rank power-law fit.
    #[arg(long, default_value_t = 0)]
    drop_first: usize,
    #[command(flatten)]
    #[serde(flatten)]
    generator: GeneratorArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Rank(args) => commands::rank(args),
        Command::Compare(args) => commands::compare(args),
        Command::Synth(args) => commands::synth(args),
        Command::Experiment(args) => commands::experiment(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("siterank: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
