use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};
use memir::par::Dispatch;

mod commands;
mod config;
mod io;
mod loaders;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "memir", version, about = "Hybrid retrieval experiments for agent memory")]
struct Cli {
    /// TOML run configuration; defaults apply to anything it omits.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores, 1 = sequential). Output does not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build flat, temporal and dense indexes from a JSONL corpus.
    Build(commands::build::Args),
    /// Run queries and write a TREC run file plus per-query stats.
    Search(commands::search::Args),
    /// Score a run file against qrels, optionally against a baseline run.
    Eval(commands::eval::Args),
    /// Postings and latency per strategy across corpus sizes.
    BenchScaling(commands::bench::ScalingArgs),
    /// Cascade threshold sweep, per-qtype tuning and cross-validation.
    BenchCascade(commands::bench::CascadeArgs),
    /// Agent-session cost simulation from measured latency curves.
    SimulateSession(commands::bench::SessionArgs),
    /// Generate a synthetic corpus, queries and qrels.
    GenCorpus(commands::data::GenArgs),
    /// Convert LongMemEval or LoCoMo JSON into corpus, queries and qrels.
    Import(commands::data::ImportArgs),
    /// Train the qtype router from labeled queries.
    TrainRouter(commands::data::TrainArgs),
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let mut cfg = RunConfig::load(cli.config.as_deref(), std::env::vars())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
        cfg.workload.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    // The worker count changes scheduling only, so it stays out of the hash.
    let workers = std::mem::take(&mut cfg.workers);
    let dispatch = if workers == 1 { Dispatch::Sequential } else { Dispatch::Parallel };
    with_workers(workers, || run(cli.cmd, &cfg, dispatch))
}

fn run(cmd: Command, cfg: &RunConfig, dispatch: Dispatch) -> Result<()> {
    match cmd {
        Command::Build(a) => commands::build::run(a, cfg, dispatch),
        Command::Search(a) => commands::search::run(a, cfg, dispatch),
        Command::Eval(a) => commands::eval::run(a, cfg),
        Command::BenchScaling(a) => commands::bench::scaling(a, cfg, dispatch),
        Command::BenchCascade(a) => commands::bench::cascade(a, cfg, dispatch),
        Command::SimulateSession(a) => commands::bench::session(a, cfg),
        Command::GenCorpus(a) => commands::data::gen(a, cfg),
        Command::Import(a) => commands::data::import(a),
        Command::TrainRouter(a) => commands::data::train(a, cfg),
    }
}

#[cfg(feature = "parallel")]
fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if workers <= 1 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
fn with_workers<T>(_workers: usize, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f()
}
