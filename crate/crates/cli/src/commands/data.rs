use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use memir::eval::{write_qrels, Qrels};
use memir::record::write_jsonl;
use memir::router::train_router;
use memir::workload::{gen_corpus, gen_queries, write_queries_tsv, Query};

use crate::config::RunConfig;
use crate::{io, loaders};

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const QUERIES_FILE: &str = "queries.tsv";
pub const QRELS_FILE: &str = "qrels.txt";

fn qrels_of(queries: &[Query]) -> Qrels {
    let mut q = Qrels::new();
    for query in queries {
        let rels = q.entry(query.qid.clone()).or_default();
        for &g in &query.gold {
            rels.insert(g, 1);
        }
    }
    q
}

fn write_bundle(dir: &std::path::Path, records: &[memir::record::MemoryRecord], queries: &[Query]) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut w = io::create(&dir.join(CORPUS_FILE))?;
    write_jsonl(&mut w, records)?;
    io::finish(w)?;
    let mut w = io::create(&dir.join(QUERIES_FILE))?;
    write_queries_tsv(&mut w, queries)?;
    io::finish(w)?;
    let mut w = io::create(&dir.join(QRELS_FILE))?;
    write_qrels(&mut w, &qrels_of(queries))?;
    io::finish(w)
}

#[derive(clap::Args)]
pub struct GenArgs {
    #[arg(long)]
    out_dir: PathBuf,
    /// Queries to draw (default: bench.queries).
    #[arg(long)]
    queries: Option<usize>,
    /// Overrides workload.n_records.
    #[arg(long)]
    records: Option<usize>,
}

pub fn gen(args: GenArgs, cfg: &RunConfig) -> Result<()> {
    let mut spec = cfg.workload.clone();
    if let Some(n) = args.records {
        spec.n_records = n;
    }
    let corpus = gen_corpus(&spec)?;
    let queries = gen_queries(&corpus, args.queries.unwrap_or(cfg.bench.queries), &spec)?;
    write_bundle(&args.out_dir, &corpus, &queries)?;
    log::info!("{} records and {} queries in {}", corpus.len(), queries.len(), args.out_dir.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Longmemeval,
    Locomo,
}

#[derive(clap::Args)]
pub struct ImportArgs {
    #[arg(long, value_enum)]
    format: Format,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

pub fn import(args: ImportArgs) -> Result<()> {
    let json = std::fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let im = match args.format {
        Format::Longmemeval => loaders::longmemeval(&json)?,
        Format::Locomo => loaders::locomo(&json)?,
    };
    if im.unresolved > 0 {
        log::warn!("{} evidence references matched no turn and were dropped", im.unresolved);
    }
    write_bundle(&args.out_dir, &im.records, &im.queries)?;
    log::info!("{} records and {} queries in {}", im.records.len(), im.queries.len(), args.out_dir.display());
    Ok(())
}

#[derive(clap::Args)]
pub struct TrainArgs {
    /// Queries TSV with a qtype column.
    #[arg(long)]
    queries: PathBuf,
    /// Model JSON.
    #[arg(long)]
    out: PathBuf,
}

pub fn train(args: TrainArgs, cfg: &RunConfig) -> Result<()> {
    let queries = io::read_queries(&args.queries)?;
    let labeled: Vec<(String, String)> = queries
        .iter()
        .filter(|q| !q.qtype.is_empty())
        .map(|q| (q.text.clone(), q.qtype.clone()))
        .collect();
    if labeled.is_empty() {
        bail!("{} has no qtype labels", args.queries.display());
    }
    let mut best: BTreeMap<String, String> = cfg.router.best_system.clone();
    for (_, l) in &labeled {
        if !best.contains_key(l) {
            log::warn!("no router.best_system entry for qtype {l:?}; using agent_rrf");
            best.insert(l.clone(), "agent_rrf".into());
        }
    }
    let trained = train_router(&labeled, &cfg.router.train, &best)?;
    let mut w = io::create(&args.out)?;
    std::io::Write::write_all(&mut w, trained.model.to_json()?.as_bytes())?;
    std::io::Write::write_all(&mut w, b"\n")?;
    io::finish(w)?;
    if let Some(l) = trained.loss_history.last() {
        log::info!("router trained on {} queries, final loss {l:.4}", labeled.len());
    }
    Ok(())
}
