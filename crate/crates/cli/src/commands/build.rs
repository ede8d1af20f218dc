use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::ValueEnum;
use memir::dense::EmbeddingMatrix;
use memir::par::Dispatch;
use memir::sparse::CsrIndex;
use memir::temporal::TemporalIndex;
use serde::Serialize;

use crate::config::RunConfig;
use crate::io;

pub const FLAT_FILE: &str = "flat.idx";
pub const TEMPORAL_FILE: &str = "temporal.idx";
pub const DENSE_FILE: &str = "dense.emb";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Flat,
    Temporal,
    Dense,
}

#[derive(clap::Args)]
pub struct Args {
    /// JSONL corpus.
    #[arg(long)]
    corpus: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Index kinds to build (default: all).
    #[arg(long, value_enum, value_delimiter = ',')]
    kind: Vec<Kind>,
}

#[derive(Serialize)]
struct Meta<'a> {
    config_sha256: String,
    docs: usize,
    kinds: &'a [Kind],
}

fn report(what: &str, docs: usize, start: Instant) {
    let s = start.elapsed().as_secs_f64();
    log::info!("{what}: {docs} docs in {s:.2}s ({:.0} docs/s)", docs as f64 / s.max(1e-9));
}

pub fn run(args: Args, cfg: &RunConfig, dispatch: Dispatch) -> Result<()> {
    let records = io::read_corpus(&args.corpus)?;
    let kinds = if args.kind.is_empty() { vec![Kind::Flat, Kind::Temporal, Kind::Dense] } else { args.kind };
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mode = cfg.tokenizer.mode;
    let bm25 = cfg.bm25.params()?;
    for &k in &kinds {
        let start = Instant::now();
        match k {
            Kind::Flat => {
                let idx = CsrIndex::build(records.iter().map(|r| (r.id, r.text.as_str())), mode, cfg.bm25.chunk_size, bm25)?;
                io::finish(idx.write_to(io::create(&args.out.join(FLAT_FILE))?)?)?;
                report("flat index", records.len(), start);
            }
            Kind::Temporal => {
                let idx = TemporalIndex::build_with(&records, &cfg.temporal.params()?, mode, bm25, dispatch)?;
                log::info!("temporal index: {} partitions", idx.num_partitions());
                io::finish(idx.write_to(io::create(&args.out.join(TEMPORAL_FILE))?)?)?;
                report("temporal index", records.len(), start);
            }
            Kind::Dense => {
                let e = super::embedder(cfg)?;
                let m = EmbeddingMatrix::from_texts(e.as_ref(), records.iter().map(|r| (r.id, r.text.as_str())), dispatch)?;
                io::finish(m.write_to(io::create(&args.out.join(DENSE_FILE))?)?)?;
                report("dense embeddings", records.len(), start);
            }
        }
    }
    let meta = Meta {
        config_sha256: cfg.sha256(),
        docs: records.len(),
        kinds: &kinds,
    };
    let mut w = io::create(&args.out.join(META_FILE))?;
    serde_json::to_writer_pretty(&mut w, &meta)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    io::finish(w)
}

pub fn load_flat(dir: &Path) -> Result<CsrIndex> {
    let p = dir.join(FLAT_FILE);
    CsrIndex::read_from(io::open(&p).context("this mode needs the flat index; build with --kind flat")?)
        .with_context(|| format!("reading {}", p.display()))
}

pub fn load_temporal(dir: &Path) -> Result<TemporalIndex> {
    let p = dir.join(TEMPORAL_FILE);
    TemporalIndex::read_from(io::open(&p).context("this mode needs the temporal index; build with --kind temporal")?)
        .with_context(|| format!("reading {}", p.display()))
}

pub fn load_dense(dir: &Path) -> Result<EmbeddingMatrix> {
    let p = dir.join(DENSE_FILE);
    EmbeddingMatrix::read_from(io::open(&p).context("this mode needs dense embeddings; build with --kind dense")?)
        .with_context(|| format!("reading {}", p.display()))
}
