use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use memir::cascade::{cascade_with, CascadeQuery, Proxy};
use memir::dense::{Embedder, EmbeddingMatrix};
use memir::eval::write_run;
use memir::fusion::{agent_rrf, rrf};
use memir::par::Dispatch;
use memir::record::{MemoryRecord, RecordStore};
use memir::router::{route_soft, RouterModel};
use memir::sparse::{Bm25Params, CsrIndex};
use memir::temporal::{TemporalIndex, TemporalParams};
use memir::tokenizer::tokenize;
use memir::workload::Query;
use memir::RankedList;

use super::build::{load_dense, load_flat, load_temporal};
use crate::config::RunConfig;
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Bm25,
    Maxscore,
    Temporal,
    Dense,
    Rrf,
    #[value(name = "agent_rrf")]
    AgentRrf,
    Soft,
    Cascade,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Bm25 => "bm25",
            Mode::Maxscore => "maxscore",
            Mode::Temporal => "temporal",
            Mode::Dense => "dense",
            Mode::Rrf => "rrf",
            Mode::AgentRrf => "agent_rrf",
            Mode::Soft => "soft",
            Mode::Cascade => "cascade",
        }
    }
}

#[derive(clap::Args)]
pub struct Args {
    /// Directory written by `build`.
    #[arg(long)]
    index: PathBuf,
    /// JSONL corpus the index was built from (record metadata for fusion).
    #[arg(long)]
    corpus: PathBuf,
    /// Queries TSV.
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Results per query (default: bm25.top_k).
    #[arg(long)]
    k: Option<usize>,
    /// TREC run file.
    #[arg(long)]
    out: PathBuf,
    /// Per-query stats CSV (default: the run path with `.stats.csv`).
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Run tag in the last TREC column.
    #[arg(long, default_value = "memir")]
    tag: String,
    /// Router model JSON for `soft` and qtype-aware `cascade`.
    #[arg(long)]
    router: Option<PathBuf>,
}

#[derive(Default)]
struct Stats {
    postings: Option<u64>,
    partitions: Option<usize>,
    escalated: Option<bool>,
    confidence: Option<f64>,
    qtype: Option<String>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    bm25: Bm25Params,
    temporal: TemporalParams,
    flat: Option<CsrIndex>,
    tidx: Option<TemporalIndex>,
    dense: Option<EmbeddingMatrix>,
    embedder: Box<dyn Embedder>,
    store: RecordStore<'a>,
    router: Option<RouterModel>,
    k: usize,
}

impl Ctx<'_> {
    fn flat(&self) -> &CsrIndex {
        self.flat.as_ref().expect("flat index loaded")
    }

    fn sparse(&self, q: &Query, depth: usize) -> Result<(RankedList, u64)> {
        let terms = tokenize(&q.text, self.cfg.tokenizer.mode);
        let (l, s) = self.flat().bm25_topk_maxscore_with_stats(&terms, depth, &self.bm25)?;
        Ok((l, s.postings_touched))
    }

    fn dense(&self, q: &Query, depth: usize) -> Result<RankedList> {
        let m = self.dense.as_ref().expect("dense index loaded");
        Ok(m.dense_topk(&self.embedder.embed(&q.text), depth)?)
    }

    fn qtype(&self, q: &Query) -> Option<String> {
        if !q.qtype.is_empty() {
            return Some(q.qtype.clone());
        }
        self.router.as_ref().map(|r| r.classify(&q.text).predicted_qtype)
    }

    fn hybrid(&self, q: &Query, sparse: &RankedList, qtype: Option<&str>) -> Result<RankedList> {
        let dense = self.dense(q, self.cfg.dense.candidates)?;
        Ok(agent_rrf(sparse, &dense, &self.store, q.ts_ms, qtype, &self.cfg.fusion)?)
    }

    fn system(&self, name: &str, q: &Query) -> Result<RankedList> {
        let depth = self.cfg.dense.candidates;
        Ok(match name {
            "bm25" | "maxscore" => self.sparse(q, depth)?.0,
            "dense" => self.dense(q, depth)?,
            "rrf" => rrf(&[&self.sparse(q, depth)?.0, &self.dense(q, depth)?], self.cfg.fusion.k_rrf),
            "agent_rrf" | "hybrid" => {
                let qt = self.qtype(q);
                self.hybrid(q, &self.sparse(q, depth)?.0, qt.as_deref())?
            }
            other => bail!("unknown system {other:?} in router weights"),
        })
    }

    fn one(&self, mode: Mode, q: &Query) -> Result<(RankedList, Stats)> {
        let k = self.k;
        let depth = self.cfg.dense.candidates;
        let mut st = Stats::default();
        let list = match mode {
            Mode::Bm25 => {
                let terms = tokenize(&q.text, self.cfg.tokenizer.mode);
                let (l, s) = self.flat().bm25_topk_with_stats(&terms, k, &self.bm25)?;
                st.postings = Some(s.postings_touched);
                l
            }
            Mode::Maxscore => {
                let (l, p) = self.sparse(q, k)?;
                st.postings = Some(p);
                l
            }
            Mode::Temporal => {
                let terms = tokenize(&q.text, self.cfg.tokenizer.mode);
                let t = self.tidx.as_ref().expect("temporal index loaded");
                let (l, s) = t.temporal_topk(&terms, k, &self.temporal, &self.bm25)?;
                st.postings = Some(s.postings_touched);
                st.partitions = Some(s.partitions_searched);
                l
            }
            Mode::Dense => self.dense(q, k)?,
            Mode::Rrf => rrf(&[&self.sparse(q, depth)?.0, &self.dense(q, depth)?], self.cfg.fusion.k_rrf).truncated(k),
            Mode::AgentRrf => {
                let qt = self.qtype(q);
                let (sparse, p) = self.sparse(q, depth)?;
                st.postings = Some(p);
                st.qtype = qt.clone();
                self.hybrid(q, &sparse, qt.as_deref())?.truncated(k)
            }
            Mode::Soft => {
                let router = self.router.as_ref().context("soft routing needs --router")?;
                let d = router.classify(&q.text);
                let mut per: BTreeMap<String, RankedList> = BTreeMap::new();
                for name in d.soft_weights.keys() {
                    per.insert(name.clone(), self.system(name, q)?);
                }
                st.qtype = Some(d.predicted_qtype.clone());
                route_soft(&d, &per, self.cfg.fusion.k_rrf)?.truncated(k)
            }
            Mode::Cascade => {
                let classify = |text: &str| -> String {
                    self.router.as_ref().map(|r| r.classify(text).predicted_qtype).unwrap_or_default()
                };
                let qtype_fn: Option<&dyn Fn(&str) -> String> = self.router.as_ref().map(|_| &classify as _);
                let mut postings = 0;
                let d = cascade_with(
                    CascadeQuery { text: &q.text, ts_ms: q.ts_ms },
                    &self.cfg.cascade,
                    || {
                        let (l, p) = self.sparse(q, k).map_err(to_core)?;
                        postings = p;
                        Ok(l)
                    },
                    |_, qtype| {
                        let (sparse, _) = self.sparse(q, depth).map_err(to_core)?;
                        let qt = qtype.map(str::to_string).or_else(|| self.qtype(q));
                        let hybrid = self.hybrid(q, &sparse, qt.as_deref()).map_err(to_core)?;
                        Ok(hybrid.truncated(k))
                    },
                    qtype_fn,
                )?;
                st.postings = Some(postings);
                st.escalated = Some(d.escalated);
                st.confidence = Some(d.confidence);
                st.qtype = d.qtype_used;
                d.results
            }
        };
        Ok((list, st))
    }
}

fn to_core(e: anyhow::Error) -> memir::Error {
    match e.downcast::<memir::Error>() {
        Ok(e) => e,
        Err(e) => memir::Error::InvalidParameter(format!("{e:#}")),
    }
}

pub fn run(args: Args, cfg: &RunConfig, dispatch: Dispatch) -> Result<()> {
    let records: Vec<MemoryRecord> = io::read_corpus(&args.corpus)?;
    let queries = io::read_queries(&args.queries)?;
    let k = args.k.unwrap_or(cfg.bm25.top_k);
    if k == 0 {
        bail!("--k must be at least 1");
    }
    let mode = args.mode;
    let needs_flat = !matches!(mode, Mode::Temporal | Mode::Dense);
    let needs_dense = matches!(mode, Mode::Dense | Mode::Rrf | Mode::AgentRrf | Mode::Soft | Mode::Cascade);
    let router = match &args.router {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Some(RouterModel::from_json(&text)?)
        }
        None => None,
    };
    let cascade_needs_router = cfg.cascade.use_qtype_classifier || cfg.cascade.proxy == Proxy::Classifier;
    if mode == Mode::Cascade && cascade_needs_router && router.is_none() {
        bail!("the cascade configuration classifies queries; pass --router");
    }
    let ctx = Ctx {
        cfg,
        bm25: cfg.bm25.params()?,
        temporal: cfg.temporal.params()?,
        flat: if needs_flat { Some(load_flat(&args.index)?) } else { None },
        tidx: if mode == Mode::Temporal { Some(load_temporal(&args.index)?) } else { None },
        dense: if needs_dense { Some(load_dense(&args.index)?) } else { None },
        embedder: super::embedder(cfg)?,
        store: RecordStore::new(&records),
        router,
        k,
    };
    if let Some(d) = &ctx.dense {
        if d.dim() != cfg.dense.dim {
            bail!("dense index has dimension {} but dense.dim is {}", d.dim(), cfg.dense.dim);
        }
    }

    let results = dispatch.map(&queries, |q| ctx.one(mode, q));
    let mut run_w = io::create(&args.out)?;
    let stats_path = args.stats.unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".stats.csv");
        p.into()
    });
    let mut stats_w = io::csv(
        &stats_path,
        "search",
        cfg,
        "qid,mode,returned,postings_touched,partitions_searched,escalated,confidence,qtype",
    )?;
    for (q, r) in queries.iter().zip(results) {
        let (list, st) = r.with_context(|| format!("query {}", q.qid))?;
        write_run(&mut run_w, &q.qid, &list, &args.tag)?;
        writeln!(
            stats_w,
            "{},{},{},{},{},{},{},{}",
            q.qid,
            mode.name(),
            list.len(),
            io::opt(st.postings),
            io::opt(st.partitions),
            io::opt(st.escalated),
            io::opt(st.confidence),
            io::opt(st.qtype),
        )?;
    }
    io::finish(run_w)?;
    io::finish(stats_w)?;
    log::info!("{} queries searched with {}", queries.len(), mode.name());
    Ok(())
}
