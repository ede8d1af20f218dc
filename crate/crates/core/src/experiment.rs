//! End-to-end experiment drivers over synthetic workloads: per-query cascade
//! outcomes for threshold sweeps, and the corpus-size scaling comparison.

use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cascade::{confidence, Proxy, SweepQuery};
use crate::dense::{ConceptEmbedder, Embedder, EmbeddingMatrix, HashEmbedder};
use crate::error::Result;
use crate::eval::{percentile, Metric};
use crate::fusion::{agent_rrf, FusionParams};
use crate::par::Dispatch;
use crate::ranking::{DocId, RankedList};
use crate::record::{MemoryRecord, RecordStore};
use crate::sparse::{Bm25Params, CsrIndex, ForwardIndex, DEFAULT_CHUNK_SIZE};
use crate::temporal::{TemporalIndex, TemporalParams};
use crate::tokenizer::{tokenize, TokenizerMode};
use crate::workload::{concept_map, gen_corpus, gen_queries, Query, WorkloadSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CascadeBench {
    pub k: usize,
    /// Depth of each list fed to fusion.
    pub candidates: usize,
    pub dim: usize,
    pub embed_seed: u64,
    pub proxy: Proxy,
    pub epsilon_guard: f64,
    pub metric: String,
    pub mode: TokenizerMode,
    pub bm25: Bm25Params,
    pub fusion: FusionParams,
}

impl Default for CascadeBench {
    fn default() -> Self {
        Self {
            k: 10,
            candidates: 100,
            dim: 384,
            embed_seed: 7,
            proxy: Proxy::Margin,
            epsilon_guard: 1e-9,
            metric: "ndcg@10".into(),
            mode: TokenizerMode::default(),
            bm25: Bm25Params::default(),
            fusion: FusionParams::default(),
        }
    }
}

fn gold_rels(q: &Query) -> HashMap<DocId, u32> {
    q.gold.iter().map(|&g| (g, 1)).collect()
}

/// Runs both cascade paths for every query. The dense side embeds through
/// the workload's paraphrase concepts.
pub fn cascade_outcomes(
    corpus: &[MemoryRecord],
    queries: &[Query],
    vocab_size: usize,
    bench: &CascadeBench,
    dispatch: Dispatch,
) -> Result<Vec<SweepQuery>> {
    let metric: Metric = bench.metric.parse()?;
    let idx = CsrIndex::build(
        corpus.iter().map(|r| (r.id, r.text.as_str())),
        bench.mode,
        DEFAULT_CHUNK_SIZE,
        bench.bm25,
    )?;
    let embedder = ConceptEmbedder {
        inner: HashEmbedder::new(bench.dim, bench.embed_seed)?,
        concepts: concept_map(vocab_size),
    };
    let emb = EmbeddingMatrix::from_texts(&embedder, corpus.iter().map(|r| (r.id, r.text.as_str())), dispatch)?;
    let store = RecordStore::new(corpus);
    let rows = dispatch.map(queries, |q| -> Result<SweepQuery> {
        let terms = tokenize(&q.text, bench.mode);
        let sparse = idx.bm25_topk_maxscore(&terms, bench.candidates, &bench.bm25)?;
        let dense = emb.dense_topk(&embedder.embed(&q.text), bench.candidates)?;
        let hybrid = agent_rrf(&sparse, &dense, &store, q.ts_ms, Some(&q.qtype), &bench.fusion)?;
        let rels = gold_rels(q);
        let quality = |l: &RankedList| metric.eval(l, &rels).unwrap_or(0.0);
        let skip = sparse.clone().truncated(bench.k);
        Ok(SweepQuery {
            confidence: confidence(&skip.scores(), bench.proxy, bench.epsilon_guard),
            qtype: Some(q.qtype.clone()),
            quality_skip: quality(&skip),
            quality_escalate: quality(&hybrid.truncated(bench.k)),
        })
    });
    rows.into_iter().collect()
}

const WARMUP_QUERIES: usize = 20;

/// Strategy names in scaling output, in row order.
pub const SCALING_STRATEGIES: [&str; 4] = ["sequential", "exhaustive", "maxscore", "temporal"];

/// Deterministic work counters for one strategy at one corpus size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub strategy: String,
    pub mean_postings: f64,
    /// Mean percentage of records held by the searched index parts.
    pub searched_pct: f64,
    pub hit_at_10: f64,
}

/// Per-query wall-clock latency for one strategy at one corpus size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyRow {
    pub n: usize,
    pub strategy: String,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub p99_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingPoint {
    pub counts: Vec<ScalingRow>,
    pub latency: Vec<LatencyRow>,
}

/// Builds every index over `spec.n_records` records and runs `n_queries`
/// queries through each strategy one at a time, timing each call.
pub fn scaling_point(
    spec: &WorkloadSpec,
    n_queries: usize,
    temporal: &TemporalParams,
    bm25: Bm25Params,
    mode: TokenizerMode,
    dispatch: Dispatch,
) -> Result<ScalingPoint> {
    let k = 10;
    let corpus = gen_corpus(spec)?;
    let queries = gen_queries(&corpus, n_queries, spec)?;
    let n = corpus.len();
    let flat = CsrIndex::build(corpus.iter().map(|r| (r.id, r.text.as_str())), mode, DEFAULT_CHUNK_SIZE, bm25)?;
    let fwd = ForwardIndex::from_index(&flat);
    let tidx = TemporalIndex::build_with(&corpus, temporal, mode, bm25, dispatch)?;
    let terms: Vec<Vec<String>> = queries.iter().map(|q| tokenize(&q.text, mode)).collect();

    let mut counts = Vec::new();
    let mut latency = Vec::new();
    for strategy in SCALING_STRATEGIES {
        let run = |t: &[String]| -> Result<(RankedList, u64, usize)> {
            Ok(match strategy {
                "sequential" => {
                    let (l, s) = flat.sequential_scan_topk(&fwd, t, k, &bm25)?;
                    (l, s.postings_touched, n)
                }
                "exhaustive" => {
                    let (l, s) = flat.bm25_topk_with_stats(t, k, &bm25)?;
                    (l, s.postings_touched, n)
                }
                "maxscore" => {
                    let (l, s) = flat.bm25_topk_maxscore_with_stats(t, k, &bm25)?;
                    (l, s.postings_touched, n)
                }
                _ => {
                    let (l, s) = tidx.temporal_topk(t, k, temporal, &bm25)?;
                    (l, s.postings_touched, s.docs_searched)
                }
            })
        };
        // Warm-up pass, not timed.
        for t in terms.iter().take(WARMUP_QUERIES) {
            run(t)?;
        }
        let (mut postings, mut searched, mut hits) = (0u64, 0.0, 0usize);
        let mut ms = Vec::with_capacity(queries.len());
        for (q, t) in queries.iter().zip(&terms) {
            let start = Instant::now();
            let (list, touched, docs) = run(t)?;
            ms.push(start.elapsed().as_secs_f64() * 1000.0);
            postings += touched;
            searched += docs as f64 / n as f64;
            if q.gold.iter().any(|g| list.rank_of(*g).is_some()) {
                hits += 1;
            }
        }
        let nq = queries.len() as f64;
        counts.push(ScalingRow {
            n,
            strategy: strategy.to_string(),
            mean_postings: postings as f64 / nq,
            searched_pct: 100.0 * searched / nq,
            hit_at_10: hits as f64 / nq,
        });
        ms.sort_by(f64::total_cmp);
        latency.push(LatencyRow {
            n,
            strategy: strategy.to_string(),
            p50_ms: percentile(&ms, 0.50),
            p95_ms: percentile(&ms, 0.95),
            p99_ms: percentile(&ms, 0.99),
        });
    }
    Ok(ScalingPoint { counts, latency })
}
