use std::collections::BTreeMap;

use memir::cascade::{
    amortized_cost, cascade_retrieve, cascade_with, cross_validate, default_grid, sweep_optimum, sweep_thresholds,
    tune_per_qtype_thresholds, CascadeConfig, CascadeQuery, CvItem, SweepQuery,
};
use memir::dense::{ConceptEmbedder, Embedder, EmbeddingMatrix, HashEmbedder};
use memir::experiment::{cascade_outcomes, CascadeBench};
use memir::fusion::{agent_rrf, FusionParams};
use memir::par::Dispatch;
use memir::record::{MemoryRecord, RecordStore};
use memir::router::{route_discrete, route_soft, RoutingDecision, TrainConfig};
use memir::sparse::{Bm25Params, CsrIndex, DEFAULT_CHUNK_SIZE};
use memir::tokenizer::{tokenize, TokenizerMode};
use memir::workload::{concept_map, gen_corpus, gen_queries, Query, WorkloadSpec};
use memir::{DocId, RankedList};
use proptest::prelude::*;

struct World {
    corpus: Vec<MemoryRecord>,
    queries: Vec<Query>,
    idx: CsrIndex,
    emb: EmbeddingMatrix,
    embedder: ConceptEmbedder,
}

fn world(paraphrase_rate: f64, n: usize) -> World {
    let spec = WorkloadSpec {
        n_records: n,
        paraphrase_rate,
        ..Default::default()
    };
    let corpus = gen_corpus(&spec).unwrap();
    let queries = gen_queries(&corpus, 120, &spec).unwrap();
    let mode = TokenizerMode::default();
    let idx = CsrIndex::build(corpus.iter().map(|r| (r.id, r.text.as_str())), mode, DEFAULT_CHUNK_SIZE, Bm25Params::default())
        .unwrap();
    let embedder = ConceptEmbedder {
        inner: HashEmbedder::new(128, 1).unwrap(),
        concepts: concept_map(spec.vocab_size),
    };
    let emb = EmbeddingMatrix::from_texts(&embedder, corpus.iter().map(|r| (r.id, r.text.as_str())), Dispatch::Sequential)
        .unwrap();
    World {
        corpus,
        queries,
        idx,
        emb,
        embedder,
    }
}

fn docs(l: &RankedList) -> Vec<(DocId, u64)> {
    l.entries().iter().map(|s| (s.doc, s.score.to_bits())).collect()
}

#[test]
fn threshold_endpoints_reduce_to_single_paths() {
    let w = world(0.4, 1500);
    let store = RecordStore::new(&w.corpus);
    let fusion = FusionParams::default();
    let p = Bm25Params::default();
    for q in &w.queries {
        let terms = tokenize(&q.text, TokenizerMode::default());
        let bm25 = || w.idx.bm25_topk(&terms, 50, &p);
        let dense = || w.emb.dense_topk(&w.embedder.embed(&q.text), 50);
        let query = CascadeQuery {
            text: &q.text,
            ts_ms: q.ts_ms,
        };
        let zero = CascadeConfig {
            conf_threshold: 0.0,
            ..Default::default()
        };
        let d = cascade_retrieve(query, &store, &zero, bm25, dense, &fusion, None, 10).unwrap();
        assert!(!d.escalated);
        assert_eq!(docs(&d.results), docs(&bm25().unwrap()));

        let inf = CascadeConfig {
            conf_threshold: f64::INFINITY,
            ..Default::default()
        };
        let d = cascade_retrieve(query, &store, &inf, bm25, dense, &fusion, None, 10).unwrap();
        assert!(d.escalated);
        let hybrid = agent_rrf(&bm25().unwrap(), &dense().unwrap(), &store, q.ts_ms, None, &fusion).unwrap();
        assert_eq!(docs(&d.results), docs(&hybrid.truncated(10)));
    }
}

#[test]
fn accounted_costs_average_to_the_amortized_cost() {
    assert!((amortized_cost(0.63, 0.4, 53.2).unwrap() - 19.936).abs() < 1e-9);
    let w = world(0.4, 1500);
    let p = Bm25Params::default();
    for tau in [0.0, 0.05, 0.2, 0.5, 1.0] {
        let cfg = CascadeConfig {
            conf_threshold: tau,
            ..Default::default()
        };
        let (mut cost, mut skipped) = (0.0, 0usize);
        for q in &w.queries {
            let terms = tokenize(&q.text, TokenizerMode::default());
            let d = cascade_with(
                CascadeQuery { text: &q.text, ts_ms: q.ts_ms },
                &cfg,
                || w.idx.bm25_topk(&terms, 10, &p),
                |s, _| Ok(s.clone()),
                None,
            )
            .unwrap();
            cost += d.accounted_cost_ms;
            skipped += usize::from(!d.escalated);
        }
        let n = w.queries.len() as f64;
        let rho = skipped as f64 / n;
        assert!((cost / n - amortized_cost(rho, cfg.skip_cost_ms, cfg.escalate_cost_ms).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn soft_composition_skips_the_same_queries() {
    let w = world(0.4, 1500);
    let p = Bm25Params::default();
    let cfg = CascadeConfig::default();
    for q in &w.queries {
        let terms = tokenize(&q.text, TokenizerMode::default());
        let per: BTreeMap<String, RankedList> = [
            ("bm25".to_string(), w.idx.bm25_topk(&terms, 20, &p).unwrap()),
            ("dense".to_string(), w.emb.dense_topk(&w.embedder.embed(&q.text), 20).unwrap()),
        ]
        .into();
        let decision = RoutingDecision {
            predicted_qtype: q.qtype.clone(),
            posterior: BTreeMap::new(),
            chosen_system: "dense".into(),
            soft_weights: [("bm25".to_string(), 0.3), ("dense".to_string(), 0.7)].into(),
        };
        let run = |soft: bool| {
            cascade_with(
                CascadeQuery { text: &q.text, ts_ms: q.ts_ms },
                &cfg,
                || w.idx.bm25_topk(&terms, 10, &p),
                |_, _| if soft { route_soft(&decision, &per, 60.0) } else { route_discrete(&decision, &per) },
                None,
            )
            .unwrap()
        };
        let (a, b) = (run(true), run(false));
        assert_eq!(a.escalated, b.escalated);
        assert_eq!(a.confidence, b.confidence);
        if !a.escalated {
            assert_eq!(a.results, b.results);
        }
    }
}

proptest! {
    #[test]
    fn skip_set_shrinks_as_threshold_rises(confs in prop::collection::vec(0.0f64..1.0, 1..60), a in 0.0f64..1.2, b in 0.0f64..1.2) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let skip = |tau: f64| -> Vec<bool> { confs.iter().map(|&c| c >= tau).collect() };
        let (s_lo, s_hi) = (skip(lo), skip(hi));
        for (x, y) in s_lo.iter().zip(&s_hi) {
            prop_assert!(!*y || *x);
        }
        let qs: Vec<SweepQuery> = confs.iter().map(|&c| SweepQuery { confidence: c, qtype: None, quality_skip: 0.0, quality_escalate: 1.0 }).collect();
        let rows = sweep_thresholds(&qs, &[lo, hi], &CascadeConfig::default()).unwrap();
        prop_assert!(rows[1].skip_rate <= rows[0].skip_rate);
        prop_assert!(rows[1].amortized_ms >= rows[0].amortized_ms);
    }
}

fn optimum_skip(paraphrase_rate: f64) -> (f64, f64, f64) {
    let spec = WorkloadSpec {
        paraphrase_rate,
        ..Default::default()
    };
    let corpus = gen_corpus(&spec).unwrap();
    let qs = gen_queries(&corpus, 300, &spec).unwrap();
    let out = cascade_outcomes(&corpus, &qs, spec.vocab_size, &CascadeBench::default(), Dispatch::Parallel).unwrap();
    let rows = sweep_thresholds(&out, &default_grid(20), &CascadeConfig::default()).unwrap();
    let best = sweep_optimum(&rows).unwrap();
    (best.skip_rate, best.metric, rows[0].metric)
}

#[test]
fn lexical_workload_optimum_is_full_skip() {
    let (skip, best, _) = optimum_skip(0.0);
    assert_eq!(skip, 1.0, "best metric {best}");
}

#[test]
fn paraphrase_workload_optimum_escalates() {
    let (skip, best, full_skip) = optimum_skip(0.7);
    assert!(skip < 1.0);
    assert!(best > full_skip + 0.1);
}

#[test]
fn per_qtype_tuning_separates_workloads() {
    let spec = WorkloadSpec {
        paraphrase_rate: 0.4,
        ..Default::default()
    };
    let corpus = gen_corpus(&spec).unwrap();
    let qs = gen_queries(&corpus, 300, &spec).unwrap();
    let out = cascade_outcomes(&corpus, &qs, spec.vocab_size, &CascadeBench::default(), Dispatch::Parallel).unwrap();
    let t = tune_per_qtype_thresholds(&out, &default_grid(20), 0.005, &[], 0.1).unwrap();
    assert_eq!(t["lexical"], 0.0);
    assert!(t["paraphrase"] > 0.0);
}

#[test]
fn cross_validation_harness_is_deterministic() {
    let spec = WorkloadSpec {
        n_records: 1500,
        paraphrase_rate: 0.4,
        ..Default::default()
    };
    let corpus = gen_corpus(&spec).unwrap();
    let qs = gen_queries(&corpus, 150, &spec).unwrap();
    let out = cascade_outcomes(&corpus, &qs, spec.vocab_size, &CascadeBench::default(), Dispatch::Sequential).unwrap();
    let items: Vec<CvItem> = qs
        .iter()
        .zip(out)
        .map(|(q, o)| CvItem {
            text: q.text.clone(),
            qtype: q.qtype.clone(),
            outcome: o,
        })
        .collect();
    let train = TrainConfig {
        epochs: 50,
        ..Default::default()
    };
    let run = || cross_validate(&items, 5, &default_grid(10), 0.005, &CascadeConfig::default(), &train, 3).unwrap();
    let r = run();
    assert_eq!(r, run());
    assert_eq!(r.folds.len(), 5);
    assert_eq!(r.folds.iter().map(|f| f.n_test).sum::<usize>(), items.len());
    for f in &r.folds {
        assert!(f.speedup >= 1.0);
        assert!((0.0..=1.0).contains(&f.classifier_accuracy));
    }
}
