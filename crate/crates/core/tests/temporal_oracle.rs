mod common;

use common::*;
use memir::record::MemoryRecord;
use memir::sparse::{Bm25Params, CsrIndex, DEFAULT_CHUNK_SIZE};
use memir::temporal::{estimate_lambda, k_star, StopRules, TemporalIndex, TemporalParams, DAY_MS};
use memir::tokenizer::{tokenize, TokenizerMode};
use memir::workload::{gen_corpus, gen_queries, WorkloadSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODE: TokenizerMode = TokenizerMode::PorterFull;

fn search_everything(k: usize) -> TemporalParams {
    TemporalParams {
        epsilon: 1e-12,
        lambda_hat: 0.01,
        k_max_partitions: k,
        ..Default::default()
    }
}

fn flat(recs: &[MemoryRecord], p: Bm25Params) -> CsrIndex {
    CsrIndex::build(recs.iter().map(|r| (r.id, r.text.as_str())), MODE, DEFAULT_CHUNK_SIZE, p).unwrap()
}

#[test]
fn full_budget_equals_flat_on_synthetic_queries() {
    let spec = WorkloadSpec {
        n_records: 6_000,
        ..Default::default()
    };
    let recs = gen_corpus(&spec).unwrap();
    let p = Bm25Params::default();
    let t = TemporalIndex::build(&recs, &TemporalParams::default(), MODE, p).unwrap();
    let f = flat(&recs, p);
    let params = search_everything(t.num_partitions());
    assert!(params.budget().unwrap() >= t.num_partitions());
    for q in gen_queries(&recs, 500, &spec).unwrap() {
        let terms = tokenize(&q.text, MODE);
        let (got, _) = t.temporal_topk(&terms, 10, &params, &p).unwrap();
        assert_eq!(got, f.bm25_topk(&terms, 10, &p).unwrap(), "{}", q.qid);
    }
}

#[test]
fn partition_sizes_cover_the_corpus() {
    let spec = WorkloadSpec {
        n_records: 40_000,
        ..Default::default()
    };
    let recs = gen_corpus(&spec).unwrap();
    let t = TemporalIndex::build(&recs, &TemporalParams::default(), MODE, Bm25Params::default()).unwrap();
    assert_eq!(t.partition_sizes().iter().sum::<usize>(), 40_000);
    let f = flat(&recs, Bm25Params::default());
    assert_eq!(t.total_postings(), f.num_postings());
    for w in t.partitions().windows(2) {
        assert_eq!(w[0].end_ms, w[1].start_ms);
    }
    for part in t.partitions() {
        for &id in part.index.doc_ids() {
            let ts = recs[id as usize].ts_ms;
            assert!(part.start_ms <= ts && ts < part.end_ms);
        }
    }
}

#[test]
fn median_rank_band_gives_steep_decay() {
    // Gold-session histograms over 50 sessions whose median normalized rank
    // sits at 0.20 and 0.27, grouped four ways as 7-day windows would be.
    for median in [0.20, 0.27] {
        let rate = std::f64::consts::LN_2 / (median * 50.0);
        let sessions: Vec<f64> = (0..50).map(|s| (-rate * s as f64).exp()).collect();
        let hist: Vec<f64> = sessions.chunks(13).map(|c| c.iter().sum()).collect();
        let fit = estimate_lambda(&hist).unwrap();
        assert!(!fit.no_recency_structure);
        assert!(fit.lambda > 0.5 && fit.lambda < 3.0, "median {median}: {fit:?}");
        assert!(k_star(0.05, fit.lambda).unwrap() <= 6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stop_rules_never_change_output(seed in any::<u64>(), k in 1usize..8, cap in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let texts = random_texts(&mut rng, 120, 15, 8);
        let recs: Vec<MemoryRecord> = texts
            .iter()
            .map(|(id, t)| MemoryRecord::new(*id, t.clone(), rng.random_range(0..60) * DAY_MS / 2))
            .collect();
        let p = Bm25Params::default();
        let t = TemporalIndex::build(&recs, &TemporalParams::default(), MODE, p).unwrap();
        let params = TemporalParams { k_max_partitions: cap, lambda_hat: 0.05, ..Default::default() };
        let q = tokenize(&random_query(&mut rng, 15, 4), MODE);
        let base = t.temporal_topk_with(&q, k, &params, &p, StopRules { within_partition: false, across_partitions: false }).unwrap();
        for rules in [
            StopRules { within_partition: true, across_partitions: false },
            StopRules { within_partition: false, across_partitions: true },
            StopRules::default(),
        ] {
            let (got, stats) = t.temporal_topk_with(&q, k, &params, &p, rules).unwrap();
            prop_assert_eq!(&got, &base.0);
            prop_assert!(stats.partitions_searched <= params.budget().unwrap());
        }
    }

    #[test]
    fn upper_bound_dominates_partition_scores(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let texts = random_texts(&mut rng, 80, 12, 10);
        let recs: Vec<MemoryRecord> = texts
            .iter()
            .map(|(id, t)| MemoryRecord::new(*id, t.clone(), rng.random_range(0..30) * DAY_MS))
            .collect();
        let p = Bm25Params::default();
        let t = TemporalIndex::build(&recs, &TemporalParams::default(), MODE, p).unwrap();
        let q = tokenize(&random_query(&mut rng, 12, 4), MODE);
        for (i, part) in t.partitions().iter().enumerate() {
            let ub = t.partition_upper_bound(i, &q, &p).unwrap();
            let best = part.index.bm25_score_all(&q, &p).unwrap().into_iter().fold(0.0, f64::max);
            prop_assert!(best <= ub + 1e-12, "partition {}: {} > {}", i, best, ub);
        }
    }

    #[test]
    fn wider_budget_never_loses_gold(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let texts = random_texts(&mut rng, 100, 20, 8);
        let recs: Vec<MemoryRecord> = texts
            .iter()
            .map(|(id, t)| MemoryRecord::new(*id, t.clone(), rng.random_range(0..50) * DAY_MS))
            .collect();
        let p = Bm25Params::default();
        let t = TemporalIndex::build(&recs, &TemporalParams::default(), MODE, p).unwrap();
        let (gold, text) = &texts[rng.random_range(0..texts.len())];
        let q = tokenize(text, MODE);
        let mut found_before = false;
        for cap in 1..=t.num_partitions() {
            let params = TemporalParams { k_max_partitions: cap, lambda_hat: 0.01, ..Default::default() };
            let (got, _) = t.temporal_topk(&q, 100, &params, &p).unwrap();
            let found = got.rank_of(*gold).is_some();
            prop_assert!(found || !found_before);
            found_before = found;
        }
    }
}
