mod common;

use common::*;
use memir::sparse::{batch_topk_twophase, Bm25Params, CsrIndex, ForwardIndex, TwoPhaseSelector};
use memir::tokenizer::TokenizerMode;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODE: TokenizerMode = TokenizerMode::Minimal;

fn build(docs: &[(u32, String)], chunk: usize) -> CsrIndex {
    CsrIndex::build(docs.iter().map(|(i, t)| (*i, t.as_str())), MODE, chunk, Bm25Params::default()).unwrap()
}

fn terms(q: &str) -> Vec<String> {
    memir::tokenizer::tokenize(q, MODE)
}

#[test]
fn exhaustive_matches_textbook_bm25() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = Bm25Params::default();
    for _ in 0..200 {
        let n = rng.random_range(1..60);
        let docs = random_texts(&mut rng, n, 25, 12);
        let idx = build(&docs, 50_000);
        let q = random_query(&mut rng, 25, 4);
        let k = rng.random_range(1..15);
        let got = pairs(&idx.bm25_topk(&terms(&q), k, &p).unwrap());
        let all = bm25_oracle(&docs, &q, MODE, p.k1, p.b, TfInput::Raw);
        same_topk(&got, &all, k, 1e-9).unwrap_or_else(|e| panic!("query {q:?}: {e}"));
    }
}

#[test]
fn maxscore_and_scan_are_byte_identical_to_exhaustive() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let params = [Bm25Params::default(), Bm25Params::new(0.9, 0.4).unwrap(), Bm25Params::new(2.0, 1.0).unwrap()];
    for i in 0..1_000 {
        let n = rng.random_range(1..80);
        let docs = random_texts(&mut rng, n, 30, 15);
        let idx = build(&docs, 50_000);
        let q = terms(&random_query(&mut rng, 30, 5));
        let k = rng.random_range(1..20);
        let p = &params[i % params.len()];
        let (a, sa) = idx.bm25_topk_with_stats(&q, k, p).unwrap();
        let (b, sb) = idx.bm25_topk_maxscore_with_stats(&q, k, p).unwrap();
        assert_eq!(a, b, "instance {i}");
        assert!(sb.postings_touched <= sa.postings_touched);
        let fwd = ForwardIndex::from_index(&idx);
        assert_eq!(idx.sequential_scan_topk(&fwd, &q, k, p).unwrap().0, a);
    }
}

#[test]
fn chunk_size_does_not_change_the_index() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let docs = random_texts(&mut rng, 300, 40, 10);
    let one = build(&docs, 1).to_bytes();
    assert_eq!(one, build(&docs, 7).to_bytes());
    assert_eq!(one, build(&docs, 1_000_000).to_bytes());
}

#[test]
fn prenormalized_tf_changes_the_ranking() {
    // Graded instance: the long document repeats the term more often.
    let docs: Vec<(u32, String)> = vec![
        (1, "apple apple apple apple pear pear plum plum fig fig kiwi kiwi".into()),
        (2, "apple pear".into()),
        (3, "apple apple plum".into()),
        (4, "fig kiwi".into()),
    ];
    let p = Bm25Params::default();
    let idx = build(&docs, 50_000);
    let got: Vec<u32> = idx.bm25_topk(&["apple"], 3, &p).unwrap().docs().collect();
    let raw: Vec<u32> = sort_oracle(bm25_oracle(&docs, "apple", MODE, p.k1, p.b, TfInput::Raw), 3)
        .iter()
        .map(|x| x.0)
        .collect();
    let pre: Vec<u32> = sort_oracle(bm25_oracle(&docs, "apple", MODE, p.k1, p.b, TfInput::PreNormalized), 3)
        .iter()
        .map(|x| x.0)
        .collect();
    assert_eq!(got, raw);
    assert_ne!(raw, pre);
}

#[test]
fn selector_reuse_matches_sort_oracle_on_random_batches() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let rows: Vec<Vec<f64>> = (0..50)
        .map(|_| (0..200).map(|_| if rng.random_bool(0.3) { rng.random_range(0.0..10.0) } else { 0.0 }).collect())
        .collect();
    let out = batch_topk_twophase(&rows, 10, 32).unwrap();
    for (row, got) in rows.iter().zip(out) {
        let all: Vec<(u32, f64)> = row.iter().enumerate().map(|(i, &s)| (i as u32, s)).collect();
        assert_eq!(pairs(&got), sort_oracle(all, 10));
    }
    assert!(TwoPhaseSelector::new(4, 4).unwrap().select(&rows[0], 5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn maxscore_lossless(seed in any::<u64>(), n in 1usize..50, k in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let docs = random_texts(&mut rng, n, 20, 10);
        let idx = build(&docs, 16);
        let q = terms(&random_query(&mut rng, 20, 6));
        let p = Bm25Params::default();
        prop_assert_eq!(idx.bm25_topk(&q, k, &p).unwrap(), idx.bm25_topk_maxscore(&q, k, &p).unwrap());
    }

    #[test]
    fn self_query_matches_itself(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let docs = random_texts(&mut rng, 30, 50, 8);
        let idx = build(&docs, 50_000);
        let (id, text) = &docs[rng.random_range(0..docs.len())];
        let all = idx.bm25_topk(&terms(text), docs.len(), &Bm25Params::default()).unwrap();
        prop_assert!(all.rank_of(*id).is_some());
    }

    #[test]
    fn raw_tf_saturates(tf in 1u32..50, len_extra in 0u32..20) {
        let len = tf * 2 + len_extra;
        let p = Bm25Params::default();
        let norm = p.length_norm(len as f64, 10.0);
        let one = memir::sparse::bm25_weight(1.3, tf as f64, norm, p.k1);
        let two = memir::sparse::bm25_weight(1.3, 2.0 * tf as f64, norm, p.k1);
        prop_assert!(two > one && two < 2.0 * one);
        prop_assert!(two < 1.3 * (p.k1 + 1.0));
    }
}
