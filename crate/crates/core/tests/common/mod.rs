//! Independent reference implementations used as test oracles. Nothing
//! here calls into the scoring code under test.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use memir::bridge::SparseVector;
use memir::tokenizer::{tokenize, TokenizerMode};
use memir::{DocId, RankedList};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sort by score descending, doc ascending; keep positive scores; truncate.
pub fn sort_oracle(mut scored: Vec<(DocId, f64)>, k: usize) -> Vec<(DocId, f64)> {
    scored.retain(|&(_, s)| s > 0.0);
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

pub fn pairs(list: &RankedList) -> Vec<(DocId, f64)> {
    list.entries().iter().map(|s| (s.doc, s.score)).collect()
}

/// How term frequency enters the BM25 numerator.
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum TfInput {
    Raw,
    /// tf / |d|, the normalization mistake that double-counts length.
    PreNormalized,
}

/// Textbook BM25 over raw texts: Lucene idf, per-document sums over the
/// distinct query terms, repeated query terms counted with multiplicity.
pub fn bm25_oracle(
    docs: &[(DocId, String)],
    query: &str,
    mode: TokenizerMode,
    k1: f64,
    b: f64,
    tf_input: TfInput,
) -> Vec<(DocId, f64)> {
    let toks: Vec<Vec<String>> = docs.iter().map(|(_, t)| tokenize(t, mode)).collect();
    let n = docs.len() as f64;
    let avgdl = if docs.is_empty() { 0.0 } else { toks.iter().map(|t| t.len()).sum::<usize>() as f64 / n };
    let mut qcount: BTreeMap<String, f64> = BTreeMap::new();
    for t in tokenize(query, mode) {
        *qcount.entry(t).or_insert(0.0) += 1.0;
    }
    let mut df: HashMap<&str, f64> = HashMap::new();
    for t in &toks {
        let mut distinct: Vec<&str> = t.iter().map(|s| s.as_str()).collect();
        distinct.sort_unstable();
        distinct.dedup();
        for d in distinct {
            *df.entry(d).or_insert(0.0) += 1.0;
        }
    }
    docs.iter()
        .zip(&toks)
        .map(|((id, _), t)| {
            let dl = t.len() as f64;
            let mut s = 0.0;
            for (term, &mult) in &qcount {
                let tf = t.iter().filter(|x| *x == term).count() as f64;
                if tf == 0.0 {
                    continue;
                }
                let d = df[term.as_str()];
                let idf = (1.0 + (n - d + 0.5) / (d + 0.5)).ln();
                let x = match tf_input {
                    TfInput::Raw => tf,
                    TfInput::PreNormalized => tf / dl,
                };
                s += mult * idf * x * (k1 + 1.0) / (x + k1 * (1.0 - b + b * dl / avgdl));
            }
            (*id, s)
        })
        .collect()
}

/// `true` when `got` is a valid top-k of `all` up to float noise: same
/// scores rank by rank, and each returned doc's own score matches.
pub fn same_topk(got: &[(DocId, f64)], all: &[(DocId, f64)], k: usize, tol: f64) -> Result<(), String> {
    let want = sort_oracle(all.to_vec(), k);
    if got.len() != want.len() {
        return Err(format!("length {} vs {}", got.len(), want.len()));
    }
    let by_doc: HashMap<DocId, f64> = all.iter().copied().collect();
    for (i, (g, w)) in got.iter().zip(&want).enumerate() {
        if (g.1 - w.1).abs() > tol * w.1.abs().max(1.0) {
            return Err(format!("rank {i}: score {} vs {}", g.1, w.1));
        }
        let own = by_doc.get(&g.0).copied().unwrap_or(0.0);
        if (g.1 - own).abs() > tol * own.abs().max(1.0) {
            return Err(format!("doc {}: reported {} vs oracle {}", g.0, g.1, own));
        }
    }
    Ok(())
}

/// Brute-force sparse dot, accumulating over query terms in ascending
/// index order with `q · d` products in f64.
pub fn sparse_dot_oracle(docs: &[(DocId, SparseVector)], q: &SparseVector) -> Vec<(DocId, f64)> {
    docs.iter()
        .map(|(id, d)| {
            let dm: HashMap<u32, f32> = d.iter().collect();
            let mut s = 0.0f64;
            for (i, qv) in q.iter() {
                if let Some(&dv) = dm.get(&i) {
                    s += qv as f64 * dv as f64;
                }
            }
            (*id, s)
        })
        .collect()
}

pub fn random_sparse_matrix(n_docs: usize, dim: u32, density: f64, seed: u64) -> Vec<(DocId, SparseVector)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_doc = ((dim as f64 * density).round() as usize).max(1);
    (0..n_docs)
        .map(|i| {
            let mut idx: Vec<u32> = (0..per_doc).map(|_| rng.random_range(0..dim)).collect();
            idx.sort_unstable();
            idx.dedup();
            let pairs = idx.into_iter().map(|t| (t, rng.random_range(0.01f32..4.0))).collect();
            (i as DocId, SparseVector::from_pairs(pairs).unwrap())
        })
        .collect()
}

/// Small random texts over a tiny vocabulary, so terms collide often.
pub fn random_texts(rng: &mut ChaCha8Rng, n_docs: usize, vocab: usize, max_len: usize) -> Vec<(DocId, String)> {
    (0..n_docs)
        .map(|i| {
            let len = rng.random_range(1..=max_len);
            let words: Vec<String> = (0..len)
                .map(|_| {
                    // Squared uniform skews toward low ids, like a power law.
                    let u: f64 = rng.random();
                    format!("w{}", (u * u * vocab as f64) as usize)
                })
                .collect();
            (i as DocId * 3 + 1, words.join(" "))
        })
        .collect()
}

pub fn random_query(rng: &mut ChaCha8Rng, vocab: usize, max_terms: usize) -> String {
    let n = rng.random_range(1..=max_terms);
    (0..n)
        .map(|_| format!("w{}", rng.random_range(0..vocab + 2)))
        .collect::<Vec<_>>()
        .join(" ")
}
