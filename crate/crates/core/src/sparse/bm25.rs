//! BM25 scoring over a [`CsrIndex`]: exhaustive term-at-a-time top-k and
//! MaxScore document-at-a-time top-k.
//!
//! Every path sums a document's per-term contributions in ascending term-id
//! order starting from `0.0`, so exhaustive and pruned results are equal to
//! the last bit.

use std::borrow::Cow;

use crate::error::{Error, Result};
use crate::par::Dispatch;
use crate::ranking::{RankedList, Scored, TopK};
use crate::sparse::index::{bm25_weight, Bm25Params, CsrIndex, PayloadKind};
use crate::tokenizer::tokenize;

/// Work counters for one query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Postings whose payload was scored.
    pub postings_touched: u64,
}

/// One distinct query term resolved against an index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannedTerm {
    pub term_id: usize,
    /// Multiplier on the term's contribution: query term frequency for BM25,
    /// the query-side weight for learned payloads.
    pub weight: f64,
}

/// Distinct known query terms in ascending term-id order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryPlan {
    pub terms: Vec<PlannedTerm>,
}

impl QueryPlan {
    /// Resolves already-analyzed terms. Unknown terms are dropped; repeats
    /// raise the term's multiplier.
    pub fn from_terms<S: AsRef<str>>(idx: &CsrIndex, terms: &[S]) -> Self {
        let mut ids: Vec<usize> = terms.iter().filter_map(|t| idx.term_id(t.as_ref())).collect();
        ids.sort_unstable();
        let mut out: Vec<PlannedTerm> = Vec::with_capacity(ids.len());
        for id in ids {
            match out.last_mut() {
                Some(last) if last.term_id == id => last.weight += 1.0,
                _ => out.push(PlannedTerm { term_id: id, weight: 1.0 }),
            }
        }
        Self { terms: out }
    }

    /// Tokenizes `text` with the index's analyzer, then resolves it.
    pub fn from_text(idx: &CsrIndex, text: &str) -> Self {
        Self::from_terms(idx, &tokenize(text, idx.mode()))
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Postings an exhaustive traversal reads.
    pub fn total_postings(&self, idx: &CsrIndex) -> u64 {
        self.terms.iter().map(|t| idx.doc_freq(t.term_id) as u64).sum()
    }
}

/// Per-posting contribution function for one index and parameter set.
pub(crate) struct Scorer<'a> {
    pub(crate) idx: &'a CsrIndex,
    k1: f64,
    norms: Cow<'a, [f64]>,
    bm25: bool,
}

impl<'a> Scorer<'a> {
    pub(crate) fn bm25(idx: &'a CsrIndex, params: &Bm25Params) -> Result<Self> {
        idx.require_payload(PayloadKind::TermFrequency)?;
        params.validate()?;
        let norms = if *params == idx.params {
            Cow::Borrowed(idx.norms.as_slice())
        } else {
            Cow::Owned(
                idx.doc_lens
                    .iter()
                    .map(|&l| params.length_norm(l as f64, idx.avgdl))
                    .collect(),
            )
        };
        Ok(Self {
            idx,
            k1: params.k1,
            norms,
            bm25: true,
        })
    }

    pub(crate) fn learned(idx: &'a CsrIndex) -> Result<Self> {
        idx.require_payload(PayloadKind::Learned)?;
        Ok(Self {
            idx,
            k1: 0.0,
            norms: Cow::Borrowed(&[]),
            bm25: false,
        })
    }

    /// Contribution of posting `p` of `term`, before the query multiplier.
    #[inline]
    pub(crate) fn base(&self, term_id: usize, p: usize) -> f64 {
        let w = self.idx.posting_weights[p] as f64;
        if self.bm25 {
            let d = self.idx.posting_docs[p] as usize;
            bm25_weight(self.idx.term_idfs[term_id], w, self.norms[d], self.k1)
        } else {
            w
        }
    }

    #[inline]
    pub(crate) fn contribution(&self, t: &PlannedTerm, p: usize) -> f64 {
        t.weight * self.base(t.term_id, p)
    }

    /// Upper bound on [`Scorer::contribution`] over the term's postings.
    pub(crate) fn upper_bound(&self, t: &PlannedTerm) -> f64 {
        let ms = if self.norms_are_index_norms() {
            self.idx.term_maxscores[t.term_id]
        } else {
            self.idx
                .posting_range(t.term_id)
                .map(|p| self.base(t.term_id, p))
                .fold(0.0, f64::max)
        };
        t.weight * ms
    }

    fn norms_are_index_norms(&self) -> bool {
        !self.bm25 || matches!(self.norms, Cow::Borrowed(_))
    }
}

/// BM25 contribution of a single posting, using the raw stored count.
pub fn bm25_term_score(idx: &CsrIndex, term_id: usize, posting_index: usize, params: &Bm25Params) -> Result<f64> {
    if term_id >= idx.num_terms() {
        return Err(Error::UnknownTerm(term_id));
    }
    let r = idx.posting_range(term_id);
    if !r.contains(&posting_index) {
        return Err(Error::PostingOutOfRange {
            term_id,
            index: posting_index,
            start: r.start,
            end: r.end,
        });
    }
    idx.require_payload(PayloadKind::TermFrequency)?;
    params.validate()?;
    let d = idx.posting_docs[posting_index] as usize;
    let norm = params.length_norm(idx.doc_lens[d] as f64, idx.avgdl);
    Ok(bm25_weight(
        idx.term_idfs[term_id],
        idx.posting_weights[posting_index] as f64,
        norm,
        params.k1,
    ))
}

/// Term-at-a-time accumulation over every posting of every query term.
pub(crate) fn exhaustive(scorer: &Scorer<'_>, plan: &QueryPlan, k: usize) -> (RankedList, SearchStats) {
    let idx = scorer.idx;
    let mut acc = vec![0.0f64; idx.num_docs()];
    let mut seen = vec![false; idx.num_docs()];
    let mut hit: Vec<u32> = Vec::new();
    let mut touched = 0u64;
    for t in &plan.terms {
        for p in idx.posting_range(t.term_id) {
            let d = idx.posting_docs[p];
            if !seen[d as usize] {
                seen[d as usize] = true;
                hit.push(d);
            }
            acc[d as usize] += scorer.contribution(t, p);
            touched += 1;
        }
    }
    let mut top = TopK::new(k);
    for d in hit {
        let s = acc[d as usize];
        if s > 0.0 {
            top.push(Scored::new(idx.doc_id(d), s));
        }
    }
    (top.into_ranked(), SearchStats { postings_touched: touched })
}

// `a` is below `theta` by more than float noise between summation orders.
#[inline]
fn below(a: f64, theta: f64) -> bool {
    a + a.abs() * 1e-9 + 1e-12 < theta
}

/// MaxScore document-at-a-time traversal. Terms are ordered by their upper
/// bounds; the low-bound prefix whose cumulative bound cannot reach the
/// current k-th score is demoted to non-essential and only probed for
/// candidates surfaced by essential terms.
pub(crate) fn maxscore(scorer: &Scorer<'_>, plan: &QueryPlan, k: usize) -> (RankedList, SearchStats) {
    let idx = scorer.idx;
    let n = plan.terms.len();
    let mut top = TopK::new(k);
    if n == 0 || k == 0 {
        return (top.into_ranked(), SearchStats::default());
    }

    let ubs: Vec<f64> = plan.terms.iter().map(|t| scorer.upper_bound(t)).collect();
    // Positions into plan.terms, ascending by upper bound.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ubs[a].total_cmp(&ubs[b]).then(a.cmp(&b)));
    let mut prefix = vec![0.0; n];
    let mut run = 0.0;
    for (i, &o) in order.iter().enumerate() {
        run += ubs[o];
        prefix[i] = run;
    }

    let mut pos: Vec<usize> = plan.terms.iter().map(|t| idx.posting_range(t.term_id).start).collect();
    let ends: Vec<usize> = plan.terms.iter().map(|t| idx.posting_range(t.term_id).end).collect();
    let mut contrib: Vec<Option<f64>> = vec![None; n];
    let mut touched = 0u64;
    let mut non_essential = 0usize;

    loop {
        let theta = top.score_floor();
        while non_essential < n && below(prefix[non_essential], theta) {
            non_essential += 1;
        }
        if non_essential == n {
            break;
        }

        let candidate = order[non_essential..]
            .iter()
            .filter(|&&o| pos[o] < ends[o])
            .map(|&o| idx.posting_docs[pos[o]])
            .min();
        let Some(doc) = candidate else { break };

        contrib.iter_mut().for_each(|c| *c = None);
        let mut partial = 0.0;
        for &o in &order[non_essential..] {
            if pos[o] < ends[o] && idx.posting_docs[pos[o]] == doc {
                let c = scorer.contribution(&plan.terms[o], pos[o]);
                contrib[o] = Some(c);
                partial += c;
                pos[o] += 1;
                touched += 1;
            }
        }

        let mut pruned = false;
        for i in (0..non_essential).rev() {
            if below(partial + prefix[i], theta) {
                pruned = true;
                break;
            }
            let o = order[i];
            let plist = &idx.posting_docs[pos[o]..ends[o]];
            let skip = plist.partition_point(|&d| d < doc);
            pos[o] += skip;
            if pos[o] < ends[o] && idx.posting_docs[pos[o]] == doc {
                let c = scorer.contribution(&plan.terms[o], pos[o]);
                contrib[o] = Some(c);
                partial += c;
                pos[o] += 1;
                touched += 1;
            }
        }
        if pruned {
            continue;
        }

        let mut score = 0.0;
        for c in contrib.iter().flatten() {
            score += c;
        }
        if score > 0.0 {
            top.push(Scored::new(idx.doc_id(doc), score));
        }
    }
    (top.into_ranked(), SearchStats { postings_touched: touched })
}

impl CsrIndex {
    /// Exact BM25 top-k by exhaustive traversal.
    pub fn bm25_topk<S: AsRef<str>>(&self, query_terms: &[S], k: usize, params: &Bm25Params) -> Result<RankedList> {
        Ok(self.bm25_topk_with_stats(query_terms, k, params)?.0)
    }

    pub fn bm25_topk_with_stats<S: AsRef<str>>(
        &self,
        query_terms: &[S],
        k: usize,
        params: &Bm25Params,
    ) -> Result<(RankedList, SearchStats)> {
        if k == 0 {
            return Err(Error::ZeroK);
        }
        let scorer = Scorer::bm25(self, params)?;
        Ok(exhaustive(&scorer, &QueryPlan::from_terms(self, query_terms), k))
    }

    /// Exact BM25 top-k with MaxScore pruning; identical output to
    /// [`CsrIndex::bm25_topk`].
    pub fn bm25_topk_maxscore<S: AsRef<str>>(
        &self,
        query_terms: &[S],
        k: usize,
        params: &Bm25Params,
    ) -> Result<RankedList> {
        Ok(self.bm25_topk_maxscore_with_stats(query_terms, k, params)?.0)
    }

    pub fn bm25_topk_maxscore_with_stats<S: AsRef<str>>(
        &self,
        query_terms: &[S],
        k: usize,
        params: &Bm25Params,
    ) -> Result<(RankedList, SearchStats)> {
        if k == 0 {
            return Err(Error::ZeroK);
        }
        let scorer = Scorer::bm25(self, params)?;
        Ok(maxscore(&scorer, &QueryPlan::from_terms(self, query_terms), k))
    }

    /// MaxScore top-k for a batch of queries, dispatched across queries.
    /// Results follow input order and do not depend on `dispatch`.
    pub fn bm25_topk_batch<S: AsRef<str> + Sync>(
        &self,
        queries: &[Vec<S>],
        k: usize,
        params: &Bm25Params,
        dispatch: Dispatch,
    ) -> Result<Vec<RankedList>> {
        dispatch.map(queries, |q| self.bm25_topk_maxscore(q, k, params)).into_iter().collect()
    }

    /// Per-document BM25 scores for every document, indexed by ordinal.
    /// Intended for batch selection and tests.
    pub fn bm25_score_all<S: AsRef<str>>(&self, query_terms: &[S], params: &Bm25Params) -> Result<Vec<f64>> {
        let scorer = Scorer::bm25(self, params)?;
        let plan = QueryPlan::from_terms(self, query_terms);
        let mut acc = vec![0.0; self.num_docs()];
        for t in &plan.terms {
            for p in self.posting_range(t.term_id) {
                acc[self.posting_docs[p] as usize] += scorer.contribution(t, p);
            }
        }
        Ok(acc)
    }
}
