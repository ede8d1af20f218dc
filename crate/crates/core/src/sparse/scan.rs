//! Flat sequential scan: every record's term list is visited for every
//! query. This is the O(N·L) baseline the pruned and partitioned paths are
//! measured against.

use crate::error::{Error, Result};
use crate::ranking::{RankedList, Scored, TopK};

use super::bm25::{PlannedTerm, QueryPlan, Scorer, SearchStats};
use super::index::{Bm25Params, CsrIndex};

/// Document-major view of a [`CsrIndex`]: for each ordinal, its
/// `(term_id, posting_index)` pairs in ascending term order.
#[derive(Debug, Clone)]
pub struct ForwardIndex {
    offsets: Vec<usize>,
    entries: Vec<(u32, u32)>,
}

impl ForwardIndex {
    pub fn from_index(idx: &CsrIndex) -> Self {
        let n = idx.num_docs();
        let mut counts = vec![0usize; n + 1];
        for &d in idx.posting_docs() {
            counts[d as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let offsets = counts.clone();
        let mut fill = counts;
        let mut entries = vec![(0u32, 0u32); idx.num_postings()];
        // Terms are visited ascending, so each row comes out sorted.
        for t in 0..idx.num_terms() {
            for p in idx.posting_range(t) {
                let d = idx.posting_docs()[p] as usize;
                entries[fill[d]] = (t as u32, p as u32);
                fill[d] += 1;
            }
        }
        Self { offsets, entries }
    }

    pub fn num_docs(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn row(&self, ordinal: usize) -> &[(u32, u32)] {
        &self.entries[self.offsets[ordinal]..self.offsets[ordinal + 1]]
    }
}

impl CsrIndex {
    /// BM25 top-k by scanning every record. Ranking and scores are
    /// identical to [`CsrIndex::bm25_topk`]; `postings_touched` counts every
    /// entry visited.
    pub fn sequential_scan_topk<S: AsRef<str>>(
        &self,
        fwd: &ForwardIndex,
        query_terms: &[S],
        k: usize,
        params: &Bm25Params,
    ) -> Result<(RankedList, SearchStats)> {
        if fwd.num_docs() != self.num_docs() || fwd.entries.len() != self.num_postings() {
            return Err(Error::InvalidParameter("forward index does not match the inverted index".into()));
        }
        let scorer = Scorer::bm25(self, params)?;
        let plan = QueryPlan::from_terms(self, query_terms);
        let mut slot: Vec<Option<&PlannedTerm>> = vec![None; self.num_terms()];
        for t in &plan.terms {
            slot[t.term_id] = Some(t);
        }
        let mut top = TopK::new(k);
        let mut touched = 0u64;
        for d in 0..fwd.num_docs() {
            let mut s = 0.0;
            let mut any = false;
            for &(t, p) in fwd.row(d) {
                touched += 1;
                if let Some(pt) = slot[t as usize] {
                    s += scorer.contribution(pt, p as usize);
                    any = true;
                }
            }
            if any && s > 0.0 {
                top.push(Scored::new(self.doc_id(d as u32), s));
            }
        }
        Ok((top.into_ranked(), SearchStats { postings_touched: touched }))
    }
}
