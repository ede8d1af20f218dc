//! Ranked result lists and the bounded top-k collector shared by every
//! retrieval path.
//!
//! Ordering is always score-descending with ties broken by ascending
//! document id, so every path that sees the same scores emits the same list.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

/// Corpus-wide document identifier.
pub type DocId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub doc: DocId,
    pub score: f64,
}

impl Scored {
    pub fn new(doc: DocId, score: f64) -> Self {
        Self { doc, score }
    }

    /// `true` when `self` ranks strictly ahead of `other`.
    #[inline]
    pub fn beats(&self, other: &Scored) -> bool {
        rank_order(self, other) == Ordering::Less
    }
}

/// Total order used for ranking: higher score first, then lower doc id.
#[inline]
pub fn rank_order(a: &Scored, b: &Scored) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.doc.cmp(&b.doc))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    entries: Vec<Scored>,
}

impl RankedList {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Sorts arbitrary (doc, score) pairs into ranking order and keeps the
    /// first `k`. Later duplicates of a doc id are dropped.
    pub fn from_unsorted(mut entries: Vec<Scored>, k: usize) -> Self {
        entries.sort_by(rank_order);
        let mut seen = std::collections::HashSet::with_capacity(entries.len());
        entries.retain(|s| seen.insert(s.doc));
        entries.truncate(k);
        Self { entries }
    }

    /// Wraps entries that the caller guarantees are already in ranking order.
    pub(crate) fn from_sorted(entries: Vec<Scored>) -> Self {
        debug_assert!(entries
            .windows(2)
            .all(|w| rank_order(&w[0], &w[1]) == Ordering::Less));
        Self { entries }
    }

    pub fn entries(&self) -> &[Scored] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Scored> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn docs(&self) -> impl Iterator<Item = DocId> + '_ {
        self.entries.iter().map(|s| s.doc)
    }

    pub fn scores(&self) -> Vec<f64> {
        self.entries.iter().map(|s| s.score).collect()
    }

    /// 1-based rank of `doc`, if present.
    pub fn rank_of(&self, doc: DocId) -> Option<usize> {
        self.entries.iter().position(|s| s.doc == doc).map(|p| p + 1)
    }

    pub fn truncated(mut self, k: usize) -> Self {
        self.entries.truncate(k);
        self
    }
}

impl<'a> IntoIterator for &'a RankedList {
    type Item = &'a Scored;
    type IntoIter = std::slice::Iter<'a, Scored>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

// Heap wrapper whose maximum is the *worst* ranked entry.
#[derive(Debug, Clone, Copy)]
struct Worst(Scored);

impl PartialEq for Worst {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Worst {}
impl PartialOrd for Worst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Worst {
    fn cmp(&self, other: &Self) -> Ordering {
        rank_order(&self.0, &other.0)
    }
}

/// Bounded collector keeping the best `k` entries seen so far.
#[derive(Debug, Clone)]
pub struct TopK {
    k: usize,
    heap: BinaryHeap<Worst>,
}

impl TopK {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    pub fn capacity(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.heap.len() >= self.k
    }

    /// Current worst retained entry, once the collector is full.
    pub fn threshold(&self) -> Option<Scored> {
        if self.is_full() {
            self.heap.peek().map(|w| w.0)
        } else {
            None
        }
    }

    /// Score a candidate must strictly exceed to be admitted regardless of
    /// its doc id. `-inf` while the collector has free slots.
    pub fn score_floor(&self) -> f64 {
        self.threshold().map_or(f64::NEG_INFINITY, |s| s.score)
    }

    /// `true` if `cand` would be admitted.
    pub fn admits(&self, cand: &Scored) -> bool {
        if self.k == 0 {
            return false;
        }
        match self.threshold() {
            None => true,
            Some(worst) => cand.beats(&worst),
        }
    }

    /// Offers a candidate; returns whether it was kept.
    pub fn push(&mut self, cand: Scored) -> bool {
        if !self.admits(&cand) {
            return false;
        }
        self.heap.push(Worst(cand));
        if self.heap.len() > self.k {
            self.heap.pop();
        }
        true
    }

    pub fn into_ranked(self) -> RankedList {
        let mut entries: Vec<Scored> = self.heap.into_iter().map(|w| w.0).collect();
        entries.sort_by(rank_order);
        RankedList::from_sorted(entries)
    }
}
