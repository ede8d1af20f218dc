//! Time-partitioned BM25 index searched most-recent-first under a partition
//! budget derived from the workload's recency skew.
//!
//! Every partition is scored with corpus-wide statistics (document count,
//! document frequencies, average length), so a document scores the same in
//! its partition as in a flat index over the whole corpus.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::par::Dispatch;
use crate::ranking::{DocId, RankedList, TopK};
use crate::record::MemoryRecord;
use crate::sparse::bm25::{maxscore, QueryPlan, Scorer};
use crate::sparse::index::{Bm25Params, CsrIndex, DEFAULT_CHUNK_SIZE};
use crate::tokenizer::TokenizerMode;

pub const DAY_MS: i64 = 86_400_000;

const MAGIC: &[u8; 8] = b"MEMIRTMP";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TemporalParams {
    pub window_ms: i64,
    pub epsilon: f64,
    pub lambda_hat: f64,
    pub k_max_partitions: usize,
}

impl Default for TemporalParams {
    fn default() -> Self {
        Self {
            window_ms: 7 * DAY_MS,
            epsilon: 0.05,
            lambda_hat: 1.4,
            k_max_partitions: 4,
        }
    }
}

impl TemporalParams {
    pub fn validate(&self) -> Result<()> {
        if self.window_ms <= 0 {
            return Err(Error::InvalidParameter("partition window must be positive".into()));
        }
        if self.k_max_partitions == 0 {
            return Err(Error::InvalidParameter("k_max_partitions must be at least 1".into()));
        }
        k_star(self.epsilon, self.lambda_hat).map(|_| ())
    }

    /// Partition budget: `min(k*, k_max_partitions)`.
    pub fn budget(&self) -> Result<usize> {
        Ok(k_star(self.epsilon, self.lambda_hat)?.min(self.k_max_partitions))
    }
}

/// `max(1, ⌈ln(1/ε)/λ⌉)`.
pub fn k_star(epsilon: f64, lambda: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} outside (0, 1)")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda {lambda} must be positive")));
    }
    let k = ((1.0 / epsilon).ln() / lambda).ceil();
    Ok(if k.is_finite() && k > 1.0 { k as usize } else { 1 })
}

/// Result of a recency-decay fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaFit {
    pub lambda: f64,
    /// Set when the histogram shows no decay towards older partitions.
    pub no_recency_structure: bool,
}

const LAMBDA_FLOOR: f64 = 1e-6;

/// Maximum-likelihood decay rate of a truncated geometric law
/// `π_a ∝ e^{−λa}` over partition ages `a = 0..hist.len()`, where `hist[a]`
/// counts gold hits `a` partitions back from the newest.
pub fn estimate_lambda(hist: &[f64]) -> Result<LambdaFit> {
    if hist.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
        return Err(Error::InvalidParameter("histogram counts must be finite and non-negative".into()));
    }
    let occupied = hist.iter().filter(|&&c| c > 0.0).count();
    if occupied < 2 {
        return Err(Error::Degenerate(
            "recency histogram has fewer than two occupied ranks; configure lambda_hat manually".into(),
        ));
    }
    let total: f64 = hist.iter().sum();
    let mean = hist.iter().enumerate().map(|(a, &c)| a as f64 * c).sum::<f64>() / total;

    let model_mean = |lambda: f64| {
        let (mut num, mut den) = (0.0, 0.0);
        for a in 0..hist.len() {
            let w = (-lambda * a as f64).exp();
            num += a as f64 * w;
            den += w;
        }
        num / den
    };

    // The model mean decreases in lambda from the uniform mean towards 0.
    if mean >= model_mean(LAMBDA_FLOOR) {
        log::warn!("recency histogram shows no recency structure; lambda set to {LAMBDA_FLOOR}");
        return Ok(LambdaFit {
            lambda: LAMBDA_FLOOR,
            no_recency_structure: true,
        });
    }
    let (mut lo, mut hi) = (LAMBDA_FLOOR, 1.0);
    while model_mean(hi) > mean {
        hi *= 2.0;
        if hi > 1e6 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if model_mean(mid) > mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(LambdaFit {
        lambda: 0.5 * (lo + hi),
        no_recency_structure: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// Inclusive window start, epoch ms.
    pub start_ms: i64,
    /// Exclusive window end, epoch ms.
    pub end_ms: i64,
    pub index: CsrIndex,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TemporalStats {
    pub partitions_searched: usize,
    /// Records held by the searched partitions.
    pub docs_searched: usize,
    pub postings_touched: u64,
    pub early_stopped: bool,
}

/// Switches for the two stopping rules, for audits that compare them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRules {
    pub within_partition: bool,
    pub across_partitions: bool,
}

impl Default for StopRules {
    fn default() -> Self {
        Self {
            within_partition: true,
            across_partitions: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalIndex {
    partitions: Vec<Partition>,
    total_docs: usize,
}

impl TemporalIndex {
    /// Buckets records into contiguous windows of `params.window_ms`
    /// anchored at the earliest timestamp. Windows with no records are kept
    /// so that partition positions track elapsed time.
    pub fn build(
        records: &[MemoryRecord],
        params: &TemporalParams,
        mode: TokenizerMode,
        bm25: Bm25Params,
    ) -> Result<Self> {
        Self::build_with(records, params, mode, bm25, Dispatch::default())
    }

    /// [`TemporalIndex::build`] with partitions built under `dispatch`.
    pub fn build_with(
        records: &[MemoryRecord],
        params: &TemporalParams,
        mode: TokenizerMode,
        bm25: Bm25Params,
        dispatch: Dispatch,
    ) -> Result<Self> {
        params.validate()?;
        let Some(origin) = records.iter().map(|r| r.ts_ms).min() else {
            return Ok(Self {
                partitions: Vec::new(),
                total_docs: 0,
            });
        };
        let last = records.iter().map(|r| r.ts_ms).max().unwrap_or(origin);
        let count = ((last - origin) / params.window_ms) as usize + 1;

        let mut buckets: Vec<Vec<(DocId, &str)>> = vec![Vec::new(); count];
        for r in records {
            let i = ((r.ts_ms - origin) / params.window_ms) as usize;
            buckets[i].push((r.id, r.text.as_str()));
        }
        let built = dispatch.map_range(count, |i| {
            CsrIndex::build(buckets[i].iter().copied(), mode, DEFAULT_CHUNK_SIZE, bm25)
        });
        let mut partitions = Vec::with_capacity(count);
        for (i, index) in built.into_iter().enumerate() {
            let start_ms = origin + i as i64 * params.window_ms;
            partitions.push(Partition {
                start_ms,
                end_ms: start_ms + params.window_ms,
                index: index?,
            });
        }

        let mut seen = std::collections::HashSet::new();
        for p in &partitions {
            for &id in p.index.doc_ids() {
                if !seen.insert(id) {
                    return Err(Error::DuplicateDocId(id));
                }
            }
        }
        let mut tidx = Self {
            partitions,
            total_docs: records.len(),
        };
        tidx.share_statistics();
        Ok(tidx)
    }

    fn share_statistics(&mut self) {
        let mut df: HashMap<String, u32> = HashMap::new();
        let mut total_len = 0u64;
        for p in &self.partitions {
            total_len += p.index.doc_lens().iter().map(|&l| l as u64).sum::<u64>();
            for (t, term) in p.index.vocab().iter().enumerate() {
                *df.entry(term.clone()).or_insert(0) += p.index.doc_freq(t) as u32;
            }
        }
        let avgdl = if self.total_docs == 0 {
            0.0
        } else {
            total_len as f64 / self.total_docs as f64
        };
        for p in &mut self.partitions {
            p.index.rebase_statistics(self.total_docs, avgdl, &df);
        }
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn num_partitions(&self) -> usize {
        self.partitions.len()
    }

    pub fn total_docs(&self) -> usize {
        self.total_docs
    }

    pub fn partition_sizes(&self) -> Vec<usize> {
        self.partitions.iter().map(|p| p.index.num_docs()).collect()
    }

    pub fn total_postings(&self) -> usize {
        self.partitions.iter().map(|p| p.index.num_postings()).sum()
    }

    /// Σ over query terms of the partition's MaxScore bound; no document in
    /// the partition can score above it.
    pub fn partition_upper_bound<S: AsRef<str>>(&self, i: usize, query_terms: &[S], bm25: &Bm25Params) -> Result<f64> {
        let p = self
            .partitions
            .get(i)
            .ok_or_else(|| Error::InvalidParameter(format!("partition {i} out of range")))?;
        let scorer = Scorer::bm25(&p.index, bm25)?;
        let plan = QueryPlan::from_terms(&p.index, query_terms);
        Ok(upper_bound(&scorer, &plan))
    }

    pub fn temporal_topk<S: AsRef<str>>(
        &self,
        query_terms: &[S],
        k: usize,
        params: &TemporalParams,
        bm25: &Bm25Params,
    ) -> Result<(RankedList, TemporalStats)> {
        self.temporal_topk_with(query_terms, k, params, bm25, StopRules::default())
    }

    /// [`TemporalIndex::temporal_topk`] over a batch, dispatched across
    /// queries. Results follow input order.
    pub fn temporal_topk_batch<S: AsRef<str> + Sync>(
        &self,
        queries: &[Vec<S>],
        k: usize,
        params: &TemporalParams,
        bm25: &Bm25Params,
        dispatch: Dispatch,
    ) -> Result<Vec<(RankedList, TemporalStats)>> {
        dispatch.map(queries, |q| self.temporal_topk(q, k, params, bm25)).into_iter().collect()
    }

    /// Searches at most `min(k*, k_max_partitions, K)` partitions newest
    /// first, merging each partition's own top-k into a global top-k.
    pub fn temporal_topk_with<S: AsRef<str>>(
        &self,
        query_terms: &[S],
        k: usize,
        params: &TemporalParams,
        bm25: &Bm25Params,
        rules: StopRules,
    ) -> Result<(RankedList, TemporalStats)> {
        if k == 0 {
            return Err(Error::ZeroK);
        }
        params.validate()?;
        let budget = params.budget()?.min(self.partitions.len());
        let order: Vec<usize> = (0..self.partitions.len()).rev().take(budget).collect();

        let mut scorers = Vec::with_capacity(order.len());
        let mut bounds = Vec::with_capacity(order.len());
        for &i in &order {
            let idx = &self.partitions[i].index;
            let scorer = Scorer::bm25(idx, bm25)?;
            let plan = QueryPlan::from_terms(idx, query_terms);
            bounds.push(upper_bound(&scorer, &plan));
            scorers.push((scorer, plan));
        }
        // remaining_max[j] = max bound over order[j..].
        let mut remaining_max = vec![f64::NEG_INFINITY; order.len() + 1];
        for j in (0..order.len()).rev() {
            remaining_max[j] = remaining_max[j + 1].max(bounds[j]);
        }

        let mut heap = TopK::new(k);
        let mut stats = TemporalStats::default();
        for (j, (scorer, plan)) in scorers.iter().enumerate() {
            if rules.across_partitions {
                if let Some(worst) = heap.threshold() {
                    if worst.score > remaining_max[j] {
                        stats.early_stopped = true;
                        break;
                    }
                }
            }
            stats.partitions_searched += 1;
            stats.docs_searched += scorer.idx.num_docs();
            let (local, s) = maxscore(scorer, plan, k);
            stats.postings_touched += s.postings_touched;
            for cand in local.into_entries() {
                if !heap.admits(&cand) {
                    if rules.within_partition {
                        break;
                    }
                    continue;
                }
                heap.push(cand);
            }
        }
        Ok((heap.into_ranked(), stats))
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<W> {
        let mut w = Writer::new(w);
        w.bytes(MAGIC)?;
        w.u32(VERSION)?;
        w.u64(self.total_docs as u64)?;
        w.u64(self.partitions.len() as u64)?;
        for p in &self.partitions {
            w.i64(p.start_ms)?;
            w.i64(p.end_ms)?;
            p.index.write_body(&mut w)?;
        }
        Ok(w.into_inner())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.write_to(Vec::new()).expect("writing to memory cannot fail")
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = Reader::new(r);
        r.magic(MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return r.malformed(format!("unsupported temporal index version {version}"));
        }
        let total_docs = r.u64()? as usize;
        let n = r.len(1 << 24, "partition")?;
        let mut partitions = Vec::with_capacity(n);
        for _ in 0..n {
            let start_ms = r.i64()?;
            let end_ms = r.i64()?;
            if end_ms <= start_ms || partitions.last().is_some_and(|p: &Partition| p.end_ms != start_ms) {
                return r.malformed("partition windows are not contiguous");
            }
            partitions.push(Partition {
                start_ms,
                end_ms,
                index: CsrIndex::read_body(&mut r)?,
            });
        }
        if partitions.iter().map(|p| p.index.num_docs()).sum::<usize>() != total_docs {
            return r.malformed("partition sizes do not sum to the document count");
        }
        Ok(Self { partitions, total_docs })
    }
}

fn upper_bound(scorer: &Scorer<'_>, plan: &QueryPlan) -> f64 {
    let mut ub = 0.0;
    for t in &plan.terms {
        ub += scorer.upper_bound(t);
    }
    ub
}
