//! Learned-sparse bridge: per-document weight vectors transposed into the
//! CSR posting layout and scored by posting traversal.
//!
//! Term ids are vector dimensions. Per document, contributions accumulate in
//! ascending dimension order, so a brute-force dot product that walks the
//! query the same way produces the same bits.

use std::collections::HashSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::{DocId, RankedList};
use crate::sparse::bm25::{exhaustive, maxscore, PlannedTerm, QueryPlan, Scorer, SearchStats};
use crate::sparse::index::{Bm25Params, CsrIndex, CsrParts, IdfConvention, PayloadKind};
use crate::tokenizer::TokenizerMode;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub indices: Vec<u32>,
    pub values: Vec<f32>,
}

impl SparseVector {
    /// Builds a vector from unordered pairs; zero entries are dropped.
    pub fn from_pairs(mut pairs: Vec<(u32, f32)>) -> Result<Self> {
        pairs.retain(|&(_, v)| v != 0.0);
        pairs.sort_unstable_by_key(|&(i, _)| i);
        let v = Self {
            indices: pairs.iter().map(|p| p.0).collect(),
            values: pairs.iter().map(|p| p.1).collect(),
        };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        if self.indices.len() != self.values.len() {
            return Err(Error::InvalidParameter("indices and values differ in length".into()));
        }
        if self.indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("sparse indices must be strictly increasing".into()));
        }
        if let Some(v) = self.values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!("sparse value {v} is not a positive finite number")));
        }
        Ok(())
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f32)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }
}

fn dim_label(d: u32) -> String {
    format!("{d:010}")
}

/// Transposes per-document vectors into a learned-payload CSR index with
/// one term per dimension in `0..dim`. Dimensions at or above `dim` are
/// rejected.
pub fn ingest<I>(doc_vectors: I, dim: u32) -> Result<CsrIndex>
where
    I: IntoIterator<Item = (DocId, SparseVector)>,
{
    let mut seen = HashSet::new();
    let mut doc_ids = Vec::new();
    let mut doc_lens = Vec::new();
    let mut columns: Vec<Vec<(u32, f32)>> = vec![Vec::new(); dim as usize];
    for (id, v) in doc_vectors {
        if !seen.insert(id) {
            return Err(Error::DuplicateDocId(id));
        }
        v.validate()?;
        let ord = doc_ids.len() as u32;
        for (i, w) in v.iter() {
            let col = columns
                .get_mut(i as usize)
                .ok_or_else(|| Error::InvalidParameter(format!("dimension {i} outside 0..{dim}")))?;
            col.push((ord, w));
        }
        doc_ids.push(id);
        doc_lens.push(v.nnz() as u32);
    }

    let mut term_offsets = Vec::with_capacity(dim as usize + 1);
    let mut posting_docs = Vec::new();
    let mut posting_weights = Vec::new();
    term_offsets.push(0);
    for col in columns {
        for (ord, w) in col {
            posting_docs.push(ord);
            posting_weights.push(w);
        }
        term_offsets.push(posting_docs.len());
    }

    let mut idx = CsrIndex::assemble(
        PayloadKind::Learned,
        TokenizerMode::Minimal,
        IdfConvention::None,
        Bm25Params::default(),
        CsrParts {
            vocab: (0..dim).map(dim_label).collect(),
            term_offsets,
            posting_docs,
            posting_weights,
            term_idfs: vec![0.0; dim as usize],
            doc_ids,
            doc_lens,
        },
    );
    idx.refresh_derived();
    Ok(idx)
}

/// Reads `{doc_id, indices, values}` JSONL records.
pub fn read_doc_vectors<R: BufRead>(r: R) -> Result<Vec<(DocId, SparseVector)>> {
    #[derive(Deserialize)]
    struct Line {
        doc_id: DocId,
        indices: Vec<u32>,
        values: Vec<f32>,
    }
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Line = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: n + 1,
            reason: e.to_string(),
        })?;
        let v = SparseVector {
            indices: rec.indices,
            values: rec.values,
        };
        v.validate().map_err(|e| Error::MalformedLine {
            line: n + 1,
            reason: e.to_string(),
        })?;
        out.push((rec.doc_id, v));
    }
    Ok(out)
}

fn plan(idx: &CsrIndex, q: &SparseVector) -> QueryPlan {
    QueryPlan {
        terms: q
            .iter()
            .filter(|&(i, _)| (i as usize) < idx.num_terms())
            .map(|(i, w)| PlannedTerm {
                term_id: i as usize,
                weight: w as f64,
            })
            .collect(),
    }
}

/// Exact top-k by posting traversal: `S[doc] += w_q · W_t[doc]`.
pub fn bridge_topk(idx: &CsrIndex, query: &SparseVector, k: usize) -> Result<RankedList> {
    Ok(bridge_topk_with_stats(idx, query, k)?.0)
}

pub fn bridge_topk_with_stats(idx: &CsrIndex, query: &SparseVector, k: usize) -> Result<(RankedList, SearchStats)> {
    if k == 0 {
        return Err(Error::ZeroK);
    }
    query.validate()?;
    let scorer = Scorer::learned(idx)?;
    Ok(exhaustive(&scorer, &plan(idx, query), k))
}

/// MaxScore-pruned variant using per-term maximum weights as bounds.
pub fn bridge_topk_maxscore(idx: &CsrIndex, query: &SparseVector, k: usize) -> Result<(RankedList, SearchStats)> {
    if k == 0 {
        return Err(Error::ZeroK);
    }
    query.validate()?;
    let scorer = Scorer::learned(idx)?;
    Ok(maxscore(&scorer, &plan(idx, query), k))
}

/// Per-document vectors recovered from the inverted layout, in ordinal order.
pub fn transpose_back(idx: &CsrIndex) -> Result<Vec<(DocId, SparseVector)>> {
    idx.require_payload(PayloadKind::Learned)?;
    let mut rows: Vec<Vec<(u32, f32)>> = vec![Vec::new(); idx.num_docs()];
    for t in 0..idx.num_terms() {
        for p in idx.posting_range(t) {
            rows[idx.posting_docs()[p] as usize].push((t as u32, idx.posting_weights()[p]));
        }
    }
    Ok(idx
        .doc_ids()
        .iter()
        .zip(rows)
        .map(|(&id, r)| {
            (
                id,
                SparseVector {
                    indices: r.iter().map(|p| p.0).collect(),
                    values: r.iter().map(|p| p.1).collect(),
                },
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_posting() {
        let v = SparseVector::from_pairs(vec![(3, 2.5)]).unwrap();
        let idx = ingest(vec![(7, v)], 5).unwrap();
        assert_eq!(idx.num_postings(), 1);
        assert_eq!(idx.postings(&dim_label(3)), vec![(7, 2.5)]);
    }

    #[test]
    fn duplicate_doc_rejected() {
        let v = SparseVector::from_pairs(vec![(0, 1.0)]).unwrap();
        assert!(matches!(ingest(vec![(1, v.clone()), (1, v)], 2), Err(Error::DuplicateDocId(1))));
    }

    #[test]
    fn bm25_scoring_of_bridge_index_rejected() {
        let v = SparseVector::from_pairs(vec![(0, 1.0)]).unwrap();
        let idx = ingest(vec![(1, v)], 2).unwrap();
        let err = idx.bm25_topk(&[dim_label(0)], 1, &Bm25Params::default()).unwrap_err();
        assert!(matches!(err, Error::PayloadMismatch { .. }));
    }

    #[test]
    fn empty_query_gives_nothing() {
        let v = SparseVector::from_pairs(vec![(0, 1.0)]).unwrap();
        let idx = ingest(vec![(1, v)], 2).unwrap();
        assert!(bridge_topk(&idx, &SparseVector::default(), 3).unwrap().is_empty());
    }

    #[test]
    fn one_hot_query_ranks_by_stored_weight() {
        let docs = vec![
            (10, SparseVector::from_pairs(vec![(1, 0.5), (2, 3.0)]).unwrap()),
            (11, SparseVector::from_pairs(vec![(1, 1.5)]).unwrap()),
            (12, SparseVector::from_pairs(vec![(1, 0.25)]).unwrap()),
        ];
        let idx = ingest(docs, 3).unwrap();
        let q = SparseVector::from_pairs(vec![(1, 1.0)]).unwrap();
        let got: Vec<_> = bridge_topk(&idx, &q, 10).unwrap().docs().collect();
        assert_eq!(got, vec![11, 10, 12]);
    }

    #[test]
    fn jsonl_errors_carry_line_numbers() {
        let text = "{\"doc_id\":1,\"indices\":[0],\"values\":[1.0]}\n{\"doc_id\":2,\"indices\":[1,0],\"values\":[1.0,2.0]}\n";
        match read_doc_vectors(text.as_bytes()) {
            Err(Error::MalformedLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
