//! Flat CSR inverted index.
//!
//! Postings are stored structure-of-arrays: one offsets array delimiting each
//! term's contiguous range in the parallel `posting_docs` / `posting_weights`
//! arrays. Vocabulary ids follow alphabetical term order so layouts are
//! reproducible. Postings reference documents by *ordinal* (position in
//! `doc_ids`), which is also build-input order.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::ranking::DocId;
use crate::tokenizer::{tokenize, TokenizerMode};

/// Documents per transient batch during streaming build.
pub const DEFAULT_CHUNK_SIZE: usize = 50_000;

const MAGIC: &[u8; 8] = b"MEMIRCSR";
const VERSION: u32 = 1;
const MAX_ELEMS: u64 = 1 << 34;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        let p = Self { k1, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1 >= 0.0 && self.k1.is_finite()) {
            return Err(Error::InvalidParameter(format!("k1 must be >= 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidParameter(format!("b must be in [0, 1], got {}", self.b)));
        }
        Ok(())
    }

    /// Length-normalisation term `k1 * (1 - b + b * |d| / avgdl)`.
    #[inline]
    pub fn length_norm(&self, doc_len: f64, avgdl: f64) -> f64 {
        let ratio = if avgdl > 0.0 { doc_len / avgdl } else { 0.0 };
        self.k1 * (1.0 - self.b + self.b * ratio)
    }
}

/// Saturating BM25 term weight over a raw term count.
#[inline]
pub fn bm25_weight(idf: f64, tf: f64, norm: f64, k1: f64) -> f64 {
    idf * (tf * (k1 + 1.0)) / (tf + norm)
}

/// `ln(1 + (N - df + 0.5) / (df + 0.5))`, always positive.
#[inline]
pub fn idf(num_docs: usize, df: usize) -> f64 {
    let n = num_docs as f64;
    let df = df as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

/// What a posting weight means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PayloadKind {
    /// Raw integer term frequency, scored with BM25.
    TermFrequency,
    /// Learned sparse weight, scored by dot product.
    Learned,
}

impl PayloadKind {
    pub fn name(self) -> &'static str {
        match self {
            PayloadKind::TermFrequency => "term-frequency (BM25)",
            PayloadKind::Learned => "learned-weight",
        }
    }
}

/// How `term_idfs` were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IdfConvention {
    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`.
    LuceneBm25,
    /// Supplied by the caller.
    Explicit,
    /// Not applicable (learned payloads).
    None,
}

impl IdfConvention {
    fn code(self) -> u8 {
        match self {
            IdfConvention::LuceneBm25 => 0,
            IdfConvention::Explicit => 1,
            IdfConvention::None => 2,
        }
    }
    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(IdfConvention::LuceneBm25),
            1 => Some(IdfConvention::Explicit),
            2 => Some(IdfConvention::None),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrIndex {
    pub(crate) payload: PayloadKind,
    pub(crate) mode: TokenizerMode,
    pub(crate) idf_convention: IdfConvention,
    pub(crate) params: Bm25Params,
    pub(crate) vocab: Vec<String>,
    pub(crate) term_lookup: HashMap<String, u32>,
    pub(crate) term_offsets: Vec<usize>,
    pub(crate) posting_docs: Vec<u32>,
    pub(crate) posting_weights: Vec<f32>,
    pub(crate) term_idfs: Vec<f64>,
    pub(crate) term_maxscores: Vec<f64>,
    pub(crate) doc_ids: Vec<DocId>,
    pub(crate) doc_lens: Vec<u32>,
    pub(crate) avgdl: f64,
    // Derived: params.length_norm(doc_len, avgdl) per ordinal.
    pub(crate) norms: Vec<f64>,
}

/// Raw arrays for assembling an index directly, e.g. from a hand-written layout.
#[derive(Debug, Clone)]
pub struct CsrParts {
    pub vocab: Vec<String>,
    pub term_offsets: Vec<usize>,
    pub posting_docs: Vec<u32>,
    pub posting_weights: Vec<f32>,
    pub term_idfs: Vec<f64>,
    pub doc_ids: Vec<DocId>,
    pub doc_lens: Vec<u32>,
}

type PostingMap = HashMap<String, Vec<(u32, u32)>>;

impl CsrIndex {
    /// Builds a BM25 index from `(doc_id, text)` pairs, processing documents
    /// in batches of `chunk_size`. Per-document term maps live only for the
    /// duration of their batch. The result does not depend on `chunk_size`.
    pub fn build<I, S>(docs: I, mode: TokenizerMode, chunk_size: usize, params: Bm25Params) -> Result<Self>
    where
        I: IntoIterator<Item = (DocId, S)>,
        S: AsRef<str>,
    {
        params.validate()?;
        if chunk_size == 0 {
            return Err(Error::InvalidParameter("chunk_size must be >= 1".into()));
        }
        let mut seen = HashSet::new();
        let mut doc_ids = Vec::new();
        let mut doc_lens = Vec::new();
        let mut postings: PostingMap = HashMap::new();
        let mut chunk: Vec<(DocId, S)> = Vec::with_capacity(chunk_size.min(1 << 16));

        for (id, text) in docs {
            if !seen.insert(id) {
                return Err(Error::DuplicateDocId(id));
            }
            chunk.push((id, text));
            if chunk.len() == chunk_size {
                absorb_chunk(&mut chunk, mode, &mut doc_ids, &mut doc_lens, &mut postings);
            }
        }
        absorb_chunk(&mut chunk, mode, &mut doc_ids, &mut doc_lens, &mut postings);

        let mut terms: Vec<(String, Vec<(u32, u32)>)> = postings.into_iter().collect();
        terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));

        let total: usize = terms.iter().map(|(_, p)| p.len()).sum();
        let mut vocab = Vec::with_capacity(terms.len());
        let mut term_offsets = Vec::with_capacity(terms.len() + 1);
        let mut posting_docs = Vec::with_capacity(total);
        let mut posting_weights = Vec::with_capacity(total);
        let mut term_idfs = Vec::with_capacity(terms.len());
        term_offsets.push(0);
        for (term, plist) in terms {
            term_idfs.push(idf(doc_ids.len(), plist.len()));
            for (ord, tf) in plist {
                posting_docs.push(ord);
                posting_weights.push(tf as f32);
            }
            term_offsets.push(posting_docs.len());
            vocab.push(term);
        }

        let mut idx = Self::assemble(
            PayloadKind::TermFrequency,
            mode,
            IdfConvention::LuceneBm25,
            params,
            CsrParts {
                vocab,
                term_offsets,
                posting_docs,
                posting_weights,
                term_idfs,
                doc_ids,
                doc_lens,
            },
        );
        idx.refresh_derived();
        Ok(idx)
    }

    /// Assembles a BM25 index from explicit arrays, validating every layout
    /// invariant. Average document length and MaxScore bounds are derived.
    pub fn from_parts(parts: CsrParts, mode: TokenizerMode, params: Bm25Params) -> Result<Self> {
        params.validate()?;
        let mut idx = Self::assemble(PayloadKind::TermFrequency, mode, IdfConvention::Explicit, params, parts);
        idx.validate()?;
        idx.refresh_derived();
        Ok(idx)
    }

    pub(crate) fn assemble(
        payload: PayloadKind,
        mode: TokenizerMode,
        idf_convention: IdfConvention,
        params: Bm25Params,
        parts: CsrParts,
    ) -> Self {
        let term_lookup = parts
            .vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        let avgdl = if parts.doc_lens.is_empty() {
            0.0
        } else {
            parts.doc_lens.iter().map(|&l| l as f64).sum::<f64>() / parts.doc_lens.len() as f64
        };
        Self {
            payload,
            mode,
            idf_convention,
            params,
            term_lookup,
            term_maxscores: vec![0.0; parts.vocab.len()],
            vocab: parts.vocab,
            term_offsets: parts.term_offsets,
            posting_docs: parts.posting_docs,
            posting_weights: parts.posting_weights,
            term_idfs: parts.term_idfs,
            doc_ids: parts.doc_ids,
            doc_lens: parts.doc_lens,
            avgdl,
            norms: Vec::new(),
        }
    }

    /// Recomputes length norms and per-term MaxScore bounds.
    pub(crate) fn refresh_derived(&mut self) {
        self.norms = self
            .doc_lens
            .iter()
            .map(|&l| self.params.length_norm(l as f64, self.avgdl))
            .collect();
        self.term_maxscores = (0..self.vocab.len())
            .map(|t| {
                let r = self.posting_range(t);
                match self.payload {
                    PayloadKind::TermFrequency => r
                        .map(|p| {
                            let d = self.posting_docs[p] as usize;
                            bm25_weight(self.term_idfs[t], self.posting_weights[p] as f64, self.norms[d], self.params.k1)
                        })
                        .fold(0.0, f64::max),
                    PayloadKind::Learned => r.map(|p| self.posting_weights[p] as f64).fold(0.0, f64::max),
                }
            })
            .collect();
    }

    /// Replaces corpus statistics with externally supplied ones (used when
    /// several partitions must score exactly like one flat index).
    pub(crate) fn rebase_statistics(&mut self, num_docs: usize, avgdl: f64, df: &HashMap<String, u32>) {
        self.avgdl = avgdl;
        self.term_idfs = self
            .vocab
            .iter()
            .map(|t| idf(num_docs, df.get(t).copied().unwrap_or(0) as usize))
            .collect();
        self.refresh_derived();
    }

    /// Checks every structural invariant of the layout.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        let v = self.vocab.len();
        if self.term_offsets.len() != v + 1 {
            return bad(format!("term_offsets has {} entries for {} terms", self.term_offsets.len(), v));
        }
        if self.term_offsets[0] != 0 || self.term_offsets[v] != self.posting_docs.len() {
            return bad("term_offsets must start at 0 and end at the posting count".into());
        }
        if self.posting_weights.len() != self.posting_docs.len() {
            return bad("posting_docs and posting_weights differ in length".into());
        }
        if self.term_idfs.len() != v {
            return bad("term_idfs length differs from vocabulary size".into());
        }
        if self.doc_lens.len() != self.doc_ids.len() {
            return bad("doc_lens length differs from doc count".into());
        }
        if self.vocab.windows(2).any(|w| w[0] >= w[1]) {
            return bad("vocabulary must be strictly alphabetical".into());
        }
        let mut ids = HashSet::new();
        for &id in &self.doc_ids {
            if !ids.insert(id) {
                return Err(Error::DuplicateDocId(id));
            }
        }
        for t in 0..v {
            let (s, e) = (self.term_offsets[t], self.term_offsets[t + 1]);
            if s > e {
                return bad(format!("term_offsets decrease at term {t}"));
            }
            let docs = &self.posting_docs[s..e];
            if docs.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("posting doc ids of term {t} are not strictly increasing"));
            }
            if docs.iter().any(|&d| d as usize >= self.doc_ids.len()) {
                return bad(format!("term {t} references an unknown document"));
            }
            for &w in &self.posting_weights[s..e] {
                let ok = match self.payload {
                    PayloadKind::TermFrequency => w >= 1.0 && w.fract() == 0.0,
                    PayloadKind::Learned => w > 0.0 && w.is_finite(),
                };
                if !ok {
                    return bad(format!("invalid posting weight {w} for term {t}"));
                }
            }
        }
        Ok(())
    }

    pub fn payload(&self) -> PayloadKind {
        self.payload
    }
    pub fn mode(&self) -> TokenizerMode {
        self.mode
    }
    pub fn idf_convention(&self) -> IdfConvention {
        self.idf_convention
    }
    pub fn params(&self) -> Bm25Params {
        self.params
    }
    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }
    pub fn num_terms(&self) -> usize {
        self.vocab.len()
    }
    pub fn num_postings(&self) -> usize {
        self.posting_docs.len()
    }
    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }
    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }
    pub fn term_offsets(&self) -> &[usize] {
        &self.term_offsets
    }
    /// Posting document ordinals; map through [`CsrIndex::doc_id`].
    pub fn posting_docs(&self) -> &[u32] {
        &self.posting_docs
    }
    pub fn posting_weights(&self) -> &[f32] {
        &self.posting_weights
    }
    pub fn term_idfs(&self) -> &[f64] {
        &self.term_idfs
    }
    pub fn term_maxscores(&self) -> &[f64] {
        &self.term_maxscores
    }
    pub fn doc_ids(&self) -> &[DocId] {
        &self.doc_ids
    }
    pub fn doc_lens(&self) -> &[u32] {
        &self.doc_lens
    }
    pub fn doc_id(&self, ordinal: u32) -> DocId {
        self.doc_ids[ordinal as usize]
    }
    pub fn term_id(&self, term: &str) -> Option<usize> {
        self.term_lookup.get(term).map(|&t| t as usize)
    }
    pub fn posting_range(&self, term_id: usize) -> std::ops::Range<usize> {
        self.term_offsets[term_id]..self.term_offsets[term_id + 1]
    }
    pub fn doc_freq(&self, term_id: usize) -> usize {
        self.posting_range(term_id).len()
    }

    /// Postings of `term` as `(doc_id, weight)` pairs.
    pub fn postings(&self, term: &str) -> Vec<(DocId, f32)> {
        self.term_id(term)
            .map(|t| {
                self.posting_range(t)
                    .map(|p| (self.doc_id(self.posting_docs[p]), self.posting_weights[p]))
                    .collect()
            })
            .unwrap_or_default()
    }

    pub(crate) fn require_payload(&self, want: PayloadKind) -> Result<()> {
        if self.payload == want {
            Ok(())
        } else {
            Err(Error::PayloadMismatch {
                expected: want.name(),
                found: self.payload.name(),
            })
        }
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<W> {
        let mut w = Writer::new(w);
        w.bytes(MAGIC)?;
        w.u32(VERSION)?;
        self.write_body(&mut w)?;
        Ok(w.into_inner())
    }

    pub(crate) fn write_body<W: Write>(&self, w: &mut Writer<W>) -> Result<()> {
        w.u8(match self.payload {
            PayloadKind::TermFrequency => 0,
            PayloadKind::Learned => 1,
        })?;
        w.u8(self.mode.code())?;
        w.u8(self.idf_convention.code())?;
        w.u8(0)?;
        w.f64(self.params.k1)?;
        w.f64(self.params.b)?;
        w.f64(self.avgdl)?;
        w.u64(self.doc_ids.len() as u64)?;
        w.u64(self.vocab.len() as u64)?;
        w.u64(self.posting_docs.len() as u64)?;
        for t in &self.vocab {
            w.str(t)?;
        }
        for &o in &self.term_offsets {
            w.u64(o as u64)?;
        }
        for &d in &self.doc_ids {
            w.u32(d)?;
        }
        for &l in &self.doc_lens {
            w.u32(l)?;
        }
        for &d in &self.posting_docs {
            w.u32(d)?;
        }
        for &x in &self.posting_weights {
            w.f32(x)?;
        }
        for &x in &self.term_idfs {
            w.f64(x)?;
        }
        for &x in &self.term_maxscores {
            w.f64(x)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.write_to(Vec::new()).expect("writing to a Vec cannot fail")
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = Reader::new(r);
        r.magic(MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return r.malformed(format!("unsupported index version {version}"));
        }
        Self::read_body(&mut r)
    }

    pub(crate) fn read_body<R: Read>(r: &mut Reader<R>) -> Result<Self> {
        let payload = match r.u8()? {
            0 => PayloadKind::TermFrequency,
            1 => PayloadKind::Learned,
            c => return r.malformed(format!("unknown payload kind {c}")),
        };
        let mode = match TokenizerMode::from_code(r.u8()?) {
            Some(m) => m,
            None => return r.malformed("unknown tokenizer mode"),
        };
        let idf_convention = match IdfConvention::from_code(r.u8()?) {
            Some(c) => c,
            None => return r.malformed("unknown idf convention"),
        };
        r.u8()?;
        let params = Bm25Params { k1: r.f64()?, b: r.f64()? };
        if params.validate().is_err() {
            return r.malformed("invalid BM25 parameters in header");
        }
        let avgdl = r.f64()?;
        let n = r.len(MAX_ELEMS, "document")?;
        let v = r.len(MAX_ELEMS, "term")?;
        let p = r.len(MAX_ELEMS, "posting")?;
        let vocab = (0..v).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
        let term_offsets = (0..=v).map(|_| r.u64().map(|x| x as usize)).collect::<Result<Vec<_>>>()?;
        let doc_ids = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let doc_lens = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let posting_docs = (0..p).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let posting_weights = (0..p).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
        let term_idfs = (0..v).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let term_maxscores = (0..v).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let at = r.offset();
        let mut idx = Self::assemble(
            payload,
            mode,
            idf_convention,
            params,
            CsrParts {
                vocab,
                term_offsets,
                posting_docs,
                posting_weights,
                term_idfs,
                doc_ids,
                doc_lens,
            },
        );
        idx.avgdl = avgdl;
        if let Err(e) = idx.validate() {
            return Err(Error::Malformed {
                offset: at,
                reason: e.to_string(),
            });
        }
        idx.refresh_derived();
        if idx.term_maxscores != term_maxscores {
            return Err(Error::Malformed {
                offset: at,
                reason: "stored MaxScore bounds disagree with postings".into(),
            });
        }
        Ok(idx)
    }
}

fn absorb_chunk<S: AsRef<str>>(
    chunk: &mut Vec<(DocId, S)>,
    mode: TokenizerMode,
    doc_ids: &mut Vec<DocId>,
    doc_lens: &mut Vec<u32>,
    postings: &mut PostingMap,
) {
    if chunk.is_empty() {
        return;
    }
    let mut local: PostingMap = HashMap::new();
    for (id, text) in chunk.drain(..) {
        let ord = doc_ids.len() as u32;
        let terms = tokenize(text.as_ref(), mode);
        let mut tf: HashMap<String, u32> = HashMap::new();
        for t in &terms {
            *tf.entry(t.clone()).or_insert(0) += 1;
        }
        doc_ids.push(id);
        doc_lens.push(terms.len() as u32);
        for (t, c) in tf {
            local.entry(t).or_default().push((ord, c));
        }
    }
    for (t, mut plist) in local {
        plist.sort_unstable_by_key(|&(ord, _)| ord);
        postings.entry(t).or_default().extend(plist);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy_texts() -> Vec<(DocId, &'static str)> {
        vec![
            (0, "cat cat fish"),
            (1, "dog"),
            (2, "cat dog dog"),
            (3, "cat fish"),
            (4, "cat cat cat dog"),
        ]
    }

    #[test]
    fn toy_corpus_layout() {
        let idx = CsrIndex::build(toy_texts(), TokenizerMode::Minimal, 2, Bm25Params::default()).unwrap();
        assert_eq!(idx.vocab(), ["cat", "dog", "fish"]);
        assert_eq!(idx.term_offsets(), [0, 4, 7, 9]);
        assert_eq!(idx.posting_docs(), [0, 2, 3, 4, 1, 2, 4, 0, 3]);
        assert_eq!(idx.posting_weights(), [2.0, 1.0, 1.0, 3.0, 1.0, 2.0, 1.0, 1.0, 1.0]);
        assert_eq!(idx.postings("dog"), vec![(1, 1.0), (2, 2.0), (4, 1.0)]);
        idx.validate().unwrap();
    }

    #[test]
    fn empty_corpus_gives_empty_index() {
        let idx = CsrIndex::build(Vec::<(DocId, String)>::new(), TokenizerMode::PorterFull, 10, Bm25Params::default())
            .unwrap();
        assert_eq!(idx.num_docs(), 0);
        assert_eq!(idx.num_postings(), 0);
        assert_eq!(idx.term_offsets(), [0]);
    }

    #[test]
    fn duplicate_doc_id_is_reported() {
        let err = CsrIndex::build(vec![(3, "a"), (3, "b")], TokenizerMode::Minimal, 10, Bm25Params::default())
            .unwrap_err();
        assert!(matches!(err, Error::DuplicateDocId(3)));
    }

    #[test]
    fn zero_chunk_size_rejected() {
        assert!(CsrIndex::build(toy_texts(), TokenizerMode::Minimal, 0, Bm25Params::default()).is_err());
    }

    #[test]
    fn avgdl_and_doc_lens_are_token_counts() {
        let idx = CsrIndex::build(toy_texts(), TokenizerMode::Minimal, 10, Bm25Params::default()).unwrap();
        assert_eq!(idx.doc_lens(), [3, 1, 3, 2, 4]);
        assert_eq!(idx.avgdl(), 13.0 / 5.0);
    }

    #[test]
    fn postings_count_is_sum_of_distinct_terms() {
        let idx = CsrIndex::build(toy_texts(), TokenizerMode::Minimal, 10, Bm25Params::default()).unwrap();
        let distinct: usize = toy_texts()
            .iter()
            .map(|(_, t)| t.split(' ').collect::<HashSet<_>>().len())
            .sum();
        assert_eq!(idx.num_postings(), distinct);
    }

    #[test]
    fn binary_round_trip() {
        let idx = CsrIndex::build(toy_texts(), TokenizerMode::Minimal, 10, Bm25Params::default()).unwrap();
        let bytes = idx.to_bytes();
        let back = CsrIndex::read_from(&bytes[..]).unwrap();
        assert_eq!(back, idx);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn truncated_file_reports_offset() {
        let bytes = CsrIndex::build(toy_texts(), TokenizerMode::Minimal, 10, Bm25Params::default())
            .unwrap()
            .to_bytes();
        let err = CsrIndex::read_from(&bytes[..bytes.len() - 3]).unwrap_err();
        assert!(matches!(err, Error::Malformed { offset, .. } if offset > 0));
        let err = CsrIndex::read_from(&b"NOTANIDX0000"[..]).unwrap_err();
        assert!(matches!(err, Error::Malformed { .. }));
    }

    #[test]
    fn from_parts_rejects_unsorted_postings() {
        let parts = CsrParts {
            vocab: vec!["a".into()],
            term_offsets: vec![0, 2],
            posting_docs: vec![1, 0],
            posting_weights: vec![1.0, 1.0],
            term_idfs: vec![1.0],
            doc_ids: vec![0, 1],
            doc_lens: vec![1, 1],
        };
        assert!(CsrIndex::from_parts(parts, TokenizerMode::Minimal, Bm25Params::default()).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(Bm25Params::new(-0.1, 0.5).is_err());
        assert!(Bm25Params::new(1.2, 1.1).is_err());
        assert!(Bm25Params::new(0.0, 0.0).is_ok());
    }
}
