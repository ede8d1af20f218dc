//! Dense channel: embedders, an embedding matrix with binary and JSONL
//! persistence, and exact inner-product top-k.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::par::Dispatch;
use crate::ranking::{DocId, RankedList, Scored, TopK};
use crate::tokenizer::{tokenize, TokenizerMode};

pub const DEFAULT_DIM: usize = 384;
pub const MIN_DIM: usize = 8;

const MAGIC: &[u8; 8] = b"MEMIREMB";
const VERSION: u32 = 1;
const NORM_TOLERANCE: f64 = 1e-6;
const DRIFT_WARNING: f64 = 1e-3;

pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    /// Unit-norm embedding of `text`.
    fn embed(&self, text: &str) -> Vec<f32>;
}

// 64-bit FNV-1a with a seed folded into the offset basis.
fn hash64(bytes: &[u8], seed: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    // Final avalanche so low bits depend on every input byte.
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h
}

/// Signed feature hashing of lowercase alphanumeric unigrams, L2-normalized.
/// Text without tokens maps to the first basis vector.
pub fn hash_embed(text: &str, dim: usize, seed: u64) -> Result<Vec<f32>> {
    if dim < MIN_DIM {
        return Err(Error::InvalidParameter(format!("embedding dim {dim} below {MIN_DIM}")));
    }
    Ok(hash_tokens(tokenize(text, TokenizerMode::Minimal).iter(), dim, seed))
}

fn hash_tokens<'a, I: Iterator<Item = &'a String>>(tokens: I, dim: usize, seed: u64) -> Vec<f32> {
    let mut acc = vec![0.0f64; dim];
    for t in tokens {
        let h = hash64(t.as_bytes(), seed);
        let slot = (h % dim as u64) as usize;
        let sign = if (h >> 63) == 0 { 1.0 } else { -1.0 };
        acc[slot] += sign;
    }
    let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        let mut e0 = vec![0.0f32; dim];
        e0[0] = 1.0;
        return e0;
    }
    acc.iter().map(|x| (x / norm) as f32).collect()
}

/// Deterministic stand-in for a neural encoder.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim < MIN_DIM {
            return Err(Error::InvalidParameter(format!("embedding dim {dim} below {MIN_DIM}")));
        }
        Ok(Self { dim, seed })
    }
}

impl Embedder for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Vec<f32> {
        hash_tokens(tokenize(text, TokenizerMode::Minimal).iter(), self.dim, self.seed)
    }
}

/// Hash embedder that first rewrites tokens through a synonym table, so
/// paraphrases that share no surface tokens land on the same features.
/// Stands in for an encoder's semantic matching in synthetic experiments.
#[derive(Debug, Clone)]
pub struct ConceptEmbedder {
    pub inner: HashEmbedder,
    pub concepts: HashMap<String, String>,
}

impl Embedder for ConceptEmbedder {
    fn dim(&self) -> usize {
        self.inner.dim
    }

    fn embed(&self, text: &str) -> Vec<f32> {
        let toks: Vec<String> = tokenize(text, TokenizerMode::Minimal)
            .into_iter()
            .map(|t| self.concepts.get(&t).cloned().unwrap_or(t))
            .collect();
        hash_tokens(toks.iter(), self.inner.dim, self.inner.seed)
    }
}

fn l2(v: &[f32]) -> f64 {
    v.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    doc_ids: Vec<DocId>,
    seen: HashSet<DocId>,
    // Row-major, one row per doc.
    data: Vec<f32>,
}

#[derive(Serialize, Deserialize)]
struct JsonRow {
    doc_id: DocId,
    vector: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("embedding dim must be positive".into()));
        }
        Ok(Self {
            dim,
            doc_ids: Vec::new(),
            seen: HashSet::new(),
            data: Vec::new(),
        })
    }

    /// Embeds every `(id, text)` pair.
    pub fn from_texts<'a, I>(embedder: &dyn Embedder, docs: I, dispatch: Dispatch) -> Result<Self>
    where
        I: IntoIterator<Item = (DocId, &'a str)>,
    {
        let docs: Vec<(DocId, &str)> = docs.into_iter().collect();
        let rows = dispatch.map(&docs, |(_, t)| embedder.embed(t));
        let mut m = Self::new(embedder.dim())?;
        for ((id, _), v) in docs.iter().zip(rows) {
            m.push(*id, v)?;
        }
        Ok(m)
    }

    /// Appends a row, which must already be unit norm.
    pub fn push(&mut self, id: DocId, v: Vec<f32>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        if (l2(&v) - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidParameter(format!("vector for doc {id} is not unit norm")));
        }
        if !self.seen.insert(id) {
            return Err(Error::DuplicateDocId(id));
        }
        self.doc_ids.push(id);
        self.data.extend_from_slice(&v);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn doc_ids(&self) -> &[DocId] {
        &self.doc_ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Exact top-k by inner product, accumulated in f64 in dimension order.
    pub fn dense_topk(&self, query: &[f32], k: usize) -> Result<RankedList> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: query.len(),
            });
        }
        if k == 0 {
            return Err(Error::ZeroK);
        }
        let mut top = TopK::new(k);
        for (i, &id) in self.doc_ids.iter().enumerate() {
            top.push(Scored::new(id, dot(self.row(i), query)));
        }
        Ok(top.into_ranked())
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<W> {
        let mut w = Writer::new(w);
        w.bytes(MAGIC)?;
        w.u32(VERSION)?;
        w.u32(self.dim as u32)?;
        w.u64(self.doc_ids.len() as u64)?;
        for &id in &self.doc_ids {
            w.u32(id)?;
        }
        for &x in &self.data {
            w.f32(x)?;
        }
        Ok(w.into_inner())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.write_to(Vec::new()).expect("writing to memory cannot fail")
    }

    /// Reads the binary format. Rows whose norm drifts from 1 are
    /// re-normalized; drift above 1e-3 is logged.
    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = Reader::new(r);
        r.magic(MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return r.malformed(format!("unsupported embedding version {version}"));
        }
        let dim = r.u32()? as usize;
        if dim == 0 {
            return r.malformed("embedding dim is zero");
        }
        let n = r.len(1 << 32, "row")?;
        let mut doc_ids = Vec::with_capacity(n.min(1 << 20));
        let mut seen = HashSet::new();
        for _ in 0..n {
            let at = r.offset();
            let id = r.u32()?;
            if !seen.insert(id) {
                return Err(Error::Malformed {
                    offset: at,
                    reason: format!("duplicate doc id {id}"),
                });
            }
            doc_ids.push(id);
        }
        let mut rows = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            let at = r.offset();
            let mut v = Vec::with_capacity(dim);
            for _ in 0..dim {
                v.push(r.f32()?);
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Malformed {
                    offset: at,
                    reason: "non-finite vector component".into(),
                });
            }
            rows.push(v);
        }
        Self::assemble_normalized(dim, doc_ids.into_iter().zip(rows))
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, &id) in self.doc_ids.iter().enumerate() {
            serde_json::to_writer(
                &mut w,
                &JsonRow {
                    doc_id: id,
                    vector: self.row(i).to_vec(),
                },
            )?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut rows = Vec::new();
        let mut dim = None;
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: String| Error::MalformedLine { line: n + 1, reason };
            let row: JsonRow = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
            match dim {
                None => dim = Some(row.vector.len()),
                Some(d) if d != row.vector.len() => {
                    return Err(bad(format!("vector length {} differs from {d}", row.vector.len())))
                }
                _ => {}
            }
            rows.push((row.doc_id, row.vector));
        }
        let dim = dim.ok_or_else(|| Error::MalformedLine {
            line: 0,
            reason: "no vectors".into(),
        })?;
        Self::assemble_normalized(dim, rows)
    }

    fn assemble_normalized<I: IntoIterator<Item = (DocId, Vec<f32>)>>(dim: usize, rows: I) -> Result<Self> {
        let mut m = Self::new(dim)?;
        for (id, mut v) in rows {
            let n = l2(&v);
            if n == 0.0 {
                return Err(Error::InvalidParameter(format!("zero vector for doc {id}")));
            }
            if (n - 1.0).abs() > NORM_TOLERANCE {
                if (n - 1.0).abs() > DRIFT_WARNING {
                    log::warn!("doc {id}: vector norm {n:.6} re-normalized on load");
                }
                v.iter_mut().for_each(|x| *x = (*x as f64 / n) as f32);
            }
            m.push(id, v)?;
        }
        Ok(m)
    }
}

#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    let mut s = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        s += *x as f64 * *y as f64;
    }
    s
}
