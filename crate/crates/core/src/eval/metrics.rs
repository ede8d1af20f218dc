//! Per-query metrics. Each returns `None` when the query has no relevant
//! document, so callers can exclude it from means and report how many were
//! excluded.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ranking::{DocId, RankedList};

/// Graded judgments for one query.
pub type Rels = HashMap<DocId, u32>;

fn relevant(rels: &Rels) -> impl Iterator<Item = (&DocId, &u32)> {
    rels.iter().filter(|(_, &r)| r > 0)
}

fn dcg<G: Fn(u32) -> f64>(grades: impl Iterator<Item = u32>, gain: G) -> f64 {
    let mut s = 0.0;
    for (i, r) in grades.enumerate() {
        s += gain(r) / ((i + 2) as f64).log2();
    }
    s
}

fn ndcg_with<G: Fn(u32) -> f64 + Copy>(ranked: &RankedList, rels: &Rels, k: usize, gain: G) -> Option<f64> {
    assert!(k >= 1, "cutoff must be at least 1");
    let mut ideal: Vec<u32> = relevant(rels).map(|(_, &r)| r).collect();
    if ideal.is_empty() {
        return None;
    }
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(ideal.into_iter().take(k), gain);
    let got = dcg(ranked.docs().take(k).map(|d| rels.get(&d).copied().unwrap_or(0)), gain);
    Some(got / idcg)
}

/// nDCG@k with exponential gain `2^rel − 1` and log2 discounts.
pub fn ndcg_at_k(ranked: &RankedList, rels: &Rels, k: usize) -> Option<f64> {
    ndcg_with(ranked, rels, k, |r| 2f64.powi(r as i32) - 1.0)
}

/// nDCG@k with linear gain `rel`. Reference variant only; it disagrees with
/// [`ndcg_at_k`] whenever grades exceed 1.
pub fn linear_gain_ndcg(ranked: &RankedList, rels: &Rels, k: usize) -> Option<f64> {
    ndcg_with(ranked, rels, k, |r| r as f64)
}

pub fn recall_at_k(ranked: &RankedList, rels: &Rels, k: usize) -> Option<f64> {
    let total = relevant(rels).count();
    if total == 0 {
        return None;
    }
    let found = ranked.docs().take(k).filter(|d| rels.get(d).is_some_and(|&r| r > 0)).count();
    Some(found as f64 / total as f64)
}

pub fn hit_at_k(ranked: &RankedList, rels: &Rels, k: usize) -> Option<f64> {
    recall_at_k(ranked, rels, k).map(|r| if r > 0.0 { 1.0 } else { 0.0 })
}

pub fn mrr_at_k(ranked: &RankedList, rels: &Rels, k: usize) -> Option<f64> {
    relevant(rels).next()?;
    Some(
        ranked
            .docs()
            .take(k)
            .position(|d| rels.get(&d).is_some_and(|&r| r > 0))
            .map_or(0.0, |i| 1.0 / (i + 1) as f64),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Ndcg(usize),
    Recall(usize),
    Mrr(usize),
    Hit(usize),
}

impl Metric {
    pub fn eval(self, ranked: &RankedList, rels: &Rels) -> Option<f64> {
        match self {
            Metric::Ndcg(k) => ndcg_at_k(ranked, rels, k),
            Metric::Recall(k) => recall_at_k(ranked, rels, k),
            Metric::Mrr(k) => mrr_at_k(ranked, rels, k),
            Metric::Hit(k) => hit_at_k(ranked, rels, k),
        }
    }

    pub fn cutoff(self) -> usize {
        match self {
            Metric::Ndcg(k) | Metric::Recall(k) | Metric::Mrr(k) | Metric::Hit(k) => k,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Ndcg(k) => write!(f, "ndcg@{k}"),
            Metric::Recall(k) => write!(f, "recall@{k}"),
            Metric::Mrr(k) => write!(f, "mrr@{k}"),
            Metric::Hit(k) => write!(f, "hit@{k}"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown metric {s:?}; expected e.g. ndcg@10"));
        let (name, k) = s.split_once('@').ok_or_else(bad)?;
        let k: usize = k.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        match name.to_ascii_lowercase().as_str() {
            "ndcg" => Ok(Metric::Ndcg(k)),
            "recall" | "r" => Ok(Metric::Recall(k)),
            "mrr" => Ok(Metric::Mrr(k)),
            "hit" => Ok(Metric::Hit(k)),
            _ => Err(bad()),
        }
    }
}

/// Mean over defined per-query values plus the excluded count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    pub evaluated: usize,
    pub excluded: usize,
}

impl MetricSummary {
    pub fn from_values<I: IntoIterator<Item = Option<f64>>>(values: I) -> Self {
        let (mut sum, mut n, mut skipped) = (0.0, 0usize, 0usize);
        for v in values {
            match v {
                Some(x) => {
                    sum += x;
                    n += 1;
                }
                None => skipped += 1,
            }
        }
        Self {
            mean: if n == 0 { 0.0 } else { sum / n as f64 },
            evaluated: n,
            excluded: skipped,
        }
    }
}
